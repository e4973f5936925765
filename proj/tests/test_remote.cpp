// Copyright 2026 The cotprobe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include "cop/error.hpp"
#include "cop/remote_backend.hpp"
#include "doctest.h"

using namespace cop;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no exception");
  return ErrorCode::kInvalidArgument;
}

RemoteConfig fast_config(const StubServer& stub) {
  RemoteConfig c;
  c.endpoint = stub.endpoint();
  c.initial_backoff = std::chrono::milliseconds(5);
  c.top_logprobs = 5;
  return c;
}

}  // namespace

TEST_CASE("parse_logprobs_payload, legacy layout") {
  const std::string body = R"({"choices": [{"text": "A", "logprobs": {"tokens": ["A"],
    "top_logprobs": [{"A": -0.5, "B": -1.5, "C": -2.0, " The": -3.0, "D": -4.0}]}}]})";
  const auto pairs = parse_logprobs_payload(body);
  REQUIRE(pairs.size() == 5);
  CHECK(pairs[0].token == "A");
  CHECK(pairs[4].token == "D");
  for (const auto& p : pairs) CHECK(p.probability == std::exp(p.logprob));
}

TEST_CASE("parse_logprobs_payload, content layout") {
  const std::string body = R"({"choices": [{"logprobs": {"content": [{"token": "x", "logprob": -0.1,
    "top_logprobs": [{"token": "B", "logprob": -0.2}, {"token": "A", "logprob": -1.9}]}]}}]})";
  const auto pairs = parse_logprobs_payload(body);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].token == "B");
  CHECK(pairs[1].probability == std::exp(-1.9));
}

TEST_CASE("parse_logprobs_payload rejects malformed payloads") {
  CHECK(code_of([] { parse_logprobs_payload(R"({"choices": [{"text": "A"}]})"); }) == ErrorCode::kProtocolError);
  CHECK(code_of([] { parse_logprobs_payload("not json"); }) == ErrorCode::kProtocolError);
  CHECK(code_of([] { parse_logprobs_payload(R"({"choices": []})"); }) == ErrorCode::kProtocolError);
}

TEST_CASE("fetch_logprobs retries transient failures") {
  StubServer stub;
  const auto cfg = fast_config(stub);
  RemoteProbeRequest req;
  req.context = "Question: x\nAnswer: So, the answer is (";

  FetchStats stats;
  CHECK(fetch_logprobs(cfg, req, &stats).size() == 5);
  CHECK(stats.attempts == 1);

  stub.fail_next(1);
  stats = {};
  CHECK(fetch_logprobs(cfg, req, &stats).size() == 5);
  CHECK(stats.attempts == 2);

  stub.fail_next(5);
  CHECK(code_of([&] { fetch_logprobs(cfg, req); }) == ErrorCode::kBackendUnavailable);
  stub.fail_next(0);

  stub.set_malformed(true);
  CHECK(code_of([&] { fetch_logprobs(cfg, req); }) == ErrorCode::kProtocolError);
  stub.set_malformed(false);
}

TEST_CASE("unreachable endpoints are reported as BackendUnavailable") {
  RemoteConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1";
  cfg.initial_backoff = std::chrono::milliseconds(1);
  cfg.timeout = std::chrono::seconds(1);
  CHECK(code_of([&] { fetch_logprobs(cfg, RemoteProbeRequest{"x", 5, 1, false}); }) ==
        ErrorCode::kBackendUnavailable);
}

TEST_CASE("remote backend probe applies the floor") {
  StubServer stub;
  RemoteBackend backend(fast_config(stub));
  const auto targets = validate_target_set(std::vector<std::string>{"A", "B", "C", "D"}, backend);
  auto state = backend.begin("Question: x\nAnswer:", "q", 0);
  const auto snapshot = state;
  const auto r = probe_distribution(backend, state, backend.tokenize(" So, the answer is ("), targets);
  CHECK(r.row[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(r.row[1] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(r.row[2] == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(r.row[3] == 1e-6);
  CHECK(r.missing_labels == std::vector<std::string>{"D"});
  CHECK(state == snapshot);
  CHECK(backend.descriptor().top_logprobs_limit == 5);
  CHECK_FALSE(backend.descriptor().supports_full_distribution);
}

TEST_CASE("remote backend generates the canned completion") {
  StubServer stub;
  RemoteBackend backend(fast_config(stub));
  auto state = backend.begin("Question: x\nAnswer:", "q", 0);
  StepStopRule stop;
  const auto s = generate_step(backend, state, DecodeConfig{}, stop);
  CHECK(s.text == " The sky is blue. ");
}

TEST_CASE("multi-token labels are detected through /tokenize") {
  StubServer::Options o;
  o.multi_token_labels = {"carbonated"};
  StubServer stub(o);
  RemoteBackend backend(fast_config(stub));
  CHECK(code_of([&] { validate_target_set(std::vector<std::string>{"A", "carbonated"}, backend); }) ==
        ErrorCode::kMultiTokenLabel);
}

TEST_CASE("run_backend_check against the stub") {
  StubServer stub;
  const auto report = run_backend_check(fast_config(stub), {"A", "B", "C", "D"}, &stub);
  CHECK(report.passed());
  std::vector<std::string> names;
  for (const auto& c : report.checks) names.push_back(c.name);
  CHECK(names == std::vector<std::string>{"fetch", "row-extraction", "partial-floor", "generate", "retry",
                                          "protocol-error"});
}
