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

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "cop/remote_backend.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "cop/error.hpp"
#include "cop/vocabulary.hpp"

namespace cop {

namespace {

using nlohmann::json;

const std::vector<std::string>& eos_strings() {
  static const std::vector<std::string> kEos = {"</s>", "<|endoftext|>", "<|eot_id|>",
                                                "<|im_end|>", "<eos>", "<|end|>"};
  return kEos;
}

struct ParsedEndpoint {
  std::string scheme_host_port;
  std::string base_path;
};

ParsedEndpoint parse_endpoint(const std::string& endpoint) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, "endpoint needs a scheme: " + endpoint);
  }
  const auto slash = endpoint.find('/', scheme + 3);
  if (slash == std::string::npos) return {endpoint, ""};
  std::string base = endpoint.substr(slash);
  while (!base.empty() && base.back() == '/') base.pop_back();
  return {endpoint.substr(0, slash), base};
}

httplib::Client make_client(const RemoteConfig& config, std::string& base_path) {
  const auto parsed = parse_endpoint(config.endpoint);
  base_path = parsed.base_path;
  httplib::Client cli(parsed.scheme_host_port);
  cli.set_connection_timeout(config.timeout);
  cli.set_read_timeout(config.timeout);
  cli.set_write_timeout(config.timeout);
  if (!config.auth_token.empty()) cli.set_bearer_token_auth(config.auth_token);
  return cli;
}

void read_top_list(const json& top, std::vector<TokenLogprob>& out) {
  if (top.is_object()) {
    for (const auto& [tok, lp] : top.items()) out.push_back({tok, lp.get<double>(), 0.0});
  } else if (top.is_array()) {
    for (const auto& e : top) out.push_back({e.at("token").get<std::string>(), e.at("logprob").get<double>(), 0.0});
  } else {
    throw Error(ErrorCode::kProtocolError, "top_logprobs has unexpected type");
  }
}

}  // namespace

std::vector<TokenLogprob> parse_logprobs_payload(std::string_view body) {
  std::vector<TokenLogprob> out;
  try {
    const auto doc = json::parse(body);
    const auto& choice = doc.at("choices").at(0);
    if (!choice.contains("logprobs") || choice.at("logprobs").is_null()) {
      throw Error(ErrorCode::kProtocolError, "payload has no logprobs field");
    }
    const auto& lp = choice.at("logprobs");
    if (lp.contains("top_logprobs")) {
      const auto& positions = lp.at("top_logprobs");
      if (!positions.is_array() || positions.empty()) {
        throw Error(ErrorCode::kProtocolError, "empty top_logprobs");
      }
      read_top_list(positions.back(), out);
    } else if (lp.contains("content")) {
      const auto& positions = lp.at("content");
      if (!positions.is_array() || positions.empty()) {
        throw Error(ErrorCode::kProtocolError, "empty logprobs content");
      }
      read_top_list(positions.back().at("top_logprobs"), out);
    } else {
      throw Error(ErrorCode::kProtocolError, "logprobs has neither top_logprobs nor content");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kProtocolError, e.what());
  }
  for (auto& t : out) {
    if (!std::isfinite(t.logprob) && t.logprob != -INFINITY) {
      throw Error(ErrorCode::kProtocolError, "non-finite log-probability");
    }
    if (t.logprob > 1e-9) throw Error(ErrorCode::kProtocolError, "positive log-probability");
    t.probability = std::min(1.0, std::exp(t.logprob));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.logprob != b.logprob ? a.logprob > b.logprob : a.token < b.token;
  });
  return out;
}

std::vector<TokenLogprob> fetch_logprobs(const RemoteConfig& config,
                                         const RemoteProbeRequest& request, FetchStats* stats) {
  if (config.endpoint.empty()) throw Error(ErrorCode::kInvalidArgument, "no endpoint configured");
  std::string base;
  auto cli = make_client(config, base);
  json body = {{"prompt", request.context},
               {"max_tokens", request.max_tokens},
               {"logprobs", request.top_logprobs},
               {"echo", request.echo},
               {"temperature", 0.0}};
  if (!config.model.empty()) body["model"] = config.model;
  const std::string payload = body.dump();

  std::string last_error;
  const int attempts = std::max(1, config.max_attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    if (stats) stats->attempts = attempt;
    auto res = cli.Post(base + config.completions_path, payload, "application/json");
    if (res && res->status == 200) return parse_logprobs_payload(res->body);
    const bool transient = !res || res->status >= 500 || res->status == 429;
    last_error = res ? "HTTP " + std::to_string(res->status) : httplib::to_string(res.error());
    if (!transient) break;
    if (attempt < attempts) std::this_thread::sleep_for(config.initial_backoff * (1 << (attempt - 1)));
  }
  throw Error(ErrorCode::kBackendUnavailable, config.endpoint + ": " + last_error);
}

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
  eos_ = intern("</s>");
}

TokenId RemoteBackend::intern(std::string_view text) const {
  std::lock_guard lock(mutex_);
  auto key = std::string(text);
  if (std::find(eos_strings().begin(), eos_strings().end(), key) != eos_strings().end()) {
    key = "</s>";
  }
  if (auto it = ids_.find(key); it != ids_.end()) return it->second;
  const auto id = static_cast<TokenId>(texts_.size());
  texts_.push_back(key);
  ids_.emplace(std::move(key), id);
  return id;
}

BackendDescriptor RemoteBackend::descriptor() const {
  return {"remote:" + config_.endpoint, 0, false, config_.top_logprobs};
}

std::vector<TokenId> RemoteBackend::tokenize(std::string_view text) const {
  if (text.empty()) return {};
  return {intern(text)};
}

std::string RemoteBackend::detokenize(std::span<const TokenId> tokens) const {
  std::lock_guard lock(mutex_);
  std::string out;
  for (TokenId t : tokens) {
    if (t != eos_) out += texts_.at(static_cast<std::size_t>(t));
  }
  return out;
}

LabelResolution RemoteBackend::resolve_label(std::string_view label) const {
  if (label.empty()) return {LabelStatus::kUnknown, -1};
  std::string base;
  auto cli = make_client(config_, base);
  const json body = {{"content", std::string(label)}, {"add_special", false}};
  if (auto res = cli.Post(base + "/tokenize", body.dump(), "application/json");
      res && res->status == 200) {
    try {
      const auto n = json::parse(res->body).at("tokens").size();
      if (n == 0) return {LabelStatus::kUnknown, -1};
      if (n > 1) return {LabelStatus::kMultiToken, -1};
    } catch (const json::exception&) {
      // Unrecognised tokenize payload: fall through to the trusting path.
    }
  }
  return {LabelStatus::kSingleToken, intern(label)};
}

TokenDistribution RemoteBackend::next_distribution(const GenerationState& state) const {
  RemoteProbeRequest req;
  req.context = detokenize(state.context_tokens);
  req.top_logprobs = config_.top_logprobs;
  const auto top = fetch_logprobs(config_, req);
  std::vector<std::pair<TokenId, double>> entries;
  for (const auto& t : top) {
    const TokenId id = intern(t.token);
    auto it = std::find_if(entries.begin(), entries.end(), [&](const auto& e) { return e.first == id; });
    if (it == entries.end()) {
      entries.emplace_back(id, t.probability);
    } else {
      it->second += t.probability;  // several end-of-sequence spellings
    }
  }
  return TokenDistribution::partial(std::move(entries));
}

struct StubServer::Impl {
  Options options;
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> requests{0};
  std::atomic<int> failures{0};
  std::atomic<bool> malformed{false};

  json completion_response(const std::string& prompt, int n) const {
    std::vector<std::pair<std::string, double>> top;
    if (!prompt.empty() && prompt.back() == '(') {
      top = options.answer_logprobs;
    } else {
      const auto pieces = Vocabulary::pre_split(options.completion);
      std::size_t offset = options.completion.size();
      std::size_t idx = pieces.size();
      // Longest completion prefix the prompt already ends with, on a piece boundary.
      while (true) {
        const auto done = options.completion.substr(0, offset);
        if (prompt.size() >= done.size() &&
            prompt.compare(prompt.size() - done.size(), done.size(), done) == 0) {
          break;
        }
        --idx;
        offset -= pieces[idx].size();
      }
      top.emplace_back(idx < pieces.size() ? pieces[idx] : "</s>", std::log(0.9));
      top.emplace_back(idx < pieces.size() ? "</s>" : " The", std::log(0.05));
    }
    std::stable_sort(top.begin(), top.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (static_cast<int>(top.size()) > n) top.resize(static_cast<std::size_t>(std::max(n, 1)));
    json alts = json::object();
    for (const auto& [tok, lp] : top) alts[tok] = lp;
    return {{"object", "text_completion"},
            {"choices",
             {{{"index", 0},
               {"text", top.front().first},
               {"finish_reason", "length"},
               {"logprobs",
                {{"tokens", {top.front().first}},
                 {"token_logprobs", {top.front().second}},
                 {"top_logprobs", {alts}}}}}}}};
  }
};

StubServer::StubServer() : StubServer(Options{}) {}

StubServer::StubServer(Options options) : impl_(std::make_unique<Impl>()) {
  impl_->options = std::move(options);
  Impl* impl = impl_.get();
  impl->server.Post("/v1/completions", [impl](const httplib::Request& req, httplib::Response& res) {
    ++impl->requests;
    int pending = impl->failures.load();
    while (pending > 0 && !impl->failures.compare_exchange_weak(pending, pending - 1)) {
    }
    if (pending > 0) {
      res.status = 500;
      res.set_content(R"({"error":"injected fault"})", "application/json");
      return;
    }
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception&) {
      res.status = 400;
      return;
    }
    if (impl->malformed) {
      res.set_content(R"({"choices":[{"index":0,"text":"A"}]})", "application/json");
      return;
    }
    const auto prompt = body.value("prompt", std::string());
    const int n = body.value("logprobs", 5);
    res.set_content(impl->completion_response(prompt, n).dump(), "application/json");
  });
  impl->server.Post("/tokenize", [impl](const httplib::Request& req, httplib::Response& res) {
    const auto content = json::parse(req.body).value("content", std::string());
    const auto& multi = impl->options.multi_token_labels;
    std::size_t n = Vocabulary::pre_split(content).size();
    if (std::find(multi.begin(), multi.end(), content) != multi.end()) n = 2;
    json tokens = json::array();
    for (std::size_t i = 0; i < n; ++i) tokens.push_back(static_cast<int>(i + 1));
    res.set_content(json{{"tokens", tokens}}.dump(), "application/json");
  });
  impl->port = impl->server.bind_to_any_port("127.0.0.1");
  if (impl->port <= 0) throw Error(ErrorCode::kBackendUnavailable, "stub server could not bind");
  impl->thread = std::thread([impl] { impl->server.listen_after_bind(); });
  impl->server.wait_until_ready();
}

StubServer::~StubServer() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string StubServer::endpoint() const { return "http://127.0.0.1:" + std::to_string(impl_->port); }
int StubServer::request_count() const { return impl_->requests.load(); }
void StubServer::fail_next(int n) { impl_->failures = n; }
void StubServer::set_malformed(bool malformed) { impl_->malformed = malformed; }

bool BackendCheckReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

BackendCheckReport run_backend_check(const RemoteConfig& config,
                                     const std::vector<std::string>& labels, StubServer* stub) {
  BackendCheckReport report;
  report.endpoint = config.endpoint;
  const std::string prompt = "Question: Which color is the sky?\n(A) blue (B) red (C) green (D) black\nAnswer:";
  const std::string probe = " So, the answer is (";
  auto run = [&](const std::string& name, auto&& body) {
    BackendCheck c{name, false, ""};
    try {
      c.detail = body(c.passed);
    } catch (const std::exception& e) {
      c.passed = false;
      c.detail = e.what();
    }
    report.checks.push_back(std::move(c));
  };

  RemoteProbeRequest req{prompt + probe, config.top_logprobs, 1, false};
  std::vector<TokenLogprob> raw;
  run("fetch", [&](bool& ok) {
    raw = fetch_logprobs(config, req);
    double sum = 0.0;
    bool in_range = true;
    for (const auto& t : raw) {
      sum += t.probability;
      in_range = in_range && t.probability > 0.0 && t.probability <= 1.0;
    }
    ok = !raw.empty() && in_range && static_cast<int>(raw.size()) <= config.top_logprobs &&
         sum <= 1.0 + 1e-6;
    return std::to_string(raw.size()) + " alternatives, mass " + std::to_string(sum);
  });

  RemoteBackend backend(config);
  run("row-extraction", [&](bool& ok) {
    const auto targets = validate_target_set(labels, backend);
    auto state = backend.begin(prompt, "check", 0);
    const auto before = state;
    const auto probe_tokens = backend.tokenize(probe);
    const auto result = probe_distribution(backend, state, probe_tokens, targets);
    ok = state == before;
    std::string detail;
    for (std::size_t j = 0; j < targets.size(); ++j) {
      auto it = std::find_if(raw.begin(), raw.end(), [&](const auto& t) { return t.token == targets[j].label; });
      const bool missing = it == raw.end();
      if (missing) {
        ok = ok && result.row[j] <= kMissingTokenFloor &&
             std::find(result.missing_labels.begin(), result.missing_labels.end(), targets[j].label) !=
                 result.missing_labels.end();
      } else {
        ok = ok && result.row[j] == it->probability;
      }
      detail += targets[j].label + "=" + std::to_string(result.row[j]) + (missing ? "(floor) " : " ");
    }
    return detail;
  });

  run("partial-floor", [&](bool& ok) {
    const auto targets = validate_target_set(labels, backend);
    auto state = backend.begin(prompt, "check", 0);
    const auto result = probe_distribution(backend, state, backend.tokenize(probe), targets);
    ok = true;
    if (!result.partial()) return std::string("all labels listed; floor path not exercised");
    for (std::size_t j = 0; j < targets.size(); ++j) {
      const bool floored = std::find(result.missing_labels.begin(), result.missing_labels.end(),
                                     targets[j].label) != result.missing_labels.end();
      if (floored) ok = ok && result.row[j] > 0.0 && result.row[j] <= kMissingTokenFloor;
    }
    std::string missing;
    for (const auto& m : result.missing_labels) missing += m + " ";
    return "PartialDistribution for " + missing;
  });

  run("generate", [&](bool& ok) {
    auto state = backend.begin(prompt, "check", 0);
    DecodeConfig cfg;
    cfg.max_tokens_per_step = 32;
    const auto step = generate_step(backend, state, cfg, StepStopRule{});
    ok = !step.text.empty() || step.finished;
    return "step: \"" + step.text + "\"";
  });

  if (stub != nullptr) {
    run("retry", [&](bool& ok) {
      RemoteConfig fast = config;
      fast.initial_backoff = std::min(fast.initial_backoff, std::chrono::milliseconds(20));
      stub->fail_next(1);
      FetchStats stats;
      const auto got = fetch_logprobs(fast, req, &stats);
      ok = stats.attempts == 2 && !got.empty();
      stub->fail_next(3);
      try {
        fetch_logprobs(fast, req, &stats);
        ok = false;
      } catch (const Error& e) {
        ok = ok && e.code() == ErrorCode::kBackendUnavailable && stats.attempts == 3;
      }
      stub->fail_next(0);
      return "500 then 200 succeeded on attempt 2; persistent 500 gave up after " +
             std::to_string(stats.attempts);
    });
    run("protocol-error", [&](bool& ok) {
      stub->set_malformed(true);
      try {
        fetch_logprobs(config, req);
        ok = false;
      } catch (const Error& e) {
        ok = e.code() == ErrorCode::kProtocolError;
      }
      stub->set_malformed(false);
      return std::string("payload without logprobs rejected");
    });
  } else {
    report.checks.push_back({"retry", true, "not exercised without fault injection"});
  }
  return report;
}

}  // namespace cop
