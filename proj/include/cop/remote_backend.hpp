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

// Client for OpenAI-compatible completion servers that return top-N token
// log-probabilities (llama.cpp server, vLLM, TGI). Only the next position is
// ever requested, so every call is a single-token completion.

#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "cop/backend.hpp"

namespace cop {

struct RemoteConfig {
  std::string endpoint;  // e.g. http://127.0.0.1:8080
  std::string auth_token;
  std::string model;
  std::string completions_path = "/v1/completions";
  int top_logprobs = 20;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{250};
  std::chrono::seconds timeout{30};
};

struct RemoteProbeRequest {
  std::string context;
  int top_logprobs = 20;
  int max_tokens = 1;
  bool echo = false;
};

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;
  double probability = 0.0;  // exp(logprob)
};

// Parses the top-N alternatives of the last position in a completion
// payload. Accepts the legacy {"top_logprobs": [{tok: lp}]} layout and the
// newer {"content": [{"top_logprobs": [{"token", "logprob"}]}]} one.
// Throws kProtocolError. Result is sorted by descending log-probability.
std::vector<TokenLogprob> parse_logprobs_payload(std::string_view body);

struct FetchStats {
  int attempts = 0;
};

// POSTs the request, retrying transport failures and 5xx/429 responses with
// exponential backoff. Throws kBackendUnavailable after the last attempt.
std::vector<TokenLogprob> fetch_logprobs(const RemoteConfig& config,
                                         const RemoteProbeRequest& request,
                                         FetchStats* stats = nullptr);

// Remote "tokens" are the token strings the server reports, interned locally.
// The rendered prompt is kept as one opaque cell.
class RemoteBackend final : public ModelBackend {
 public:
  explicit RemoteBackend(RemoteConfig config);

  BackendDescriptor descriptor() const override;
  std::vector<TokenId> tokenize(std::string_view text) const override;
  std::string detokenize(std::span<const TokenId> tokens) const override;
  // Uses the server's /tokenize route when available; servers without it are
  // trusted to encode each label as one token.
  LabelResolution resolve_label(std::string_view label) const override;
  std::optional<TokenId> end_of_sequence() const override { return eos_; }
  TokenDistribution next_distribution(const GenerationState& state) const override;

  const RemoteConfig& config() const noexcept { return config_; }

 private:
  TokenId intern(std::string_view text) const;

  RemoteConfig config_;
  TokenId eos_;
  mutable std::mutex mutex_;
  mutable std::vector<std::string> texts_;
  mutable std::unordered_map<std::string, TokenId> ids_;
};

// In-process completion server used for contract checks and tests. Probe
// contexts (ending in "(") get a fixed answer distribution that omits the last
// label; other contexts replay a short canned completion.
class StubServer {
 public:
  struct Options {
    std::vector<std::pair<std::string, double>> answer_logprobs = {
        {"A", -0.6931471805599453}, {"B", -1.2039728043259361}, {"C", -2.3025850929940455},
        {" The", -4.605170185988091}, {" I", -5.298317366548036}};
    std::string completion = " The sky is blue. So, the answer is (A).";
    std::vector<std::string> multi_token_labels;  // /tokenize reports 2 tokens for these
  };

  StubServer();
  explicit StubServer(Options options);
  ~StubServer();
  StubServer(const StubServer&) = delete;
  StubServer& operator=(const StubServer&) = delete;

  std::string endpoint() const;
  int request_count() const;
  // The next n completion requests answer HTTP 500.
  void fail_next(int n);
  // Completion responses omit the log-probability field while set.
  void set_malformed(bool malformed);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct BackendCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct BackendCheckReport {
  std::string endpoint;
  std::vector<BackendCheck> checks;

  bool passed() const;
};

// Contract self-test against an endpoint. With a stub, fault-injection checks
// (retry, malformed payload) run as well.
BackendCheckReport run_backend_check(const RemoteConfig& config,
                                     const std::vector<std::string>& labels,
                                     StubServer* stub = nullptr);

}  // namespace cop
