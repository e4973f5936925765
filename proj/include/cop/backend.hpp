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

// The model-access contract. A backend turns a GenerationState (context
// tokens plus one cache cell per token) into a next-token distribution;
// generation and probing are written once on top of that.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cop/segment.hpp"
#include "cop/trace.hpp"

namespace cop {

inline constexpr double kMissingTokenFloor = 1e-6;

class TokenDistribution {
 public:
  // Full softmax over the vocabulary.
  static TokenDistribution full(std::vector<double> probs);
  // Only the top-N entries are known (remote servers).
  static TokenDistribution partial(std::vector<std::pair<TokenId, double>> entries);

  bool complete() const noexcept { return complete_; }
  // nullopt when the token is not listed by a partial distribution.
  std::optional<double> probability(TokenId token) const;
  // Non-zero entries in token-id order.
  std::vector<std::pair<TokenId, double>> entries() const;
  const std::vector<double>& dense() const noexcept { return dense_; }

 private:
  bool complete_ = true;
  std::vector<double> dense_;
  std::vector<std::pair<TokenId, double>> sparse_;
};

// Opaque per-token cache cell. `key` folds in every earlier cell, so a cell
// is only valid after the exact prefix that produced it.
struct CacheCell {
  TokenId token = -1;
  std::uint64_t key = 0;

  bool operator==(const CacheCell&) const = default;
};

// Single-owner decoding state.
struct GenerationState {
  std::string context_key;  // routes scripted replay; question id in practice
  std::uint64_t seed = 0;
  std::size_t prompt_length = 0;  // tokens belonging to the rendered prompt
  std::vector<TokenId> context_tokens;
  std::vector<CacheCell> cache_entries;
  std::mt19937_64 rng;

  bool operator==(const GenerationState&) const = default;
};

struct BackendDescriptor {
  std::string backend_id;
  std::size_t vocabulary_size = 0;
  bool supports_full_distribution = true;
  std::optional<int> top_logprobs_limit;  // set iff !supports_full_distribution
};

enum class LabelStatus { kSingleToken, kMultiToken, kUnknown };

struct LabelResolution {
  LabelStatus status = LabelStatus::kUnknown;
  TokenId token = -1;
};

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  virtual BackendDescriptor descriptor() const = 0;
  virtual std::vector<TokenId> tokenize(std::string_view text) const = 0;
  virtual std::string detokenize(std::span<const TokenId> tokens) const = 0;
  virtual LabelResolution resolve_label(std::string_view label) const = 0;
  virtual std::optional<TokenId> end_of_sequence() const = 0;
  // Pure: never modifies the state. Throws kBackendUnavailable on transport
  // or loading failures.
  virtual TokenDistribution next_distribution(const GenerationState& state) const = 0;

  // Encodes the prompt. `seed` also seeds the decoding RNG.
  GenerationState begin(std::string_view prompt, std::string context_key,
                        std::uint64_t seed) const;
  void append(GenerationState& state, TokenId token) const;
  void truncate(GenerationState& state, std::size_t length) const;
};

// Resolves each label to exactly one backend token.
TargetTokenSet validate_target_set(std::span<const std::string> labels,
                                   const ModelBackend& backend);

struct ProbeResult {
  ConfidenceRow row;
  std::vector<std::string> missing_labels;  // floored entries of a partial distribution

  bool partial() const noexcept { return !missing_labels.empty(); }
};

// Appends the probe tokens, reads the target-token probabilities, then removes
// the appended cells again. The state compares equal before and after.
ProbeResult probe_distribution(const ModelBackend& backend, GenerationState& state,
                               std::span<const TokenId> probe_tokens,
                               const TargetTokenSet& targets,
                               double missing_floor = kMissingTokenFloor);

// Greedy pick (lowest id on ties) or temperature -> top-k -> top-p sampling
// driven by `rng`.
TokenId choose_token(const TokenDistribution& dist, const DecodeConfig& cfg, std::mt19937_64& rng);

struct StepResult {
  std::string text;
  std::vector<TokenId> tokens;
  bool finished = false;         // end of sequence reached
  bool budget_exceeded = false;  // stopped at max_tokens_per_step without a boundary
};

// Decodes until the stop rule fires, the end-of-sequence token is drawn, or
// the per-step token budget runs out. Only emitted tokens are appended.
StepResult generate_step(const ModelBackend& backend, GenerationState& state,
                         const DecodeConfig& cfg, const StepStopRule& stop);

// Deterministic 64-bit mixing for cache keys and seeded variant choices.
std::uint64_t mix64(std::uint64_t x) noexcept;
std::uint64_t hash_string(std::string_view s) noexcept;

}  // namespace cop
