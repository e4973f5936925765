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

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cop/backend.hpp"
#include "cop/vocabulary.hpp"

namespace cop {

// Deterministic order-n table model. The next-token distribution depends on
// the tokens held by the last n-1 cache cells; contexts never seen in
// training get a uniform distribution over the fallback support.
class ToyLanguageModel final : public ModelBackend {
 public:
  struct Options {
    int order = 3;
    // Token texts forming the uniform fallback support; empty means every
    // regular vocabulary piece.
    std::vector<std::string> fallback_support;
  };

  static ToyLanguageModel train(const std::vector<std::string>& documents, Options options);
  // Corpus file: one JSON object {"text": ...} per line.
  static ToyLanguageModel from_corpus_file(const std::filesystem::path& path, Options options);

  BackendDescriptor descriptor() const override;
  std::vector<TokenId> tokenize(std::string_view text) const override;
  std::string detokenize(std::span<const TokenId> tokens) const override;
  LabelResolution resolve_label(std::string_view label) const override;
  std::optional<TokenId> end_of_sequence() const override { return eos_; }
  TokenDistribution next_distribution(const GenerationState& state) const override;

  int order() const noexcept { return options_.order; }
  const Vocabulary& vocabulary() const noexcept { return vocab_; }

 private:
  ToyLanguageModel() = default;

  Options options_;
  Vocabulary vocab_;
  TokenId eos_ = -1;
  // (n-1)-token context -> next-token counts
  std::map<std::vector<TokenId>, std::map<TokenId, std::uint64_t>> table_;
  std::vector<TokenId> fallback_;
};

// Shared by the in-process backends.
LabelResolution resolve_with_vocabulary(const Vocabulary& vocab, std::string_view label);

}  // namespace cop
