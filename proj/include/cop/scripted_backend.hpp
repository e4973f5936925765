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

// Replays scripted reasoning steps and probe distributions. Each context key
// (a question id) owns one or more variants; variant 0 answers seed 0
// (greedy runs), other seeds pick among the remaining variants by hash.
//
// Script file: one JSON object per line,
//   {"context_key": "q1", "kind": "step",  "payload": {"text": "...", "variant": 0}}
//   {"context_key": "q1", "kind": "probe", "payload": {"step": 0, "dist": {"A": 0.1, ...}, "variant": 0}}
//   {"context_key": "*",  "kind": "vocab", "payload": {"pieces": ["carbon", "ated"]}}
// "variant" defaults to 0. Steps of a variant are kept in file order; probe
// step i is read after the first i steps have been generated.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cop/backend.hpp"
#include "cop/vocabulary.hpp"

namespace cop {

class ScriptedBackend final : public ModelBackend {
 public:
  ScriptedBackend();

  void add_step(const std::string& context_key, int variant, const std::string& text);
  void add_probe(const std::string& context_key, int variant, int step,
                 const std::map<std::string, double>& dist);
  void add_vocabulary_piece(const std::string& piece);

  // Number of variants scripted for a key (0 when unknown).
  int variant_count(const std::string& context_key) const;
  // Variant replayed for a given seed.
  int variant_for(const std::string& context_key, std::uint64_t seed) const;

  BackendDescriptor descriptor() const override;
  std::vector<TokenId> tokenize(std::string_view text) const override;
  std::string detokenize(std::span<const TokenId> tokens) const override;
  LabelResolution resolve_label(std::string_view label) const override;
  std::optional<TokenId> end_of_sequence() const override { return eos_; }
  // Throws kScriptMiss for keys, variants or positions the script does not
  // cover.
  TokenDistribution next_distribution(const GenerationState& state) const override;

 private:
  struct Variant {
    std::vector<std::string> steps;
    // Every word of a step is a vocabulary piece, so this tokenization stays
    // valid as the vocabulary grows.
    std::vector<TokenId> tokens;
    std::vector<std::size_t> step_ends = {0};
    std::map<int, std::map<std::string, double>> probes;
  };

  const Variant& variant_of(const GenerationState& state) const;

  Vocabulary vocab_;
  TokenId eos_;
  TokenId other_;  // absorbs probability mass outside the scripted labels
  std::map<std::string, std::map<int, Variant>> script_;
};

// Throws LineError(kScriptParseError) on malformed records.
ScriptedBackend load_script(const std::filesystem::path& path);

}  // namespace cop
