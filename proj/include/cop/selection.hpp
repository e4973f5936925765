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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cop/backend.hpp"
#include "cop/probe.hpp"
#include "cop/trace.hpp"

namespace cop {

// Plurality label over final predictions; label ties go to the tied trace with
// the highest CoP score (earliest on equal scores). Returns an index into
// `candidates`.
std::size_t majority_vote(std::span<const ProbeTrace> candidates);

// Highest CoP score, earliest on ties.
std::size_t select_by_cops(std::span<const ProbeTrace> candidates);

struct EvalItem {
  std::string id;
  PromptSpec prompt;
  std::size_t gold = 0;
  std::map<std::string, std::string> metadata;
};

struct QuestionDecision {
  std::string id;
  ProbeTrace greedy;
  std::vector<ProbeTrace> samples;
  std::size_t maj_index = 0;
  std::size_t cops_index = 0;
  bool gs_correct = false;
  bool maj_correct = false;
  bool cops_correct = false;
};

struct StrategyRow {
  std::string strategy;  // "GS", "Maj@k", "CoPS@k"
  std::size_t k = 1;
  std::size_t n = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
};

struct StrategyComparison {
  std::vector<StrategyRow> rows;  // GS, Maj@k, CoPS@k
  std::vector<QuestionDecision> decisions;
};

// Per question: one greedy trace plus k sampled traces with seeds
// sampling.seed + 1 .. sampling.seed + k; Maj@k and CoPS@k vote over the
// sampled traces only.
StrategyComparison evaluate_strategies(std::span<const EvalItem> dataset, const ModelBackend& backend,
                                       const TargetTokenSet& targets, const DecodeConfig& sampling,
                                       std::size_t k = 5, const RunOptions& base = {});

// Builds the GS / Maj@k / CoPS@k rows from already-made decisions.
std::vector<StrategyRow> summarize_strategies(std::span<const QuestionDecision> decisions,
                                              std::size_t k);

}  // namespace cop
