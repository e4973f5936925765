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

#include "cop/selection.hpp"

#include <map>

#include "cop/analysis.hpp"
#include "cop/error.hpp"

namespace cop {

std::size_t majority_vote(std::span<const ProbeTrace> candidates) {
  if (candidates.empty()) throw Error(ErrorCode::kEmptyInput, "no candidates to vote over");
  std::map<std::size_t, std::size_t> votes;
  for (const auto& c : candidates) ++votes[c.final_prediction];
  std::size_t top = 0;
  for (const auto& [label, n] : votes) top = std::max(top, n);

  std::size_t best = candidates.size();
  double best_score = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (votes[candidates[i].final_prediction] != top) continue;
    const double s = cop_score(candidates[i]);
    if (best == candidates.size() || s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

std::size_t select_by_cops(std::span<const ProbeTrace> candidates) {
  if (candidates.empty()) throw Error(ErrorCode::kEmptyInput, "no candidates to select from");
  std::size_t best = 0;
  double best_score = cop_score(candidates[0]);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double s = cop_score(candidates[i]);
    if (s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

std::vector<StrategyRow> summarize_strategies(std::span<const QuestionDecision> decisions,
                                              std::size_t k) {
  StrategyRow gs{"GS", 1, decisions.size(), 0, 0.0};
  StrategyRow maj{"Maj@" + std::to_string(k), k, decisions.size(), 0, 0.0};
  StrategyRow cops{"CoPS@" + std::to_string(k), k, decisions.size(), 0, 0.0};
  for (const auto& d : decisions) {
    gs.correct += d.gs_correct ? 1 : 0;
    maj.correct += d.maj_correct ? 1 : 0;
    cops.correct += d.cops_correct ? 1 : 0;
  }
  for (auto* row : {&gs, &maj, &cops}) {
    row->accuracy = row->n == 0 ? 0.0 : static_cast<double>(row->correct) / static_cast<double>(row->n);
  }
  return {gs, maj, cops};
}

StrategyComparison evaluate_strategies(std::span<const EvalItem> dataset, const ModelBackend& backend,
                                       const TargetTokenSet& targets, const DecodeConfig& sampling,
                                       std::size_t k, const RunOptions& base) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  StrategyComparison out;
  for (const auto& item : dataset) {
    RunOptions opts = base;
    opts.question_id = item.id;
    opts.gold = item.gold;
    opts.metadata = item.metadata;

    QuestionDecision d;
    d.id = item.id;
    DecodeConfig greedy = sampling;
    greedy.mode = DecodeMode::kGreedy;
    opts.sample_index = 0;
    d.greedy = run_cop(item.prompt, backend, targets, greedy, opts);
    for (std::size_t s = 1; s <= k; ++s) {
      DecodeConfig cfg = sampling;
      cfg.mode = DecodeMode::kSample;
      cfg.seed = sampling.seed + s;
      opts.sample_index = static_cast<int>(s);
      d.samples.push_back(run_cop(item.prompt, backend, targets, cfg, opts));
    }
    d.maj_index = majority_vote(d.samples);
    d.cops_index = select_by_cops(d.samples);
    d.gs_correct = d.greedy.final_prediction == item.gold;
    d.maj_correct = d.samples[d.maj_index].final_prediction == item.gold;
    d.cops_correct = d.samples[d.cops_index].final_prediction == item.gold;
    out.decisions.push_back(std::move(d));
  }
  out.rows = summarize_strategies(out.decisions, k);
  return out;
}

}  // namespace cop
