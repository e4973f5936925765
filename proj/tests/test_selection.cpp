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

#include <algorithm>
#include <map>
#include <random>

#include "cop/analysis.hpp"
#include "cop/scripted_backend.hpp"
#include "cop/selection.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cop;

namespace {

// Four-label trace predicting `label` whose final-answer column is `col`.
ProbeTrace voter(std::size_t label, std::vector<double> col) {
  std::vector<std::vector<double>> rows;
  for (double p : col) {
    std::vector<double> r(4, (1.0 - p) / 4);
    r[label] = p;
    rows.push_back(r);
  }
  return testutil::trace(rows, label);
}

}  // namespace

TEST_CASE("majority_vote") {
  enum { A, B, C };
  std::vector<ProbeTrace> v = {voter(C, {0.5, 0.6}), voter(C, {0.5, 0.6}), voter(A, {0.9, 0.9}),
                               voter(B, {0.9, 0.9}), voter(C, {0.4, 0.4})};
  CHECK(v[majority_vote(v)].final_prediction == C);

  // A and B tie on two votes; the best-scoring tied trace is a B-trace.
  v = {voter(A, {0.3, 0.4}), voter(A, {0.5, 0.5}), voter(B, {0.6, 0.7}), voter(B, {0.2, 0.2}), voter(C, {0.95, 0.99})};
  CHECK(majority_vote(v) == 2);

  v = {voter(B, {0.1})};
  CHECK(majority_vote(v) == 0);
}

TEST_CASE("majority_vote returns a maximal label") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<ProbeTrace> v;
    const std::size_t n = 1 + rng() % 7;
    for (std::size_t i = 0; i < n; ++i) v.push_back(voter(rng() % 4, {u(rng), u(rng)}));
    std::map<std::size_t, int> votes;
    for (const auto& t : v) ++votes[t.final_prediction];
    int top = 0;
    for (const auto& [l, c] : votes) top = std::max(top, c);
    const auto pick = majority_vote(v);
    CHECK(votes[v[pick].final_prediction] == top);
    for (const auto& t : v) {
      if (votes[t.final_prediction] == top) CHECK(cop_score(t) <= cop_score(v[pick]));
    }
  }
}

TEST_CASE("select_by_cops") {
  std::vector<ProbeTrace> v = {voter(0, {0.4}), voter(1, {0.9}), voter(2, {0.7})};
  CHECK(select_by_cops(v) == 1);
  v = {voter(0, {0.5}), voter(1, {0.5}), voter(2, {0.5})};
  CHECK(select_by_cops(v) == 0);

  // A strictly increasing map of all scores keeps the choice.
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.05, 0.5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ProbeTrace> a, b;
    for (int i = 0; i < 5; ++i) {
      const double p0 = u(rng), p1 = u(rng);
      a.push_back(voter(0, {p0, p1}));
      // Doubling both probabilities doubles the score.
      b.push_back(voter(0, {2 * p0, 2 * p1}));
    }
    CHECK(select_by_cops(a) == select_by_cops(b));
  }
}

TEST_CASE("evaluate_strategies with degenerate sampling") {
  ScriptedBackend backend;
  std::vector<EvalItem> items;
  for (int q = 0; q < 6; ++q) {
    const std::string id = "q" + std::to_string(q);
    // One scripted sampled variant: every sample is identical.
    for (int v = 0; v < 2; ++v) {
      const char* ans = (q + v) % 2 == 0 ? "A" : "B";
      backend.add_step(id, v, std::string("So, the answer is (") + ans + ").");
      backend.add_probe(id, v, 0, {{"A", 0.5}, {"B", 0.4}});
      backend.add_probe(id, v, 1, {{"A", 0.6}, {"B", 0.3}});
    }
    EvalItem it;
    it.id = id;
    it.gold = q < 4 ? 1 : 0;
    items.push_back(it);
  }
  const auto targets = validate_target_set(std::vector<std::string>{"A", "B"}, backend);
  const auto cmp = evaluate_strategies(items, backend, targets, DecodeConfig::sampling(3), 5);
  REQUIRE(cmp.rows.size() == 3);
  CHECK(cmp.rows[0].strategy == "GS");
  CHECK(cmp.rows[1].strategy == "Maj@5");
  CHECK(cmp.rows[2].strategy == "CoPS@5");
  CHECK(cmp.rows[1].accuracy == cmp.rows[2].accuracy);
  std::size_t sample_ok = 0;
  for (const auto& d : cmp.decisions) {
    REQUIRE(d.samples.size() == 5);
    sample_ok += d.samples[0].correct() ? 1 : 0;
    for (std::size_t s = 0; s < 5; ++s) CHECK(d.samples[s].decode_config.seed == 3 + s + 1);
  }
  CHECK(cmp.rows[1].accuracy == static_cast<double>(sample_ok) / items.size());

  // k = 1: both voting strategies reduce to the single sample.
  const auto one = evaluate_strategies(items, backend, targets, DecodeConfig::sampling(3), 1);
  CHECK(one.rows[1].correct == one.rows[2].correct);

  // Bit-for-bit reproducible.
  const auto again = evaluate_strategies(items, backend, targets, DecodeConfig::sampling(3), 5);
  for (std::size_t i = 0; i < cmp.decisions.size(); ++i) {
    CHECK(again.decisions[i].samples == cmp.decisions[i].samples);
    CHECK(again.decisions[i].greedy == cmp.decisions[i].greedy);
  }
}
