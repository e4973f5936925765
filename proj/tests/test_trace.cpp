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
#include <numeric>
#include <random>

#include "cop/error.hpp"
#include "cop/trace.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cop;

namespace {

TargetTokenSet abcd() {
  return TargetTokenSet({{"A", 10}, {"B", 11}, {"C", 12}, {"D", 13}});
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no exception");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_CASE("argmax_row picks the maximum and breaks ties low") {
  CHECK(argmax_row(ConfidenceRow({0.1, 0.7, 0.2})) == 1);
  CHECK(argmax_row(ConfidenceRow({0.4, 0.4, 0.2})) == 0);
  CHECK(argmax_row(ConfidenceRow({0.25, 0.25, 0.25, 0.25})) == 0);
}

TEST_CASE("step_predictions") {
  CHECK(step_predictions(testutil::matrix({{0.6, 0.4}, {0.3, 0.7}})) == std::vector<std::size_t>{0, 1});
  CHECK(step_predictions(testutil::matrix({{0.5, 0.5}})) == std::vector<std::size_t>{0});

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 4; ++i) rows.push_back(testutil::random_row(rng, 4));
    const auto preds = step_predictions(testutil::matrix(rows));
    REQUIRE(preds.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      std::size_t best = 0;
      for (std::size_t j = 0; j < 4; ++j) {
        if (rows[i][j] > rows[i][best]) best = j;
      }
      CHECK(preds[i] == best);
    }
  }
}

TEST_CASE("argmax_row is permutation covariant for unique maxima") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    const auto row = testutil::random_row(rng, 5);
    std::vector<std::size_t> perm(5);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> permuted(5);
    for (std::size_t i = 0; i < 5; ++i) permuted[perm[i]] = row[i];
    CHECK(argmax_row(permuted) == perm[argmax_row(row)]);
  }
}

TEST_CASE("ConfidenceRow validation") {
  CHECK_NOTHROW(ConfidenceRow({0.5, 0.5}));
  CHECK_NOTHROW(ConfidenceRow({0.5, 0.5 + 5e-10}));
  CHECK(code_of([] { ConfidenceRow({0.6, 0.5}); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { ConfidenceRow({-0.1, 0.5}); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { ConfidenceRow({1.2}); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { ConfidenceRow({std::nan(""), 0.1}); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("ConfidenceMatrix needs rows of one width") {
  CHECK_THROWS_AS(ConfidenceMatrix({}), Error);
  CHECK_THROWS_AS(testutil::matrix({{0.5, 0.5}, {0.3}}), Error);
  const auto m = testutil::matrix({{0.1, 0.2}, {0.3, 0.4}, {0.5, 0.1}});
  CHECK(m.step_count() == 2);
  CHECK(m.width() == 2);
  CHECK(m.column(1) == std::vector<double>{0.2, 0.4, 0.1});
}

TEST_CASE("TargetTokenSet invariants") {
  CHECK(abcd().size() == 4);
  CHECK(abcd().index_of("C") == 2u);
  CHECK_FALSE(abcd().index_of("E").has_value());
  CHECK_THROWS_AS(TargetTokenSet({}), Error);
  CHECK_THROWS_AS(TargetTokenSet({{"A", 1}, {"A", 2}}), Error);
}

TEST_CASE("final_prediction reads the answer pattern") {
  const auto m = testutil::matrix({{0.1, 0.8, 0.05, 0.05}});
  auto fp = final_prediction("Blue light scatters. So, the answer is (C).", abcd(), m);
  CHECK(fp.index == 2);
  CHECK_FALSE(fp.fallback);

  fp = final_prediction("so THE ANSWER IS (a).", abcd(), m);
  CHECK(fp.index == 0);
  CHECK_FALSE(fp.fallback);

  fp = final_prediction("I am not sure.", abcd(), m);
  CHECK(fp.index == 1);
  CHECK(fp.fallback);

  // The last occurrence wins.
  fp = final_prediction("the answer is (A). No wait, the answer is (D).", abcd(), m);
  CHECK(fp.index == 3);

  // A label outside the set does not count.
  fp = final_prediction("the answer is (Z).", abcd(), m);
  CHECK(fp.fallback);
}

TEST_CASE("ProbeTrace validation") {
  auto t = testutil::trace({{0.5, 0.5}, {0.2, 0.8}}, 1, 1);
  CHECK_NOTHROW(t.validate());
  CHECK(t.correct());
  t.steps.push_back("extra. ");
  CHECK_THROWS_AS(t.validate(), Error);
  t.steps.pop_back();
  t.final_prediction = 2;
  CHECK_THROWS_AS(t.validate(), Error);
  t.final_prediction = 0;
  t.gold = 5;
  CHECK_THROWS_AS(t.validate(), Error);
  t.gold.reset();
  CHECK(code_of([&] { (void)t.correct(); }) == ErrorCode::kMissingGold);
}

TEST_CASE("DecodeConfig") {
  DecodeConfig d;
  CHECK(d.mode == DecodeMode::kGreedy);
  CHECK_NOTHROW(d.validate());
  const auto s = DecodeConfig::sampling(9);
  CHECK(s.mode == DecodeMode::kSample);
  CHECK(s.temperature == 0.7);
  CHECK(s.top_k == 40);
  CHECK(s.top_p == 0.9);
  CHECK(s.seed == 9);
  d.temperature = 0.0;
  d.mode = DecodeMode::kSample;
  CHECK_THROWS_AS(d.validate(), Error);
  d = DecodeConfig{};
  d.top_p = 0.0;
  d.mode = DecodeMode::kSample;
  CHECK_THROWS_AS(d.validate(), Error);
  d = DecodeConfig{};
  d.max_steps = 0;
  CHECK_THROWS_AS(d.validate(), Error);
  CHECK(parse_decode_mode(decode_mode_name(DecodeMode::kSample)) == DecodeMode::kSample);
}
