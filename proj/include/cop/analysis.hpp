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

// Trace-level statistics: early answering, CoP score, CoT effect, TAFCR,
// decile curves, and the general-purpose Pearson / Gaussian smoothing /
// paired t-test helpers used to report them.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "cop/trace.hpp"

namespace cop {

// Every per-step argmax equals the final prediction (k = 0 included).
bool is_early_answering(const ProbeTrace& trace);

// Fraction of early-answering traces. Throws kEmptyInput.
double ear(std::span<const ProbeTrace> traces);

struct AccuracySplit {
  std::optional<double> acc_ea;  // absent when no EA traces
  std::optional<double> acc_not_ea;
  std::size_t n_ea = 0;
  std::size_t n_not_ea = 0;
};

// Throws kMissingGold.
AccuracySplit accuracy_split(std::span<const ProbeTrace> traces);

// Mean final-answer confidence plus mean per-step change. For k = 0 the change
// term is taken as 0 and the score is p_0.
double cop_score(const ProbeTrace& trace);
double cop_score(std::span<const double> final_column);

enum class CotEffect { kPositive, kNegative, kNeutral };
std::string_view cot_effect_name(CotEffect effect);

// Compares the pre-reasoning argmax with the final prediction. Throws
// kMissingGold.
CotEffect cot_effect(const ProbeTrace& trace);

struct JudgeRecord {
  bool answer_correct = false;
  bool cot_correct = false;
};

// #(true answer, false CoT) / #(true answer). Throws kNoTrueAnswers.
double tafcr(std::span<const JudgeRecord> records);

struct DecilePoint {
  double mean_score = 0.0;
  double accuracy = 0.0;
  std::size_t count = 0;
};

// Sorts by score (stable) and cuts into 10 contiguous sections; the first
// n % 10 sections get one extra item. Throws kTooFewItems below 10 items.
std::vector<DecilePoint> decile_curve(std::span<const std::pair<double, bool>> scored);
std::vector<std::size_t> decile_sizes(std::size_t n);

// Sample Pearson coefficient. Throws kDegenerateInput when a series is
// constant, kInvalidArgument on length mismatch or fewer than 2 points.
double pearson(std::span<const double> xs, std::span<const double> ys);

// Order-0 Gaussian filter, radius ceil(4 sigma), reflect (half-sample
// symmetric) boundaries, kernel normalised to 1.
std::vector<double> gaussian_smooth(std::span<const double> series, double sigma = 1.0);

struct PairedTTest {
  double t = 0.0;
  double p_one_tailed = 0.0;  // P(T >= t) for H1: mean(a - b) > 0
  double cohens_d = 0.0;
  std::size_t dof = 0;
};

// Paired t-test on a - b. Throws kDegenerateInput when all differences are
// equal.
PairedTTest paired_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace cop
