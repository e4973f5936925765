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

#include "cop/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "cop/error.hpp"

namespace cop {

bool is_early_answering(const ProbeTrace& trace) {
  const auto preds = step_predictions(trace.matrix);
  return std::all_of(preds.begin(), preds.end(),
                     [&](std::size_t j) { return j == trace.final_prediction; });
}

double ear(std::span<const ProbeTrace> traces) {
  if (traces.empty()) throw Error(ErrorCode::kEmptyInput, "EAR of an empty trace set");
  const auto n = std::count_if(traces.begin(), traces.end(), is_early_answering);
  return static_cast<double>(n) / static_cast<double>(traces.size());
}

AccuracySplit accuracy_split(std::span<const ProbeTrace> traces) {
  AccuracySplit out;
  std::size_t ok_ea = 0;
  std::size_t ok_not = 0;
  for (const auto& t : traces) {
    const bool correct = t.correct();
    if (is_early_answering(t)) {
      ++out.n_ea;
      ok_ea += correct ? 1 : 0;
    } else {
      ++out.n_not_ea;
      ok_not += correct ? 1 : 0;
    }
  }
  if (out.n_ea > 0) out.acc_ea = static_cast<double>(ok_ea) / static_cast<double>(out.n_ea);
  if (out.n_not_ea > 0) {
    out.acc_not_ea = static_cast<double>(ok_not) / static_cast<double>(out.n_not_ea);
  }
  return out;
}

double cop_score(std::span<const double> column) {
  if (column.empty()) throw Error(ErrorCode::kInvalidArgument, "empty confidence column");
  const double n = static_cast<double>(column.size());
  const double mean = std::accumulate(column.begin(), column.end(), 0.0) / n;
  if (column.size() == 1) return mean;
  const double k = n - 1.0;
  return mean + (column.back() - column.front()) / k;
}

double cop_score(const ProbeTrace& trace) { return cop_score(trace.final_column()); }

std::string_view cot_effect_name(CotEffect effect) {
  switch (effect) {
    case CotEffect::kPositive: return "positive";
    case CotEffect::kNegative: return "negative";
    case CotEffect::kNeutral: return "neutral";
  }
  return "neutral";
}

CotEffect cot_effect(const ProbeTrace& trace) {
  if (!trace.gold) throw Error(ErrorCode::kMissingGold, trace.question_id);
  const bool direct_right = argmax_row(trace.matrix[0]) == *trace.gold;
  const bool final_right = trace.final_prediction == *trace.gold;
  if (!direct_right && final_right) return CotEffect::kPositive;
  if (direct_right && !final_right) return CotEffect::kNegative;
  return CotEffect::kNeutral;
}

double tafcr(std::span<const JudgeRecord> records) {
  std::size_t ta = 0;
  std::size_t ta_fc = 0;
  for (const auto& r : records) {
    if (!r.answer_correct) continue;
    ++ta;
    if (!r.cot_correct) ++ta_fc;
  }
  if (ta == 0) throw Error(ErrorCode::kNoTrueAnswers, "no record has a correct answer");
  return static_cast<double>(ta_fc) / static_cast<double>(ta);
}

std::vector<std::size_t> decile_sizes(std::size_t n) {
  std::vector<std::size_t> sizes(10, n / 10);
  for (std::size_t i = 0; i < n % 10; ++i) ++sizes[i];
  return sizes;
}

std::vector<DecilePoint> decile_curve(std::span<const std::pair<double, bool>> scored) {
  if (scored.size() < 10) {
    throw Error(ErrorCode::kTooFewItems, "decile curve needs at least 10 items");
  }
  std::vector<std::pair<double, bool>> sorted(scored.begin(), scored.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<DecilePoint> out;
  std::size_t pos = 0;
  for (std::size_t size : decile_sizes(sorted.size())) {
    DecilePoint p;
    p.count = size;
    double sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t i = pos; i < pos + size; ++i) {
      sum += sorted[i].first;
      correct += sorted[i].second ? 1 : 0;
    }
    p.mean_score = sum / static_cast<double>(size);
    p.accuracy = static_cast<double>(correct) / static_cast<double>(size);
    out.push_back(p);
    pos += size;
  }
  return out;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "pearson needs two equal-length series of >= 2 points");
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorCode::kDegenerateInput, "constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> gaussian_smooth(std::span<const double> series, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::kInvalidArgument, "sigma must be > 0");
  if (series.empty()) return {};
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    kernel[static_cast<std::size_t>(i + radius)] =
        std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
  }
  const double norm = std::accumulate(kernel.begin(), kernel.end(), 0.0);
  for (double& w : kernel) w /= norm;

  const auto n = static_cast<std::ptrdiff_t>(series.size());
  auto reflect = [n](std::ptrdiff_t i) {
    const std::ptrdiff_t period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
  };
  std::vector<double> out(series.size(), 0.0);
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::ptrdiff_t d = -radius; d <= radius; ++d) {
      acc += kernel[static_cast<std::size_t>(d + radius)] * series[static_cast<std::size_t>(reflect(i + d))];
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

PairedTTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "paired t-test needs equal lengths >= 2");
  }
  const std::size_t n = a.size();
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = a[i] - b[i];
  const double mean = std::accumulate(diff.begin(), diff.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double d : diff) ss += (d - mean) * (d - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0) throw Error(ErrorCode::kDegenerateInput, "all paired differences are equal");

  PairedTTest out;
  out.dof = n - 1;
  out.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  out.cohens_d = mean / sd;
  const boost::math::students_t dist(static_cast<double>(out.dof));
  out.p_one_tailed = boost::math::cdf(boost::math::complement(dist, out.t));
  return out;
}

}  // namespace cop
