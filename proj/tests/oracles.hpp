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

// Reference implementations used as test oracles. They are written from the
// textbook definitions and share no code with the library.

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace oracle {

using Real = long double;

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  Real sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const Real mx = sx / n, my = sy / n;
  Real sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Real dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

// Direct convolution with a reflected (half-sample symmetric) signal.
inline std::vector<double> gaussian_smooth(const std::vector<double>& x, double sigma) {
  const long n = static_cast<long>(x.size());
  const long r = static_cast<long>(std::ceil(4.0 * sigma));
  std::vector<Real> w;
  Real total = 0;
  for (long j = -r; j <= r; ++j) {
    const Real v = std::exp(-static_cast<Real>(j) * j / (2.0L * sigma * sigma));
    w.push_back(v);
    total += v;
  }
  auto at = [&](long i) {
    // Unfold repeatedly for kernels wider than the signal.
    while (i < 0 || i >= n) {
      if (i < 0) i = -i - 1;
      if (i >= n) i = 2 * n - i - 1;
    }
    return static_cast<Real>(x[static_cast<std::size_t>(i)]);
  };
  std::vector<double> out(x.size());
  for (long i = 0; i < n; ++i) {
    Real acc = 0;
    for (long j = -r; j <= r; ++j) acc += w[static_cast<std::size_t>(j + r)] / total * at(i + j);
    out[static_cast<std::size_t>(i)] = static_cast<double>(acc);
  }
  return out;
}

// Regularised incomplete beta I_x(a, b) by the modified Lentz continued
// fraction.
inline Real incomplete_beta(Real a, Real b, Real x) {
  if (x <= 0) return 0;
  if (x >= 1) return 1;
  if (x > (a + 1) / (a + b + 2)) return 1 - incomplete_beta(b, a, 1 - x);
  const Real lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  const Real front = std::exp(a * std::log(x) + b * std::log1p(-x) - lbeta) / a;
  const Real tiny = 1e-300L;
  Real f = 1, c = 1, d = 0;
  for (int i = 0; i <= 400; ++i) {
    const int m = i / 2;
    Real num;
    if (i == 0) {
      num = 1;
    } else if (i % 2 == 0) {
      num = (m * (b - m) * x) / ((a + 2 * m - 1) * (a + 2 * m));
    } else {
      num = -((a + m) * (a + b + m) * x) / ((a + 2 * m) * (a + 2 * m + 1));
    }
    d = 1 + num * d;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1 / d;
    c = 1 + num / c;
    if (std::fabs(c) < tiny) c = tiny;
    const Real cd = c * d;
    f *= cd;
    if (std::fabs(1 - cd) < 1e-18L) break;
  }
  return front * (f - 1);
}

// Upper tail P(T >= t) of Student's t with v degrees of freedom.
inline double student_t_upper(double t, double v) {
  const Real x = v / (v + static_cast<Real>(t) * t);
  const Real tail = 0.5L * incomplete_beta(v / 2.0L, 0.5L, x);
  return static_cast<double>(t >= 0 ? tail : 1 - tail);
}

struct TTest {
  double t, p, d;
};

inline TTest paired_t(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  Real sum = 0;
  for (std::size_t i = 0; i < n; ++i) sum += static_cast<Real>(a[i]) - b[i];
  const Real mean = sum / n;
  Real ss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Real e = static_cast<Real>(a[i]) - b[i] - mean;
    ss += e * e;
  }
  const Real sd = std::sqrt(ss / (n - 1));
  const Real t = mean / (sd / std::sqrt(static_cast<Real>(n)));
  return {static_cast<double>(t), student_t_upper(static_cast<double>(t), static_cast<double>(n - 1)),
          static_cast<double>(mean / sd)};
}

// Early answering straight from the definition: every row's first maximal
// entry must sit at the final prediction.
inline bool early_answering(const std::vector<std::vector<double>>& rows, std::size_t final_index) {
  for (const auto& row : rows) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j) {
      bool beats_all_before = true;
      for (std::size_t i = 0; i < j; ++i) {
        if (!(row[j] > row[i])) beats_all_before = false;
      }
      bool below_none_after = true;
      for (std::size_t i = j + 1; i < row.size(); ++i) {
        if (row[i] > row[j]) below_none_after = false;
      }
      if (beats_all_before && below_none_after) best = j;
    }
    if (best != final_index) return false;
  }
  return true;
}

inline double cop_score(const std::vector<double>& p) {
  const std::size_t k = p.size() - 1;
  Real sum = 0;
  for (double v : p) sum += v;
  const Real mean = sum / (k + 1);
  if (k == 0) return static_cast<double>(mean);
  Real deltas = 0;
  for (std::size_t i = 1; i <= k; ++i) deltas += static_cast<Real>(p[i]) - p[i - 1];
  return static_cast<double>(mean + deltas / k);
}

}  // namespace oracle
