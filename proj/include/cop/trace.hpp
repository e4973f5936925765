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

// Domain types shared by every module: the answer alphabet, per-step
// confidence rows, the confidence matrix, decode settings and the probe
// trace that ties them together.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cop {

using TokenId = std::int32_t;

inline constexpr double kRowSumTolerance = 1e-9;

struct TargetEntry {
  std::string label;  // display label, e.g. "A"
  TokenId token = -1;  // backend token identifier

  bool operator==(const TargetEntry&) const = default;
};

// The ordered answer alphabet. Non-empty, labels pairwise distinct.
class TargetTokenSet {
 public:
  explicit TargetTokenSet(std::vector<TargetEntry> entries);

  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<TargetEntry>& entries() const noexcept { return entries_; }
  const TargetEntry& operator[](std::size_t i) const { return entries_[i]; }
  std::vector<std::string> labels() const;
  std::optional<std::size_t> index_of(std::string_view label) const;

  bool operator==(const TargetTokenSet&) const = default;

 private:
  std::vector<TargetEntry> entries_;
};

// Probabilities of each target entry at one probe, in target-set order.
class ConfidenceRow {
 public:
  // Throws kInvalidArgument if an element is outside [0,1], non-finite, or
  // the row sums above 1 + kRowSumTolerance.
  explicit ConfidenceRow(std::vector<double> probs);

  std::span<const double> probs() const noexcept { return probs_; }
  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

  bool operator==(const ConfidenceRow&) const = default;

 private:
  std::vector<double> probs_;
};

// Rows c_0..c_k; row 0 is the probe taken before any reasoning.
class ConfidenceMatrix {
 public:
  explicit ConfidenceMatrix(std::vector<ConfidenceRow> rows);

  const std::vector<ConfidenceRow>& rows() const noexcept { return rows_; }
  const ConfidenceRow& operator[](std::size_t i) const { return rows_[i]; }
  std::size_t row_count() const noexcept { return rows_.size(); }
  std::size_t step_count() const noexcept { return rows_.size() - 1; }
  std::size_t width() const noexcept { return rows_.front().size(); }
  // Confidence in one answer across all probes.
  std::vector<double> column(std::size_t j) const;

  bool operator==(const ConfidenceMatrix&) const = default;

 private:
  std::vector<ConfidenceRow> rows_;
};

enum class DecodeMode { kGreedy, kSample };

struct DecodeConfig {
  DecodeMode mode = DecodeMode::kGreedy;
  double temperature = 0.7;
  int top_k = 40;  // 0 disables
  double top_p = 0.9;
  std::uint64_t seed = 0;
  int max_steps = 64;
  int max_tokens_per_step = 128;

  // The sampling defaults used for Maj@k / CoPS@k experiments.
  static DecodeConfig sampling(std::uint64_t seed);

  void validate() const;
  bool operator==(const DecodeConfig&) const = default;
};

std::string_view decode_mode_name(DecodeMode mode);
DecodeMode parse_decode_mode(std::string_view name);

struct TraceFlags {
  bool answer_fallback = false;       // j* taken from the last probe, not the text
  bool partial_distribution = false;  // some probe row used the floor value
  bool step_limit_reached = false;    // generation truncated at max_steps
  bool budget_exceeded = false;       // a step hit max_tokens_per_step

  bool operator==(const TraceFlags&) const = default;
};

struct ProbeTrace {
  std::string question_id;
  int sample_index = 0;
  std::string prompt;
  std::vector<std::string> steps;
  ConfidenceMatrix matrix{{ConfidenceRow({1.0})}};
  std::size_t final_prediction = 0;
  std::optional<std::size_t> gold;
  DecodeConfig decode_config;
  std::string backend_id;
  std::string probe_string;
  TraceFlags flags;
  std::map<std::string, std::string> metadata;

  std::size_t step_count() const noexcept { return matrix.step_count(); }
  // Confidence in the final prediction at every probe.
  std::vector<double> final_column() const { return matrix.column(final_prediction); }
  bool correct() const;  // requires gold

  // Throws kInvalidArgument when steps/rows disagree or indices fall outside
  // [0, width).
  void validate() const;

  bool operator==(const ProbeTrace&) const = default;
};

// Index of the largest element; ties go to the lowest index.
std::size_t argmax_row(std::span<const double> row);
inline std::size_t argmax_row(const ConfidenceRow& row) { return argmax_row(row.probs()); }

std::vector<std::size_t> step_predictions(const ConfidenceMatrix& matrix);

struct FinalPrediction {
  std::size_t index = 0;
  bool fallback = false;
};

// Last case-insensitive occurrence of "the answer is (<label>" in the text,
// or std::nullopt when none matches a label of the target set.
std::optional<std::size_t> find_answer_label(std::string_view text,
                                             const TargetTokenSet& targets);

// Falls back to the argmax of the last matrix row when the text has no
// recognisable answer.
FinalPrediction final_prediction(std::string_view answer_text, const TargetTokenSet& targets,
                                 const ConfidenceMatrix& matrix);

}  // namespace cop
