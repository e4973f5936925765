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

#include "cop/trace.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "cop/error.hpp"

namespace cop {

namespace {

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool iequals_at(std::string_view text, std::size_t pos, std::string_view needle) {
  if (pos + needle.size() > text.size()) return false;
  for (std::size_t i = 0; i < needle.size(); ++i) {
    if (lower(text[pos + i]) != lower(needle[i])) return false;
  }
  return true;
}

}  // namespace

TargetTokenSet::TargetTokenSet(std::vector<TargetEntry> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw Error(ErrorCode::kInvalidArgument, "target token set is empty");
  std::set<std::string> seen;
  for (const auto& e : entries_) {
    if (e.label.empty()) throw Error(ErrorCode::kInvalidArgument, "empty target label");
    if (!seen.insert(e.label).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate target label '" + e.label + "'");
    }
  }
}

std::vector<std::string> TargetTokenSet::labels() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.label);
  return out;
}

std::optional<std::size_t> TargetTokenSet::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].label == label) return i;
  }
  return std::nullopt;
}

ConfidenceRow::ConfidenceRow(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw Error(ErrorCode::kInvalidArgument, "confidence row is empty");
  double sum = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw Error(ErrorCode::kInvalidArgument, "confidence value outside [0,1]");
    }
    sum += p;
  }
  if (sum > 1.0 + kRowSumTolerance) {
    throw Error(ErrorCode::kInvalidArgument, "confidence row sums above 1");
  }
}

ConfidenceMatrix::ConfidenceMatrix(std::vector<ConfidenceRow> rows) : rows_(std::move(rows)) {
  if (rows_.empty()) throw Error(ErrorCode::kInvalidArgument, "confidence matrix has no rows");
  for (const auto& r : rows_) {
    if (r.size() != rows_.front().size()) {
      throw Error(ErrorCode::kInvalidArgument, "confidence matrix rows differ in width");
    }
  }
}

std::vector<double> ConfidenceMatrix::column(std::size_t j) const {
  if (j >= width()) throw Error(ErrorCode::kInvalidArgument, "column index out of range");
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) out.push_back(r[j]);
  return out;
}

DecodeConfig DecodeConfig::sampling(std::uint64_t seed) {
  DecodeConfig cfg;
  cfg.mode = DecodeMode::kSample;
  cfg.temperature = 0.7;
  cfg.top_k = 40;
  cfg.top_p = 0.9;
  cfg.seed = seed;
  return cfg;
}

void DecodeConfig::validate() const {
  if (max_steps < 1) throw Error(ErrorCode::kInvalidArgument, "max_steps must be >= 1");
  if (max_tokens_per_step < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_tokens_per_step must be >= 1");
  }
  if (mode == DecodeMode::kGreedy) return;
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::kInvalidArgument, "temperature must be > 0");
  }
  if (top_k < 0) throw Error(ErrorCode::kInvalidArgument, "top_k must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "top_p must be in (0,1]");
}

std::string_view decode_mode_name(DecodeMode mode) {
  return mode == DecodeMode::kGreedy ? "greedy" : "sample";
}

DecodeMode parse_decode_mode(std::string_view name) {
  if (name == "greedy") return DecodeMode::kGreedy;
  if (name == "sample") return DecodeMode::kSample;
  throw Error(ErrorCode::kInvalidArgument, "unknown decode mode '" + std::string(name) + "'");
}

bool ProbeTrace::correct() const {
  if (!gold) throw Error(ErrorCode::kMissingGold, question_id);
  return *gold == final_prediction;
}

void ProbeTrace::validate() const {
  if (steps.size() != matrix.step_count()) {
    throw Error(ErrorCode::kInvalidArgument,
                question_id + ": " + std::to_string(steps.size()) + " steps but " +
                    std::to_string(matrix.row_count()) + " probe rows");
  }
  if (final_prediction >= matrix.width()) {
    throw Error(ErrorCode::kInvalidArgument, question_id + ": final prediction out of range");
  }
  if (gold && *gold >= matrix.width()) {
    throw Error(ErrorCode::kInvalidArgument, question_id + ": gold index out of range");
  }
  decode_config.validate();
}

std::size_t argmax_row(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i) {
    if (row[i] > row[best]) best = i;
  }
  return best;
}

std::vector<std::size_t> step_predictions(const ConfidenceMatrix& matrix) {
  std::vector<std::size_t> out;
  out.reserve(matrix.row_count());
  for (const auto& row : matrix.rows()) out.push_back(argmax_row(row));
  return out;
}

std::optional<std::size_t> find_answer_label(std::string_view text, const TargetTokenSet& targets) {
  static constexpr std::string_view kPattern = "the answer is (";
  std::optional<std::size_t> found;
  for (std::size_t pos = 0; pos + kPattern.size() <= text.size(); ++pos) {
    if (!iequals_at(text, pos, kPattern)) continue;
    const std::size_t at = pos + kPattern.size();
    // Longest matching label, so "AB" is not read as "A".
    std::optional<std::size_t> match;
    for (std::size_t j = 0; j < targets.size(); ++j) {
      const auto& label = targets[j].label;
      if (iequals_at(text, at, label) &&
          (!match || label.size() > targets[*match].label.size())) {
        match = j;
      }
    }
    if (match) found = match;
  }
  return found;
}

FinalPrediction final_prediction(std::string_view answer_text, const TargetTokenSet& targets,
                                 const ConfidenceMatrix& matrix) {
  if (auto idx = find_answer_label(answer_text, targets)) return {*idx, false};
  return {argmax_row(matrix.rows().back()), true};
}

}  // namespace cop
