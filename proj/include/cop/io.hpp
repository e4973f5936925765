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

// Datasets, trace files, judge labels, CSV reports, plot series and run
// manifests. Everything written here is a deterministic function of its
// inputs: fixed column order, 17 significant digits for doubles.

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cop/analysis.hpp"
#include "cop/backend.hpp"
#include "cop/selection.hpp"
#include "cop/trace.hpp"
#include "cop/tree.hpp"

namespace cop {

inline constexpr int kTraceFormatVersion = 1;

struct Choice {
  std::string label;
  std::string text;

  bool operator==(const Choice&) const = default;
};

struct DatasetRecord {
  std::string id;
  std::string question;
  std::vector<Choice> choices;
  std::string answer_label;
  std::map<std::string, std::string> metadata;

  // Question followed by one "(label) text" line per choice.
  std::string render_question() const;
  std::size_t answer_index() const;

  bool operator==(const DatasetRecord&) const = default;
};

// JSON lines: {"id", "question", "choices": [{"label", "text"}], "answer_label", "metadata"}.
// Throws LineError(kParseError), kDuplicateId, kInvalidAnswerLabel.
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path);
void write_dataset(std::span<const DatasetRecord> records, const std::filesystem::path& path);

struct TraceFileHeader {
  int version = kTraceFormatVersion;
  std::string backend_id;
  std::vector<std::string> target_labels;
  DecodeConfig decode_config;
  std::string probe_string;

  bool operator==(const TraceFileHeader&) const = default;
};

struct TraceFile {
  TraceFileHeader header;
  std::vector<ProbeTrace> traces;
};

std::string trace_to_json(const ProbeTrace& trace);
ProbeTrace trace_from_json(std::string_view line);

// The first line is the header. With append=true an existing file must carry
// the same backend, target labels and probe string (kHeaderMismatch).
void write_traces(const TraceFileHeader& header, std::span<const ProbeTrace> traces,
                  const std::filesystem::path& path, bool append = false);
// Throws kVersionMismatch for other format versions.
TraceFile read_traces(const std::filesystem::path& path);

struct JudgeLabel {
  std::string question_id;
  int sample_index = 0;
  bool answer_correct = false;
  bool cot_correct = false;
};

// JSON lines: {"question_id", "answer_correct", "cot_correct"} with optional
// "sample_index" (default 0).
std::vector<JudgeLabel> load_judge_labels(const std::filesystem::path& path);
// Label matching (question_id, sample_index), falling back to sample 0.
const JudgeLabel* find_judge_label(std::span<const JudgeLabel> labels, const ProbeTrace& trace);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

std::string format_number(double v);
std::string format_optional(const std::optional<double>& v);  // empty cell when absent
void write_csv(const CsvTable& table, const std::filesystem::path& path);

// Report tables, one per report kind.
struct NamedTraces {
  std::string name;
  std::span<const ProbeTrace> traces;
};
CsvTable ear_report(std::span<const NamedTraces> sets);
CsvTable accuracy_split_report(std::span<const NamedTraces> sets);
CsvTable effect_report(std::span<const NamedTraces> sets);
CsvTable score_report(std::span<const ProbeTrace> traces, const std::vector<std::string>& labels);
CsvTable strategy_report(const std::string& model, std::span<const StrategyRow> rows);
CsvTable decisions_report(std::span<const QuestionDecision> decisions,
                          const std::vector<std::string>& labels);
CsvTable tree_metrics_report(const ClassificationMetrics& m, std::size_t n);
CsvTable tafcr_report(std::span<const JudgeRecord> records);

// Plot series.
CsvTable trajectory_series(const ProbeTrace& trace);
CsvTable decile_series(std::span<const DecilePoint> points);
struct GroupPoint {
  std::string group;
  std::size_t n = 0;
  double ear = 0.0;
  double accuracy = 0.0;
};
// Groups traces by a metadata key, sorts by EAR, and adds Gaussian-smoothed
// accuracy and EAR columns.
std::vector<GroupPoint> ear_curve(std::span<const ProbeTrace> traces, const std::string& group_key);
CsvTable ear_curve_series(std::span<const GroupPoint> points, double sigma);
// Writes one trajectory file per trace into `dir`; returns the paths.
std::vector<std::filesystem::path> write_trajectories(std::span<const ProbeTrace> traces,
                                                      const std::filesystem::path& dir);

std::string sha256_file(const std::filesystem::path& path);

struct Manifest {
  std::string command;
  std::map<std::string, std::string> parameters;
  std::optional<BackendDescriptor> backend;
  std::vector<std::filesystem::path> outputs;
};

// JSON manifest with the config snapshot, seeds, backend descriptor and the
// SHA-256 of every output (paths relative to the manifest's directory).
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

}  // namespace cop
