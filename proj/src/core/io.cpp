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

#include "cop/io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "cop/error.hpp"
#include "json_text.hpp"

namespace cop {

namespace {

using nlohmann::json;
using detail::ObjectWriter;

std::ofstream open_out(const std::filesystem::path& path, bool append = false) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  return in;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

std::string string_array(const std::vector<std::string>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + detail::json_string(v[i]);
  return out + "]";
}

std::string string_map(const std::map<std::string, std::string>& m) {
  ObjectWriter w;
  for (const auto& [k, v] : m) w.str(k, v);
  return w.done();
}

std::string decode_config_json(const DecodeConfig& c) {
  return ObjectWriter()
      .str("mode", decode_mode_name(c.mode))
      .num("temperature", c.temperature)
      .integer("top_k", c.top_k)
      .num("top_p", c.top_p)
      .raw("seed", std::to_string(c.seed))
      .integer("max_steps", c.max_steps)
      .integer("max_tokens_per_step", c.max_tokens_per_step)
      .done();
}

DecodeConfig decode_config_from(const json& j) {
  DecodeConfig c;
  c.mode = parse_decode_mode(j.at("mode").get<std::string>());
  c.temperature = j.at("temperature").get<double>();
  c.top_k = j.at("top_k").get<int>();
  c.top_p = j.at("top_p").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.max_steps = j.at("max_steps").get<int>();
  c.max_tokens_per_step = j.at("max_tokens_per_step").get<int>();
  return c;
}

std::string header_json(const TraceFileHeader& h) {
  return ObjectWriter()
      .str("format", "cop-traces")
      .integer("version", h.version)
      .str("backend_id", h.backend_id)
      .raw("target_labels", string_array(h.target_labels))
      .raw("decode_config", decode_config_json(h.decode_config))
      .str("probe_string", h.probe_string)
      .done();
}

TraceFileHeader header_from(const std::string& line) {
  TraceFileHeader h;
  try {
    const auto j = json::parse(line);
    if (j.value("format", std::string()) != "cop-traces") {
      throw Error(ErrorCode::kParseError, "not a trace file");
    }
    h.version = j.at("version").get<int>();
    if (h.version != kTraceFormatVersion) {
      throw Error(ErrorCode::kVersionMismatch, "trace format version " + std::to_string(h.version) +
                                                   " (expected " + std::to_string(kTraceFormatVersion) + ")");
    }
    h.backend_id = j.at("backend_id").get<std::string>();
    h.target_labels = j.at("target_labels").get<std::vector<std::string>>();
    h.decode_config = decode_config_from(j.at("decode_config"));
    h.probe_string = j.at("probe_string").get<std::string>();
  } catch (const json::exception& e) {
    throw LineError(ErrorCode::kParseError, 1, e.what());
  }
  return h;
}

void check_trace_against(const TraceFileHeader& h, const ProbeTrace& t) {
  t.validate();
  if (t.matrix.width() != h.target_labels.size()) {
    throw Error(ErrorCode::kHeaderMismatch, t.question_id + ": matrix width differs from target set");
  }
  if (t.backend_id != h.backend_id) {
    throw Error(ErrorCode::kHeaderMismatch, t.question_id + ": trace from backend " + t.backend_id);
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string label_of(const std::vector<std::string>& labels, std::size_t i) {
  return i < labels.size() ? labels[i] : std::to_string(i);
}

std::string yes_no(bool b) { return b ? "1" : "0"; }

}  // namespace

std::string DatasetRecord::render_question() const {
  std::string out = question;
  for (const auto& c : choices) out += "\n(" + c.label + ") " + c.text;
  return out;
}

std::size_t DatasetRecord::answer_index() const {
  for (std::size_t i = 0; i < choices.size(); ++i) {
    if (choices[i].label == answer_label) return i;
  }
  throw Error(ErrorCode::kInvalidAnswerLabel, id + ": answer '" + answer_label + "' not among choices");
}

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<DatasetRecord> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    DatasetRecord r;
    try {
      const auto j = json::parse(line);
      r.id = j.at("id").get<std::string>();
      r.question = j.at("question").get<std::string>();
      for (const auto& c : j.at("choices")) {
        r.choices.push_back({c.at("label").get<std::string>(), c.at("text").get<std::string>()});
      }
      r.answer_label = j.at("answer_label").get<std::string>();
      if (j.contains("metadata")) {
        for (const auto& [k, v] : j.at("metadata").items()) {
          r.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
        }
      }
    } catch (const json::exception& e) {
      throw LineError(ErrorCode::kParseError, lineno, e.what());
    }
    std::set<std::string> labels;
    for (const auto& c : r.choices) {
      if (!labels.insert(c.label).second) {
        throw LineError(ErrorCode::kParseError, lineno, r.id + ": duplicate choice label " + c.label);
      }
    }
    if (!labels.contains(r.answer_label)) {
      throw Error(ErrorCode::kInvalidAnswerLabel, r.id + ": answer '" + r.answer_label + "' not among choices");
    }
    if (!ids.insert(r.id).second) throw Error(ErrorCode::kDuplicateId, r.id);
    out.push_back(std::move(r));
  }
  return out;
}

void write_dataset(std::span<const DatasetRecord> records, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (const auto& r : records) {
    std::string choices = "[";
    for (std::size_t i = 0; i < r.choices.size(); ++i) {
      choices += (i ? "," : "") +
                 ObjectWriter().str("label", r.choices[i].label).str("text", r.choices[i].text).done();
    }
    choices += "]";
    out << ObjectWriter()
               .str("id", r.id)
               .str("question", r.question)
               .raw("choices", choices)
               .str("answer_label", r.answer_label)
               .raw("metadata", string_map(r.metadata))
               .done()
        << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

std::string trace_to_json(const ProbeTrace& t) {
  std::string matrix = "[";
  for (std::size_t i = 0; i < t.matrix.row_count(); ++i) {
    matrix += i ? ",[" : "[";
    const auto probs = t.matrix[i].probs();
    for (std::size_t j = 0; j < probs.size(); ++j) matrix += (j ? "," : "") + detail::json_number(probs[j]);
    matrix += "]";
  }
  matrix += "]";
  const std::string flags = ObjectWriter()
                                .boolean("answer_fallback", t.flags.answer_fallback)
                                .boolean("partial_distribution", t.flags.partial_distribution)
                                .boolean("step_limit_reached", t.flags.step_limit_reached)
                                .boolean("budget_exceeded", t.flags.budget_exceeded)
                                .done();
  return ObjectWriter()
      .str("question_id", t.question_id)
      .integer("sample_index", t.sample_index)
      .str("prompt", t.prompt)
      .raw("steps", string_array(t.steps))
      .raw("matrix", matrix)
      .integer("final_prediction", static_cast<long long>(t.final_prediction))
      .raw("gold", t.gold ? std::to_string(*t.gold) : "null")
      .raw("decode_config", decode_config_json(t.decode_config))
      .str("backend_id", t.backend_id)
      .str("probe_string", t.probe_string)
      .raw("flags", flags)
      .raw("metadata", string_map(t.metadata))
      .done();
}

ProbeTrace trace_from_json(std::string_view line) {
  const auto j = json::parse(line);
  ProbeTrace t;
  t.question_id = j.at("question_id").get<std::string>();
  t.sample_index = j.at("sample_index").get<int>();
  t.prompt = j.at("prompt").get<std::string>();
  t.steps = j.at("steps").get<std::vector<std::string>>();
  std::vector<ConfidenceRow> rows;
  for (const auto& r : j.at("matrix")) rows.emplace_back(r.get<std::vector<double>>());
  t.matrix = ConfidenceMatrix(std::move(rows));
  t.final_prediction = j.at("final_prediction").get<std::size_t>();
  if (!j.at("gold").is_null()) t.gold = j.at("gold").get<std::size_t>();
  t.decode_config = decode_config_from(j.at("decode_config"));
  t.backend_id = j.at("backend_id").get<std::string>();
  t.probe_string = j.at("probe_string").get<std::string>();
  const auto& f = j.at("flags");
  t.flags.answer_fallback = f.at("answer_fallback").get<bool>();
  t.flags.partial_distribution = f.at("partial_distribution").get<bool>();
  t.flags.step_limit_reached = f.at("step_limit_reached").get<bool>();
  t.flags.budget_exceeded = f.at("budget_exceeded").get<bool>();
  t.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
  t.validate();
  return t;
}

void write_traces(const TraceFileHeader& header, std::span<const ProbeTrace> traces,
                  const std::filesystem::path& path, bool append) {
  for (const auto& t : traces) check_trace_against(header, t);
  const bool extend = append && std::filesystem::exists(path) && std::filesystem::file_size(path) > 0;
  if (extend) {
    auto in = open_in(path);
    std::string first;
    std::getline(in, first);
    const auto existing = header_from(first);
    if (existing.backend_id != header.backend_id || existing.target_labels != header.target_labels ||
        existing.probe_string != header.probe_string) {
      throw Error(ErrorCode::kHeaderMismatch, path.string() + " was written with a different backend, "
                                                                "target set or probe string");
    }
  }
  auto out = open_out(path, extend);
  if (!extend) out << header_json(header) << '\n';
  for (const auto& t : traces) out << trace_to_json(t) << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

TraceFile read_traces(const std::filesystem::path& path) {
  auto in = open_in(path);
  TraceFile file;
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParseError, path.string() + " is empty");
  file.header = header_from(line);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    try {
      file.traces.push_back(trace_from_json(line));
    } catch (const json::exception& e) {
      throw LineError(ErrorCode::kParseError, lineno, e.what());
    } catch (const LineError&) {
      throw;
    } catch (const Error& e) {
      throw LineError(e.code(), lineno, e.what());
    }
    check_trace_against(file.header, file.traces.back());
  }
  return file;
}

std::vector<JudgeLabel> load_judge_labels(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<JudgeLabel> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    try {
      const auto j = json::parse(line);
      out.push_back({j.at("question_id").get<std::string>(), j.value("sample_index", 0),
                     j.at("answer_correct").get<bool>(), j.at("cot_correct").get<bool>()});
    } catch (const json::exception& e) {
      throw LineError(ErrorCode::kParseError, lineno, e.what());
    }
  }
  return out;
}

const JudgeLabel* find_judge_label(std::span<const JudgeLabel> labels, const ProbeTrace& trace) {
  const JudgeLabel* fallback = nullptr;
  for (const auto& l : labels) {
    if (l.question_id != trace.question_id) continue;
    if (l.sample_index == trace.sample_index) return &l;
    if (l.sample_index == 0 && fallback == nullptr) fallback = &l;
  }
  return fallback;
}

std::string format_number(double v) { return detail::json_number(v); }

std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

void write_csv(const CsvTable& table, const std::filesystem::path& path) {
  auto out = open_out(path);
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << csv_field(table.columns[i]);
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << csv_field(row[i]);
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

CsvTable ear_report(std::span<const NamedTraces> sets) {
  CsvTable t{{"name", "n", "n_ea", "ear"}, {}};
  for (const auto& s : sets) {
    const auto n_ea = std::count_if(s.traces.begin(), s.traces.end(), is_early_answering);
    t.rows.push_back({s.name, std::to_string(s.traces.size()), std::to_string(n_ea),
                      format_number(ear(s.traces))});
  }
  return t;
}

CsvTable accuracy_split_report(std::span<const NamedTraces> sets) {
  CsvTable t{{"name", "n_ea", "acc_ea", "n_not_ea", "acc_not_ea"}, {}};
  for (const auto& s : sets) {
    const auto split = accuracy_split(s.traces);
    t.rows.push_back({s.name, std::to_string(split.n_ea), format_optional(split.acc_ea),
                      std::to_string(split.n_not_ea), format_optional(split.acc_not_ea)});
  }
  return t;
}

CsvTable effect_report(std::span<const NamedTraces> sets) {
  CsvTable t{{"name", "n", "positive", "negative", "neutral"}, {}};
  for (const auto& s : sets) {
    std::array<std::size_t, 3> counts = {0, 0, 0};
    for (const auto& tr : s.traces) ++counts[static_cast<std::size_t>(cot_effect(tr))];
    t.rows.push_back({s.name, std::to_string(s.traces.size()), std::to_string(counts[0]),
                      std::to_string(counts[1]), std::to_string(counts[2])});
  }
  return t;
}

CsvTable score_report(std::span<const ProbeTrace> traces, const std::vector<std::string>& labels) {
  CsvTable t{{"question_id", "sample_index", "steps", "final_label", "gold_label", "correct", "cop_score",
              "early_answering", "f_max", "f_min", "f_min_delta", "degenerate", "answer_fallback",
              "partial_distribution", "step_limit_reached"},
             {}};
  for (const auto& tr : traces) {
    const auto x = extract_features(tr);
    t.rows.push_back({tr.question_id, std::to_string(tr.sample_index), std::to_string(tr.step_count()),
                      label_of(labels, tr.final_prediction), tr.gold ? label_of(labels, *tr.gold) : "",
                      tr.gold ? yes_no(tr.correct()) : "", format_number(cop_score(tr)),
                      yes_no(is_early_answering(tr)), format_number(x.f_max), format_number(x.f_min),
                      format_number(x.f_min_delta), yes_no(x.degenerate), yes_no(tr.flags.answer_fallback),
                      yes_no(tr.flags.partial_distribution), yes_no(tr.flags.step_limit_reached)});
  }
  return t;
}

CsvTable strategy_report(const std::string& model, std::span<const StrategyRow> rows) {
  CsvTable t{{"model", "strategy", "k", "n", "correct", "accuracy"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({model, r.strategy, std::to_string(r.k), std::to_string(r.n), std::to_string(r.correct),
                      format_number(r.accuracy)});
  }
  return t;
}

CsvTable decisions_report(std::span<const QuestionDecision> decisions,
                          const std::vector<std::string>& labels) {
  CsvTable t{{"question_id", "gold", "gs_label", "maj_sample", "maj_label", "cops_sample", "cops_label",
              "cops_score", "gs_correct", "maj_correct", "cops_correct"},
             {}};
  for (const auto& d : decisions) {
    const auto& maj = d.samples[d.maj_index];
    const auto& cops = d.samples[d.cops_index];
    t.rows.push_back({d.id, d.greedy.gold ? label_of(labels, *d.greedy.gold) : "",
                      label_of(labels, d.greedy.final_prediction), std::to_string(maj.sample_index),
                      label_of(labels, maj.final_prediction), std::to_string(cops.sample_index),
                      label_of(labels, cops.final_prediction), format_number(cop_score(cops)),
                      yes_no(d.gs_correct), yes_no(d.maj_correct), yes_no(d.cops_correct)});
  }
  return t;
}

CsvTable tree_metrics_report(const ClassificationMetrics& m, std::size_t n) {
  return {{"n", "tp", "fp", "fn", "tn", "precision", "recall", "f1"},
          {{std::to_string(n), std::to_string(m.tp), std::to_string(m.fp), std::to_string(m.fn),
            std::to_string(m.tn), format_optional(m.precision), format_optional(m.recall),
            format_optional(m.f1)}}};
}

CsvTable tafcr_report(std::span<const JudgeRecord> records) {
  std::size_t ta = 0;
  std::size_t ta_fc = 0;
  for (const auto& r : records) {
    ta += r.answer_correct ? 1 : 0;
    ta_fc += (r.answer_correct && !r.cot_correct) ? 1 : 0;
  }
  return {{"n", "true_answers", "true_answer_false_cot", "tafcr"},
          {{std::to_string(records.size()), std::to_string(ta), std::to_string(ta_fc),
            format_number(tafcr(records))}}};
}

CsvTable trajectory_series(const ProbeTrace& trace) {
  CsvTable t{{"step", "p"}, {}};
  const auto col = trace.final_column();
  for (std::size_t i = 0; i < col.size(); ++i) t.rows.push_back({std::to_string(i), format_number(col[i])});
  return t;
}

CsvTable decile_series(std::span<const DecilePoint> points) {
  CsvTable t{{"section", "count", "mean_score", "accuracy"}, {}};
  for (std::size_t i = 0; i < points.size(); ++i) {
    t.rows.push_back({std::to_string(i + 1), std::to_string(points[i].count), format_number(points[i].mean_score),
                      format_number(points[i].accuracy)});
  }
  return t;
}

std::vector<GroupPoint> ear_curve(std::span<const ProbeTrace> traces, const std::string& group_key) {
  std::map<std::string, std::vector<ProbeTrace>> groups;
  for (const auto& t : traces) {
    auto it = t.metadata.find(group_key);
    groups[it == t.metadata.end() ? "(none)" : it->second].push_back(t);
  }
  std::vector<GroupPoint> out;
  for (const auto& [name, members] : groups) {
    std::size_t correct = 0;
    for (const auto& t : members) correct += t.correct() ? 1 : 0;
    out.push_back({name, members.size(), ear(members),
                   static_cast<double>(correct) / static_cast<double>(members.size())});
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.ear < b.ear; });
  return out;
}

CsvTable ear_curve_series(std::span<const GroupPoint> points, double sigma) {
  std::vector<double> ears;
  std::vector<double> accs;
  for (const auto& p : points) {
    ears.push_back(p.ear);
    accs.push_back(p.accuracy);
  }
  const auto ear_s = gaussian_smooth(ears, sigma);
  const auto acc_s = gaussian_smooth(accs, sigma);
  CsvTable t{{"group", "n", "ear", "accuracy", "ear_smoothed", "accuracy_smoothed"}, {}};
  for (std::size_t i = 0; i < points.size(); ++i) {
    t.rows.push_back({points[i].group, std::to_string(points[i].n), format_number(points[i].ear),
                      format_number(points[i].accuracy), format_number(ear_s[i]), format_number(acc_s[i])});
  }
  return t;
}

std::vector<std::filesystem::path> write_trajectories(std::span<const ProbeTrace> traces,
                                                      const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    std::string id = traces[i].question_id;
    for (char& c : id) {
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
    }
    char prefix[16];
    std::snprintf(prefix, sizeof prefix, "%04zu", i);
    auto path = dir / ("traj_" + std::string(prefix) + "_" + id + "_s" +
                       std::to_string(traces[i].sample_index) + ".csv");
    write_csv(trajectory_series(traces[i]), path);
    out.push_back(std::move(path));
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kIoError, "sha256 failed for " + path.string());
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xf];
  }
  return hex;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  json doc;
  doc["format"] = "cop-manifest";
  doc["command"] = manifest.command;
  doc["parameters"] = manifest.parameters;
  if (manifest.backend) {
    json b = {{"backend_id", manifest.backend->backend_id},
              {"vocabulary_size", manifest.backend->vocabulary_size},
              {"supports_full_distribution", manifest.backend->supports_full_distribution}};
    b["top_logprobs_limit"] = manifest.backend->top_logprobs_limit ? json(*manifest.backend->top_logprobs_limit)
                                                                   : json(nullptr);
    doc["backend"] = b;
  } else {
    doc["backend"] = nullptr;
  }
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  std::vector<std::filesystem::path> outputs = manifest.outputs;
  std::sort(outputs.begin(), outputs.end());
  json outs = json::array();
  for (const auto& o : outputs) {
    outs.push_back({{"path", std::filesystem::relative(o, base).generic_string()}, {"sha256", sha256_file(o)}});
  }
  doc["outputs"] = outs;
  auto out = open_out(path);
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

}  // namespace cop
