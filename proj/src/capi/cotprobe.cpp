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

#include "cotprobe/cotprobe.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "cop/analysis.hpp"
#include "cop/error.hpp"
#include "cop/io.hpp"
#include "cop/probe.hpp"
#include "cop/remote_backend.hpp"
#include "cop/scripted_backend.hpp"
#include "cop/selection.hpp"
#include "cop/toy_lm.hpp"
#include "cop/trace.hpp"
#include "cop/tree.hpp"
#include "json.hpp"

struct cop_backend {
  std::unique_ptr<cop::ModelBackend> impl;
};

struct cop_dataset {
  std::vector<cop::DatasetRecord> records;
};

struct cop_traces {
  cop::TraceFile file;
};

struct cop_labels {
  std::vector<cop::JudgeLabel> labels;
};

struct cop_tree {
  cop::CoPTree tree;
};

namespace {

namespace fs = std::filesystem;

thread_local std::string g_last_error;

template <class F>
cop_status guard(F&& body) {
  g_last_error.clear();
  try {
    body();
    return COP_OK;
  } catch (const cop::Error& e) {
    g_last_error = e.what();
    return static_cast<cop_status>(static_cast<int>(e.code()));
  } catch (const fs::filesystem_error& e) {
    g_last_error = e.what();
    return COP_ERR_IO;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return COP_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return COP_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown exception";
    return COP_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw cop::Error(cop::ErrorCode::kInvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

cop::DecodeConfig to_config(const cop_decode_config* c) {
  cop::DecodeConfig cfg;
  if (c) {
    cfg.mode = c->mode == COP_DECODE_SAMPLE ? cop::DecodeMode::kSample : cop::DecodeMode::kGreedy;
    cfg.temperature = c->temperature;
    cfg.top_k = c->top_k;
    cfg.top_p = c->top_p;
    cfg.seed = c->seed;
    cfg.max_steps = c->max_steps;
    cfg.max_tokens_per_step = c->max_tokens_per_step;
  }
  cfg.validate();
  return cfg;
}

cop::RemoteConfig to_remote(const cop_remote_options* o) {
  cop::RemoteConfig rc;
  if (o->endpoint) rc.endpoint = o->endpoint;
  if (o->auth_token) rc.auth_token = o->auth_token;
  if (o->model) rc.model = o->model;
  if (o->top_logprobs > 0) rc.top_logprobs = o->top_logprobs;
  if (o->max_attempts > 0) rc.max_attempts = o->max_attempts;
  if (o->initial_backoff_ms >= 0) rc.initial_backoff = std::chrono::milliseconds(o->initial_backoff_ms);
  return rc;
}

std::vector<std::string> split_labels(const char* text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
    cur.clear();
  };
  for (const char* p = text; *p; ++p) {
    if (*p == ',') {
      flush();
    } else {
      cur += *p;
    }
  }
  flush();
  return out;
}

// Everything a batch run over a dataset needs.
struct RunSetup {
  cop::TargetTokenSet targets{{cop::TargetEntry{"A", 0}}};
  std::vector<cop::EvalItem> items;
  std::string probe_string;
};

RunSetup prepare_run(const cop::ModelBackend& backend, const cop_dataset& dataset,
                     const cop_run_options* opts) {
  cop_run_options defaults;
  cop_run_options_default(&defaults);
  if (!opts) opts = &defaults;
  if (dataset.records.empty()) throw cop::Error(cop::ErrorCode::kEmptyInput, "dataset is empty");

  std::vector<std::string> labels;
  if (opts->labels) {
    labels = split_labels(opts->labels);
  } else {
    for (const auto& c : dataset.records.front().choices) labels.push_back(c.label);
  }
  RunSetup setup;
  setup.targets = cop::validate_target_set(labels, backend);
  setup.probe_string = opts->probe_string ? opts->probe_string : std::string(cop::kDefaultProbeString);

  cop::PromptTemplate tmpl;
  if (opts->demos_path) tmpl = cop::load_prompt_template(opts->demos_path);
  const std::size_t shots = opts->shots >= 0 ? static_cast<std::size_t>(opts->shots) : 5;
  for (const auto& rec : dataset.records) {
    cop::EvalItem item;
    item.id = rec.id;
    item.prompt = tmpl.for_question(rec.render_question(), shots);
    const auto gold = setup.targets.index_of(rec.answer_label);
    if (!gold) {
      throw cop::Error(cop::ErrorCode::kInvalidAnswerLabel,
                       "answer label '" + rec.answer_label + "' of " + rec.id + " is not a target label");
    }
    item.gold = *gold;
    item.metadata = rec.metadata;
    setup.items.push_back(std::move(item));
  }
  return setup;
}

cop::RunOptions run_options_for(const RunSetup& setup, const cop::EvalItem& item) {
  cop::RunOptions ro;
  ro.question_id = item.id;
  ro.probe_string = setup.probe_string;
  ro.gold = item.gold;
  ro.metadata = item.metadata;
  return ro;
}

cop::TraceFileHeader header_for(const cop::ModelBackend& backend, const RunSetup& setup,
                                const cop::DecodeConfig& cfg) {
  cop::TraceFileHeader h;
  h.backend_id = backend.descriptor().backend_id;
  h.target_labels = setup.targets.labels();
  h.decode_config = cfg;
  h.probe_string = setup.probe_string;
  return h;
}

const cop::ProbeTrace& trace_at(const cop_traces* traces, std::size_t index) {
  require(traces != nullptr, "traces is NULL");
  if (index >= traces->file.traces.size()) {
    throw cop::Error(cop::ErrorCode::kInvalidArgument, "trace index out of range");
  }
  return traces->file.traces[index];
}

std::string label_text(const std::vector<std::string>& labels, std::size_t i) {
  return i < labels.size() ? labels[i] : std::to_string(i);
}

// Traces of each question in order of first appearance.
std::vector<std::pair<std::string, std::vector<cop::ProbeTrace>>> group_by_question(
    const std::vector<cop::ProbeTrace>& traces) {
  std::vector<std::pair<std::string, std::vector<cop::ProbeTrace>>> groups;
  std::map<std::string, std::size_t> where;
  for (const auto& t : traces) {
    auto [it, inserted] = where.emplace(t.question_id, groups.size());
    if (inserted) groups.push_back({t.question_id, {}});
    groups[it->second].second.push_back(t);
  }
  return groups;
}

cop::Verdict judged_verdict(const std::vector<cop::JudgeLabel>& labels, const cop::ProbeTrace& t) {
  const cop::JudgeLabel* l = cop::find_judge_label(labels, t);
  if (!l) {
    throw cop::Error(cop::ErrorCode::kMissingGold,
                     "no judge label for " + t.question_id + " sample " + std::to_string(t.sample_index));
  }
  return l->cot_correct ? cop::Verdict::kCorrect : cop::Verdict::kIncorrect;
}

double nan_or(const std::optional<double>& v) {
  return v ? *v : std::numeric_limits<double>::quiet_NaN();
}

void collect_files(const fs::path& p, std::vector<fs::path>& out) {
  if (fs::is_directory(p)) {
    std::vector<fs::path> entries;
    for (const auto& e : fs::recursive_directory_iterator(p)) {
      if (e.is_regular_file()) entries.push_back(e.path());
    }
    std::sort(entries.begin(), entries.end());
    out.insert(out.end(), entries.begin(), entries.end());
  } else {
    out.push_back(p);
  }
}

}  // namespace

extern "C" {

const char* cop_version(void) { return "1.0.0"; }

const char* cop_status_name(cop_status status) {
  if (status == COP_OK) return "Ok";
  if (status == COP_ERR_INTERNAL) return "Internal";
  const int v = static_cast<int>(status);
  if (v >= 1 && v <= static_cast<int>(cop::ErrorCode::kHeaderMismatch)) {
    return cop::error_code_name(static_cast<cop::ErrorCode>(v));
  }
  return "Unknown";
}

const char* cop_last_error(void) { return g_last_error.c_str(); }

void cop_string_free(char* s) { std::free(s); }

void cop_decode_config_default(cop_decode_config* cfg) {
  if (!cfg) return;
  const cop::DecodeConfig d;
  cfg->mode = COP_DECODE_GREEDY;
  cfg->temperature = d.temperature;
  cfg->top_k = d.top_k;
  cfg->top_p = d.top_p;
  cfg->seed = d.seed;
  cfg->max_steps = d.max_steps;
  cfg->max_tokens_per_step = d.max_tokens_per_step;
}

void cop_run_options_default(cop_run_options* opts) {
  if (!opts) return;
  opts->labels = nullptr;
  opts->probe_string = nullptr;
  opts->demos_path = nullptr;
  opts->shots = 5;
  opts->samples = 1;
}

void cop_remote_options_default(cop_remote_options* opts) {
  if (!opts) return;
  const cop::RemoteConfig d;
  opts->endpoint = nullptr;
  opts->auth_token = nullptr;
  opts->model = nullptr;
  opts->top_logprobs = d.top_logprobs;
  opts->max_attempts = d.max_attempts;
  opts->initial_backoff_ms = static_cast<int>(d.initial_backoff.count());
}

/* ---- backends ---- */

cop_status cop_backend_open_scripted(const char* script_path, cop_backend** out) {
  return guard([&] {
    require(script_path && out, "script_path and out are required");
    auto b = std::make_unique<cop_backend>();
    b->impl = std::make_unique<cop::ScriptedBackend>(cop::load_script(script_path));
    *out = b.release();
  });
}

cop_status cop_backend_open_toy(const char* corpus_path, int order, cop_backend** out) {
  return guard([&] {
    require(corpus_path && out, "corpus_path and out are required");
    cop::ToyLanguageModel::Options o;
    if (order > 0) o.order = order;
    auto b = std::make_unique<cop_backend>();
    b->impl = std::make_unique<cop::ToyLanguageModel>(cop::ToyLanguageModel::from_corpus_file(corpus_path, o));
    *out = b.release();
  });
}

cop_status cop_backend_open_remote(const cop_remote_options* opts, cop_backend** out) {
  return guard([&] {
    require(opts && opts->endpoint && out, "endpoint and out are required");
    auto b = std::make_unique<cop_backend>();
    b->impl = std::make_unique<cop::RemoteBackend>(to_remote(opts));
    *out = b.release();
  });
}

void cop_backend_free(cop_backend* backend) { delete backend; }

cop_status cop_backend_descriptor_json(const cop_backend* backend, char** out_json) {
  return guard([&] {
    require(backend && out_json, "backend and out_json are required");
    const auto d = backend->impl->descriptor();
    nlohmann::json j = {{"backend_id", d.backend_id},
                        {"vocabulary_size", d.vocabulary_size},
                        {"supports_full_distribution", d.supports_full_distribution}};
    j["top_logprobs_limit"] = d.top_logprobs_limit ? nlohmann::json(*d.top_logprobs_limit) : nlohmann::json(nullptr);
    *out_json = dup_string(j.dump());
  });
}

cop_status cop_backend_check(const cop_remote_options* opts, const char* labels, char** report_json,
                             int* passed) {
  return guard([&] {
    require(report_json && passed, "report_json and passed are required");
    cop_remote_options defaults;
    cop_remote_options_default(&defaults);
    if (!opts) opts = &defaults;
    cop::RemoteConfig rc = to_remote(opts);
    const std::vector<std::string> label_list = split_labels(labels ? labels : "A,B,C,D");

    std::unique_ptr<cop::StubServer> stub;
    if (!opts->endpoint) {
      stub = std::make_unique<cop::StubServer>();
      rc.endpoint = stub->endpoint();
      // Keep fault-injection retries quick against the local stub.
      if (opts == &defaults) rc.initial_backoff = std::chrono::milliseconds(10);
    }
    const cop::BackendCheckReport report = cop::run_backend_check(rc, label_list, stub.get());

    nlohmann::json j;
    j["endpoint"] = stub ? std::string("stub") : report.endpoint;
    j["passed"] = report.passed();
    j["checks"] = nlohmann::json::array();
    for (const auto& c : report.checks) {
      j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    }
    *report_json = dup_string(j.dump(2));
    *passed = report.passed() ? 1 : 0;
  });
}

/* ---- datasets, traces, labels ---- */

cop_status cop_dataset_load(const char* path, cop_dataset** out) {
  return guard([&] {
    require(path && out, "path and out are required");
    auto d = std::make_unique<cop_dataset>();
    d->records = cop::load_dataset(path);
    *out = d.release();
  });
}

size_t cop_dataset_size(const cop_dataset* dataset) { return dataset ? dataset->records.size() : 0; }

void cop_dataset_free(cop_dataset* dataset) { delete dataset; }

cop_status cop_probe_run(const cop_backend* backend, const cop_dataset* dataset,
                         const cop_decode_config* cfg, const cop_run_options* opts, cop_traces** out) {
  return guard([&] {
    require(backend && dataset && out, "backend, dataset and out are required");
    const cop::DecodeConfig base = to_config(cfg);
    const RunSetup setup = prepare_run(*backend->impl, *dataset, opts);
    const int samples = opts && opts->samples > 0 ? opts->samples : 1;

    auto t = std::make_unique<cop_traces>();
    t->file.header = header_for(*backend->impl, setup, base);
    for (const auto& item : setup.items) {
      cop::RunOptions ro = run_options_for(setup, item);
      for (int s = 0; s < samples; ++s) {
        cop::DecodeConfig c = base;
        c.seed = base.seed + static_cast<std::uint64_t>(s);
        ro.sample_index = s;
        t->file.traces.push_back(cop::run_cop(item.prompt, *backend->impl, setup.targets, c, ro));
      }
    }
    *out = t.release();
  });
}

cop_status cop_traces_read(const char* path, cop_traces** out) {
  return guard([&] {
    require(path && out, "path and out are required");
    auto t = std::make_unique<cop_traces>();
    t->file = cop::read_traces(path);
    *out = t.release();
  });
}

cop_status cop_traces_write(const cop_traces* traces, const char* path, int append) {
  return guard([&] {
    require(traces && path, "traces and path are required");
    cop::write_traces(traces->file.header, traces->file.traces, path, append != 0);
  });
}

size_t cop_traces_size(const cop_traces* traces) { return traces ? traces->file.traces.size() : 0; }

void cop_traces_free(cop_traces* traces) { delete traces; }

cop_status cop_trace_json(const cop_traces* traces, size_t index, char** out_json) {
  return guard([&] {
    require(out_json != nullptr, "out_json is NULL");
    *out_json = dup_string(cop::trace_to_json(trace_at(traces, index)));
  });
}

cop_status cop_trace_cop_score(const cop_traces* traces, size_t index, double* out) {
  return guard([&] {
    require(out != nullptr, "out is NULL");
    *out = cop::cop_score(trace_at(traces, index));
  });
}

cop_status cop_trace_is_early_answering(const cop_traces* traces, size_t index, int* out) {
  return guard([&] {
    require(out != nullptr, "out is NULL");
    *out = cop::is_early_answering(trace_at(traces, index)) ? 1 : 0;
  });
}

cop_status cop_trace_features(const cop_traces* traces, size_t index, double out[3]) {
  return guard([&] {
    require(out != nullptr, "out is NULL");
    const auto x = cop::extract_features(trace_at(traces, index)).as_array();
    std::copy(x.begin(), x.end(), out);
  });
}

cop_status cop_labels_load(const char* path, cop_labels** out) {
  return guard([&] {
    require(path && out, "path and out are required");
    auto l = std::make_unique<cop_labels>();
    l->labels = cop::load_judge_labels(path);
    *out = l.release();
  });
}

size_t cop_labels_size(const cop_labels* labels) { return labels ? labels->labels.size() : 0; }

void cop_labels_free(cop_labels* labels) { delete labels; }

/* ---- analysis ---- */

cop_status cop_analysis_ear(const cop_traces* traces, double* out) {
  return guard([&] {
    require(traces && out, "traces and out are required");
    *out = cop::ear(traces->file.traces);
  });
}

static std::vector<cop::JudgeRecord> judge_records(const cop_labels* labels) {
  std::vector<cop::JudgeRecord> records;
  for (const auto& l : labels->labels) records.push_back({l.answer_correct, l.cot_correct});
  return records;
}

cop_status cop_analysis_tafcr(const cop_labels* labels, double* out) {
  return guard([&] {
    require(labels && out, "labels and out are required");
    *out = cop::tafcr(judge_records(labels));
  });
}

cop_status cop_report_write(cop_report_kind kind, const cop_traces* const* sets, const char* const* names,
                            size_t n_sets, const char* path) {
  return guard([&] {
    require(sets && names && path && n_sets > 0, "sets, names and path are required");
    std::vector<cop::NamedTraces> named;
    for (size_t i = 0; i < n_sets; ++i) {
      require(sets[i] && names[i], "NULL trace set or name");
      named.push_back({names[i], sets[i]->file.traces});
    }
    cop::CsvTable table;
    switch (kind) {
      case COP_REPORT_EAR:
        table = cop::ear_report(named);
        break;
      case COP_REPORT_ACCURACY_SPLIT:
        table = cop::accuracy_split_report(named);
        break;
      case COP_REPORT_EFFECT:
        table = cop::effect_report(named);
        break;
      case COP_REPORT_SCORES: {
        std::vector<cop::ProbeTrace> all;
        for (size_t i = 0; i < n_sets; ++i) {
          all.insert(all.end(), sets[i]->file.traces.begin(), sets[i]->file.traces.end());
        }
        table = cop::score_report(all, sets[0]->file.header.target_labels);
        break;
      }
      default:
        throw cop::Error(cop::ErrorCode::kInvalidArgument, "unknown report kind");
    }
    cop::write_csv(table, path);
  });
}

cop_status cop_report_tafcr(const cop_labels* labels, const char* path) {
  return guard([&] {
    require(labels && path, "labels and path are required");
    cop::write_csv(cop::tafcr_report(judge_records(labels)), path);
  });
}

cop_status cop_pearson(const double* xs, const double* ys, size_t n, double* out) {
  return guard([&] {
    require(xs && ys && out, "xs, ys and out are required");
    *out = cop::pearson({xs, n}, {ys, n});
  });
}

cop_status cop_gaussian_smooth(const double* series, size_t n, double sigma, double* out) {
  return guard([&] {
    require(series && out, "series and out are required");
    const auto s = cop::gaussian_smooth({series, n}, sigma);
    std::copy(s.begin(), s.end(), out);
  });
}

cop_status cop_paired_t_test(const double* a, const double* b, size_t n, cop_t_test* out) {
  return guard([&] {
    require(a && b && out, "a, b and out are required");
    const auto r = cop::paired_t_test({a, n}, {b, n});
    out->t = r.t;
    out->p_one_tailed = r.p_one_tailed;
    out->cohens_d = r.cohens_d;
    out->dof = r.dof;
  });
}

/* ---- selection ---- */

cop_status cop_select(const cop_traces* traces, cop_strategy strategy, const char* path, double* accuracy) {
  return guard([&] {
    require(traces && path, "traces and path are required");
    const auto& labels = traces->file.header.target_labels;
    cop::CsvTable table{{"question_id", "sample_index", "prediction", "gold", "correct", "cop_score"}, {}};
    std::size_t n_gold = 0, n_correct = 0;
    for (const auto& [id, members] : group_by_question(traces->file.traces)) {
      std::vector<cop::ProbeTrace> pool;
      const cop::DecodeMode wanted =
          strategy == COP_SELECT_GREEDY ? cop::DecodeMode::kGreedy : cop::DecodeMode::kSample;
      for (const auto& t : members) {
        if (t.decode_config.mode == wanted) pool.push_back(t);
      }
      if (pool.empty()) {
        if (strategy == COP_SELECT_GREEDY) {
          throw cop::Error(cop::ErrorCode::kInvalidArgument, "no greedy trace for " + id);
        }
        pool = members;
      }
      std::size_t pick = 0;
      if (strategy == COP_SELECT_MAJORITY) {
        pick = cop::majority_vote(pool);
      } else if (strategy == COP_SELECT_COPS) {
        pick = cop::select_by_cops(pool);
      } else {
        require(strategy == COP_SELECT_GREEDY, "unknown strategy");
      }
      const auto& t = pool[pick];
      std::string gold, correct;
      if (t.gold) {
        ++n_gold;
        gold = label_text(labels, *t.gold);
        correct = t.correct() ? "1" : "0";
        if (t.correct()) ++n_correct;
      }
      table.rows.push_back({id, std::to_string(t.sample_index), label_text(labels, t.final_prediction), gold,
                            correct, cop::format_number(cop::cop_score(t))});
    }
    cop::write_csv(table, path);
    if (accuracy) {
      *accuracy = n_gold == 0 ? std::numeric_limits<double>::quiet_NaN()
                              : static_cast<double>(n_correct) / static_cast<double>(n_gold);
    }
  });
}

cop_status cop_evaluate_strategies(const cop_backend* backend, const cop_dataset* dataset,
                                   const cop_decode_config* sampling, const cop_run_options* opts, int k,
                                   const char* model_name, const char* out_dir) {
  return guard([&] {
    require(backend && dataset && out_dir, "backend, dataset and out_dir are required");
    require(k >= 1, "k must be >= 1");
    cop::DecodeConfig cfg = to_config(sampling);
    cfg.mode = cop::DecodeMode::kSample;
    const RunSetup setup = prepare_run(*backend->impl, *dataset, opts);
    cop::RunOptions base;
    base.probe_string = setup.probe_string;
    const auto cmp = cop::evaluate_strategies(setup.items, *backend->impl, setup.targets, cfg,
                                              static_cast<std::size_t>(k), base);
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    const std::string model = model_name ? model_name : backend->impl->descriptor().backend_id;
    cop::write_csv(cop::strategy_report(model, cmp.rows), dir / "strategy_comparison.csv");
    cop::write_csv(cop::decisions_report(cmp.decisions, setup.targets.labels()), dir / "decisions.csv");
  });
}

/* ---- tree ---- */

cop_status cop_tree_train(const cop_traces* traces, const cop_labels* labels, int max_leaves, uint64_t seed,
                          cop_tree** out) {
  return guard([&] {
    require(traces && labels && out, "traces, labels and out are required");
    require(max_leaves >= 2, "max_leaves must be >= 2");
    std::vector<cop::LabeledSample> samples;
    for (const auto& t : traces->file.traces) {
      samples.push_back({cop::extract_features(t), judged_verdict(labels->labels, t)});
    }
    *out = new cop_tree{cop::train_tree(samples, static_cast<std::size_t>(max_leaves), seed)};
  });
}

cop_status cop_tree_save(const cop_tree* tree, const char* path) {
  return guard([&] {
    require(tree && path, "tree and path are required");
    tree->tree.save(path);
  });
}

cop_status cop_tree_load(const char* path, cop_tree** out) {
  return guard([&] {
    require(path && out, "path and out are required");
    *out = new cop_tree{cop::CoPTree::load(path)};
  });
}

void cop_tree_free(cop_tree* tree) { delete tree; }

size_t cop_tree_leaf_count(const cop_tree* tree) { return tree ? tree->tree.leaf_count() : 0; }

cop_status cop_tree_classify(const cop_tree* tree, const double features[3], int* correct) {
  return guard([&] {
    require(tree && features && correct, "tree, features and correct are required");
    cop::CoPFeatures x;
    x.f_min_delta = features[0];
    x.f_min = features[1];
    x.f_max = features[2];
    *correct = tree->tree.classify(x) == cop::Verdict::kCorrect ? 1 : 0;
  });
}

cop_status cop_tree_evaluate(const cop_tree* tree, const cop_traces* traces, const cop_labels* labels,
                             const char* path, cop_metrics* out) {
  return guard([&] {
    require(tree && traces && labels, "tree, traces and labels are required");
    std::vector<cop::Verdict> preds, truth;
    for (const auto& t : traces->file.traces) {
      preds.push_back(tree->tree.classify(cop::extract_features(t)));
      truth.push_back(judged_verdict(labels->labels, t));
    }
    const auto m = cop::classification_metrics(preds, truth);
    if (path) cop::write_csv(cop::tree_metrics_report(m, preds.size()), path);
    if (out) {
      out->precision = nan_or(m.precision);
      out->recall = nan_or(m.recall);
      out->f1 = nan_or(m.f1);
      out->tp = m.tp;
      out->fp = m.fp;
      out->fn = m.fn;
      out->tn = m.tn;
    }
  });
}

cop_status cop_tree_classify_report(const cop_tree* tree, const cop_traces* traces, const char* path) {
  return guard([&] {
    require(tree && traces && path, "tree, traces and path are required");
    cop::CsvTable table{{"question_id", "sample_index", "min_delta", "min", "max", "verdict"}, {}};
    for (const auto& t : traces->file.traces) {
      const auto f = cop::extract_features(t);
      table.rows.push_back({t.question_id, std::to_string(t.sample_index), cop::format_number(f.f_min_delta),
                            cop::format_number(f.f_min), cop::format_number(f.f_max),
                            std::string(cop::verdict_name(tree->tree.classify(f)))});
    }
    cop::write_csv(table, path);
  });
}

cop_status cop_resample(const cop_backend* backend, const cop_dataset* dataset, const cop_tree* tree,
                        const cop_decode_config* sampling, const cop_run_options* opts, int max_samples,
                        const char* summary_path, cop_traces** out) {
  return guard([&] {
    require(backend && dataset && tree, "backend, dataset and tree are required");
    cop::DecodeConfig cfg = to_config(sampling);
    cfg.mode = cop::DecodeMode::kSample;
    const RunSetup setup = prepare_run(*backend->impl, *dataset, opts);
    const auto labels = setup.targets.labels();

    auto result = std::make_unique<cop_traces>();
    result->file.header = header_for(*backend->impl, setup, cfg);
    cop::CsvTable table{{"question_id", "n_samples", "accepted", "sample_index", "prediction", "gold", "correct",
                         "cop_score"},
                        {}};
    for (const auto& item : setup.items) {
      const auto r = cop::resample_until_accept(item.prompt, *backend->impl, setup.targets, cfg, tree->tree,
                                                max_samples, run_options_for(setup, item));
      table.rows.push_back({item.id, std::to_string(r.n_samples), r.accepted ? "1" : "0",
                            std::to_string(r.trace.sample_index), label_text(labels, r.trace.final_prediction),
                            label_text(labels, item.gold), r.trace.correct() ? "1" : "0",
                            cop::format_number(cop::cop_score(r.trace))});
      result->file.traces.push_back(r.trace);
    }
    if (summary_path) cop::write_csv(table, summary_path);
    if (out) *out = result.release();
  });
}

/* ---- plot data ---- */

cop_status cop_plot_trajectories(const cop_traces* traces, const char* dir, size_t* n_written) {
  return guard([&] {
    require(traces && dir, "traces and dir are required");
    const auto paths = cop::write_trajectories(traces->file.traces, dir);
    if (n_written) *n_written = paths.size();
  });
}

cop_status cop_plot_deciles(const cop_traces* traces, const char* path) {
  return guard([&] {
    require(traces && path, "traces and path are required");
    std::vector<std::pair<double, bool>> scored;
    for (const auto& t : traces->file.traces) {
      if (!t.gold) throw cop::Error(cop::ErrorCode::kMissingGold, "trace " + t.question_id + " has no gold");
      scored.emplace_back(cop::cop_score(t), t.correct());
    }
    cop::write_csv(cop::decile_series(cop::decile_curve(scored)), path);
  });
}

cop_status cop_plot_ear_curve(const cop_traces* traces, const char* group_key, double sigma, const char* path) {
  return guard([&] {
    require(traces && group_key && path, "traces, group_key and path are required");
    const auto points = cop::ear_curve(traces->file.traces, group_key);
    cop::write_csv(cop::ear_curve_series(points, sigma), path);
  });
}

/* ---- manifests ---- */

cop_status cop_manifest_write(const char* path, const char* command, const char* const* keys,
                              const char* const* values, size_t n_params, const cop_backend* backend,
                              const char* const* outputs, size_t n_outputs) {
  return guard([&] {
    require(path && command, "path and command are required");
    require(n_params == 0 || (keys && values), "keys and values are required");
    require(n_outputs == 0 || outputs, "outputs is NULL");
    cop::Manifest m;
    m.command = command;
    for (size_t i = 0; i < n_params; ++i) {
      require(keys[i] && values[i], "NULL parameter");
      m.parameters[keys[i]] = values[i];
    }
    if (backend) m.backend = backend->impl->descriptor();
    const fs::path self = fs::weakly_canonical(path);
    std::vector<fs::path> files;
    for (size_t i = 0; i < n_outputs; ++i) {
      require(outputs[i] != nullptr, "NULL output path");
      collect_files(outputs[i], files);
    }
    std::erase_if(files, [&](const fs::path& f) { return fs::weakly_canonical(f) == self; });
    m.outputs = std::move(files);
    cop::write_manifest(m, path);
  });
}

}  // extern "C"
