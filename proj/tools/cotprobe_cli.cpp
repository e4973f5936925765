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

// cotprobe command-line tool. Built only on the C API in cotprobe/cotprobe.h.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cotprobe/cotprobe.h"

namespace {

namespace fs = std::filesystem;

struct ApiError : std::runtime_error {
  ApiError(cop_status s, const std::string& msg) : std::runtime_error(msg), status(s) {}
  cop_status status;
};

void check(cop_status s) {
  if (s != COP_OK) throw ApiError(s, cop_last_error());
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Backend = std::unique_ptr<cop_backend, Deleter<cop_backend, cop_backend_free>>;
using Dataset = std::unique_ptr<cop_dataset, Deleter<cop_dataset, cop_dataset_free>>;
using Traces = std::unique_ptr<cop_traces, Deleter<cop_traces, cop_traces_free>>;
using Labels = std::unique_ptr<cop_labels, Deleter<cop_labels, cop_labels_free>>;
using Tree = std::unique_ptr<cop_tree, Deleter<cop_tree, cop_tree_free>>;

struct Options {
  std::string dataset;
  std::vector<std::string> traces;
  std::vector<std::string> names;
  std::string backend = "scripted";
  std::string script;
  std::string corpus;
  int order = 3;
  std::string endpoint;
  std::string auth_token;
  std::string model;
  std::string labels;  // judge labels file
  std::string answer_labels;
  std::string demos;
  int shots = 5;
  std::string mode = "greedy";
  int samples = 1;
  int k = 5;
  std::uint64_t seed = 0;
  double temperature = 0.7;
  int top_k = 40;
  double top_p = 0.9;
  int max_steps = 64;
  int max_step_tokens = 128;
  int max_samples = 5;
  int max_leaves = 16;
  std::string tree;
  double sigma = 1.0;
  std::string group_key = "subject";
  std::string probe_string = " So, the answer is (";
  std::string out;
  bool append = false;
};

std::string require_opt(const std::string& value, const char* flag) {
  if (value.empty()) throw CLI::ValidationError(std::string(flag) + " is required for this command");
  return value;
}

Backend open_backend(const Options& o) {
  cop_backend* b = nullptr;
  if (o.backend == "scripted") {
    check(cop_backend_open_scripted(require_opt(o.script, "--script").c_str(), &b));
  } else if (o.backend == "toy") {
    check(cop_backend_open_toy(require_opt(o.corpus, "--corpus").c_str(), o.order, &b));
  } else {
    cop_remote_options ro;
    cop_remote_options_default(&ro);
    const std::string ep = require_opt(o.endpoint, "--endpoint");
    ro.endpoint = ep.c_str();
    ro.auth_token = o.auth_token.empty() ? nullptr : o.auth_token.c_str();
    ro.model = o.model.empty() ? nullptr : o.model.c_str();
    check(cop_backend_open_remote(&ro, &b));
  }
  return Backend(b);
}

Dataset open_dataset(const Options& o) {
  cop_dataset* d = nullptr;
  check(cop_dataset_load(require_opt(o.dataset, "--dataset").c_str(), &d));
  return Dataset(d);
}

Traces open_traces(const std::string& path) {
  cop_traces* t = nullptr;
  check(cop_traces_read(path.c_str(), &t));
  return Traces(t);
}

std::vector<Traces> open_all_traces(const Options& o) {
  if (o.traces.empty()) throw CLI::ValidationError("--traces is required for this command");
  std::vector<Traces> sets;
  for (const auto& p : o.traces) sets.push_back(open_traces(p));
  return sets;
}

Labels open_labels(const Options& o) {
  cop_labels* l = nullptr;
  check(cop_labels_load(require_opt(o.labels, "--labels").c_str(), &l));
  return Labels(l);
}

Tree open_tree(const Options& o) {
  cop_tree* t = nullptr;
  check(cop_tree_load(require_opt(o.tree, "--tree").c_str(), &t));
  return Tree(t);
}

cop_decode_config decode_config(const Options& o, bool force_sample) {
  cop_decode_config c;
  cop_decode_config_default(&c);
  c.mode = (force_sample || o.mode == "sample") ? COP_DECODE_SAMPLE : COP_DECODE_GREEDY;
  c.temperature = o.temperature;
  c.top_k = o.top_k;
  c.top_p = o.top_p;
  c.seed = o.seed;
  c.max_steps = o.max_steps;
  c.max_tokens_per_step = o.max_step_tokens;
  return c;
}

// Strings referenced by a cop_run_options must outlive it.
struct RunOptionsHolder {
  cop_run_options opts{};
  explicit RunOptionsHolder(const Options& o) {
    cop_run_options_default(&opts);
    if (!o.answer_labels.empty()) opts.labels = o.answer_labels.c_str();
    opts.probe_string = o.probe_string.c_str();
    if (!o.demos.empty()) opts.demos_path = o.demos.c_str();
    opts.shots = o.shots;
    opts.samples = o.samples;
  }
};

std::vector<std::string> set_names(const Options& o) {
  std::vector<std::string> names = o.names;
  for (std::size_t i = names.size(); i < o.traces.size(); ++i) names.push_back(fs::path(o.traces[i]).stem().string());
  return names;
}

void write_report(cop_report_kind kind, const Options& o) {
  auto sets = open_all_traces(o);
  const auto names = set_names(o);
  std::vector<const cop_traces*> ptrs;
  std::vector<const char*> cnames;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    ptrs.push_back(sets[i].get());
    cnames.push_back(names[i].c_str());
  }
  check(cop_report_write(kind, ptrs.data(), cnames.data(), ptrs.size(), require_opt(o.out, "--out").c_str()));
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Confidence probing of chain-of-thought reasoning"};
  app.set_config("--config", "", "Key/value configuration file");
  app.option_defaults()->always_capture_default();
  app.fallthrough();
  app.require_subcommand(1, 1);

  app.add_option("--dataset", o.dataset, "Dataset (JSON lines)");
  app.add_option("--traces", o.traces, "Trace file(s)");
  app.add_option("--names", o.names, "Display names of the trace files");
  app.add_option("--backend", o.backend, "Model backend")->check(CLI::IsMember({"scripted", "toy", "remote"}));
  app.add_option("--script", o.script, "Scripted backend file");
  app.add_option("--corpus", o.corpus, "Toy LM training corpus");
  app.add_option("--order", o.order, "Toy LM n-gram order");
  app.add_option("--endpoint", o.endpoint, "Inference server URL")->envname("COP_ENDPOINT");
  app.add_option("--auth-token", o.auth_token, "Bearer token")->envname("COP_AUTH_TOKEN");
  app.add_option("--model", o.model, "Model name sent to the server");
  app.add_option("--labels", o.labels, "Judge labels (JSON lines)");
  app.add_option("--answer-labels", o.answer_labels, "Comma-separated answer labels");
  app.add_option("--demos", o.demos, "Instruction and demonstrations (JSON)");
  app.add_option("--shots", o.shots, "Demonstrations per prompt");
  app.add_option("--mode", o.mode, "Decoding mode")->check(CLI::IsMember({"greedy", "sample"}));
  app.add_option("--samples", o.samples, "Traces per question in probe run");
  app.add_option("--k", o.k, "Samples per question for Maj@k / CoPS@k");
  app.add_option("--seed", o.seed, "Master seed");
  app.add_option("--temperature", o.temperature);
  app.add_option("--top-k", o.top_k);
  app.add_option("--top-p", o.top_p);
  app.add_option("--max-steps", o.max_steps);
  app.add_option("--max-step-tokens", o.max_step_tokens);
  app.add_option("--max-samples", o.max_samples, "Resampling budget per question");
  app.add_option("--max-leaves", o.max_leaves, "Tree leaf budget");
  app.add_option("--tree", o.tree, "Trained tree file");
  app.add_option("--sigma", o.sigma, "Gaussian smoothing width");
  app.add_option("--group-key", o.group_key, "Metadata key grouping the EAR curve");
  app.add_option("--probe-string", o.probe_string);
  app.add_option("--out", o.out, "Output file or directory");
  app.add_flag("--append", o.append, "Append to an existing trace file");

  auto* probe = app.add_subcommand("probe", "Run probed generation");
  probe->require_subcommand(1, 1);
  auto* probe_run = probe->add_subcommand("run", "Dataset to traces");

  auto* analyze = app.add_subcommand("analyze", "Trace statistics");
  analyze->require_subcommand(1, 1);
  auto* an_ear = analyze->add_subcommand("ear", "Early-answering ratio");
  auto* an_split = analyze->add_subcommand("split", "Accuracy of EA vs non-EA traces");
  auto* an_effect = analyze->add_subcommand("effect", "Positive / negative / neutral CoT effect");
  auto* an_tafcr = analyze->add_subcommand("tafcr", "True-answer false-CoT rate");

  auto* score = app.add_subcommand("score", "CoP score per trace");

  auto* select = app.add_subcommand("select", "Choose one trace per question");
  select->require_subcommand(1, 1);
  auto* sel_gs = select->add_subcommand("gs", "Greedy trace");
  auto* sel_maj = select->add_subcommand("maj", "Majority vote over samples");
  auto* sel_cops = select->add_subcommand("cops", "Highest CoP score among samples");
  auto* sel_compare = select->add_subcommand("compare", "GS vs Maj@k vs CoPS@k over a dataset");

  auto* tree = app.add_subcommand("tree", "CoP tree");
  tree->require_subcommand(1, 1);
  auto* tree_train = tree->add_subcommand("train", "Train on judge labels");
  auto* tree_eval = tree->add_subcommand("eval", "Precision / recall / F1");
  auto* tree_classify = tree->add_subcommand("classify", "Verdict per trace");

  auto* resample = app.add_subcommand("resample", "Resample until the tree accepts");

  auto* plot = app.add_subcommand("plot", "Plot-ready series");
  plot->require_subcommand(1, 1);
  auto* plot_traj = plot->add_subcommand("trajectories", "One confidence trajectory per trace");
  auto* plot_dec = plot->add_subcommand("deciles", "Accuracy by CoP score decile");
  auto* plot_ear = plot->add_subcommand("ear-curve", "Smoothed accuracy against EAR per group");

  auto* backend_cmd = app.add_subcommand("backend", "Backend utilities");
  backend_cmd->require_subcommand(1, 1);
  auto* backend_check = backend_cmd->add_subcommand("check", "Contract self-test");

  CLI11_PARSE(app, argc, argv);

  std::string command;
  for (const CLI::App* sub = &app; !sub->get_subcommands().empty();) {
    sub = sub->get_subcommands().front();
    command += (command.empty() ? "" : " ") + sub->get_name();
  }

  try {
    Backend backend;
    std::vector<std::string> outputs;
    int exit_code = 0;

    if (probe_run->parsed()) {
      backend = open_backend(o);
      auto dataset = open_dataset(o);
      const auto cfg = decode_config(o, false);
      RunOptionsHolder ro(o);
      cop_traces* t = nullptr;
      check(cop_probe_run(backend.get(), dataset.get(), &cfg, &ro.opts, &t));
      Traces traces(t);
      check(cop_traces_write(traces.get(), require_opt(o.out, "--out").c_str(), o.append ? 1 : 0));
      std::cout << "wrote " << cop_traces_size(traces.get()) << " traces to " << o.out << "\n";
    } else if (an_ear->parsed()) {
      write_report(COP_REPORT_EAR, o);
    } else if (an_split->parsed()) {
      write_report(COP_REPORT_ACCURACY_SPLIT, o);
    } else if (an_effect->parsed()) {
      write_report(COP_REPORT_EFFECT, o);
    } else if (an_tafcr->parsed()) {
      auto labels = open_labels(o);
      check(cop_report_tafcr(labels.get(), require_opt(o.out, "--out").c_str()));
    } else if (score->parsed()) {
      write_report(COP_REPORT_SCORES, o);
    } else if (sel_gs->parsed() || sel_maj->parsed() || sel_cops->parsed()) {
      auto sets = open_all_traces(o);
      const cop_strategy s = sel_gs->parsed()    ? COP_SELECT_GREEDY
                             : sel_maj->parsed() ? COP_SELECT_MAJORITY
                                                 : COP_SELECT_COPS;
      double acc = 0.0;
      check(cop_select(sets.front().get(), s, require_opt(o.out, "--out").c_str(), &acc));
      std::cout << "accuracy " << fmt_double(acc) << "\n";
    } else if (sel_compare->parsed()) {
      backend = open_backend(o);
      auto dataset = open_dataset(o);
      const auto cfg = decode_config(o, true);
      RunOptionsHolder ro(o);
      check(cop_evaluate_strategies(backend.get(), dataset.get(), &cfg, &ro.opts, o.k,
                                    o.model.empty() ? nullptr : o.model.c_str(),
                                    require_opt(o.out, "--out").c_str()));
    } else if (tree_train->parsed()) {
      auto sets = open_all_traces(o);
      auto labels = open_labels(o);
      cop_tree* t = nullptr;
      check(cop_tree_train(sets.front().get(), labels.get(), o.max_leaves, o.seed, &t));
      Tree trained(t);
      check(cop_tree_save(trained.get(), require_opt(o.out, "--out").c_str()));
      std::cout << "tree with " << cop_tree_leaf_count(trained.get()) << " leaves\n";
    } else if (tree_eval->parsed()) {
      auto t = open_tree(o);
      auto sets = open_all_traces(o);
      auto labels = open_labels(o);
      cop_metrics m{};
      check(cop_tree_evaluate(t.get(), sets.front().get(), labels.get(), require_opt(o.out, "--out").c_str(), &m));
      std::cout << "precision " << fmt_double(m.precision) << " recall " << fmt_double(m.recall) << " f1 "
                << fmt_double(m.f1) << "\n";
    } else if (tree_classify->parsed()) {
      auto t = open_tree(o);
      auto sets = open_all_traces(o);
      check(cop_tree_classify_report(t.get(), sets.front().get(), require_opt(o.out, "--out").c_str()));
    } else if (resample->parsed()) {
      backend = open_backend(o);
      auto dataset = open_dataset(o);
      auto t = open_tree(o);
      const auto cfg = decode_config(o, true);
      RunOptionsHolder ro(o);
      const fs::path dir = require_opt(o.out, "--out");
      fs::create_directories(dir);
      const std::string summary = (dir / "resample_summary.csv").string();
      const std::string traces_path = (dir / "traces.jsonl").string();
      cop_traces* chosen = nullptr;
      check(cop_resample(backend.get(), dataset.get(), t.get(), &cfg, &ro.opts, o.max_samples, summary.c_str(),
                         &chosen));
      Traces chosen_traces(chosen);
      check(cop_traces_write(chosen_traces.get(), traces_path.c_str(), 0));
    } else if (plot_traj->parsed()) {
      auto sets = open_all_traces(o);
      size_t n = 0;
      check(cop_plot_trajectories(sets.front().get(), require_opt(o.out, "--out").c_str(), &n));
      std::cout << "wrote " << n << " trajectories\n";
    } else if (plot_dec->parsed()) {
      auto sets = open_all_traces(o);
      check(cop_plot_deciles(sets.front().get(), require_opt(o.out, "--out").c_str()));
    } else if (plot_ear->parsed()) {
      auto sets = open_all_traces(o);
      check(cop_plot_ear_curve(sets.front().get(), o.group_key.c_str(), o.sigma,
                               require_opt(o.out, "--out").c_str()));
    } else if (backend_check->parsed()) {
      cop_remote_options ro;
      cop_remote_options_default(&ro);
      if (!o.endpoint.empty()) ro.endpoint = o.endpoint.c_str();
      if (!o.auth_token.empty()) ro.auth_token = o.auth_token.c_str();
      if (!o.model.empty()) ro.model = o.model.c_str();
      char* report = nullptr;
      int passed = 0;
      check(cop_backend_check(o.endpoint.empty() ? nullptr : &ro,
                              o.answer_labels.empty() ? nullptr : o.answer_labels.c_str(), &report, &passed));
      const std::string text = report;
      cop_string_free(report);
      if (!o.out.empty()) {
        std::FILE* f = std::fopen(o.out.c_str(), "wb");
        if (!f) throw ApiError(COP_ERR_IO, "cannot open " + o.out);
        std::fwrite(text.data(), 1, text.size(), f);
        std::fputc('\n', f);
        std::fclose(f);
      } else {
        std::cout << text << "\n";
      }
      std::cout << (passed ? "backend check passed\n" : "backend check FAILED\n");
      exit_code = passed ? 0 : 1;
    }

    if (!o.out.empty()) {
      outputs.push_back(o.out);
      const bool is_dir = fs::is_directory(o.out);
      const std::string manifest =
          is_dir ? (fs::path(o.out) / "manifest.json").string() : o.out + ".manifest.json";
      std::vector<std::string> keys, values;
      for (const CLI::Option* opt : app.get_options()) {
        const std::string name = opt->get_single_name();
        if (name == "help" || name == "config" || name == "auth-token") continue;
        if (name == "endpoint" && o.endpoint.empty()) continue;
        std::string v;
        if (opt->count() > 0) {
          for (const auto& r : opt->results()) v += (v.empty() ? "" : ",") + r;
        } else if (opt->get_expected_max() == 0) {
          v = "false";  // unset flag
        } else if (opt->get_default_str() != "{}") {
          v = opt->get_default_str();
        }
        keys.push_back(name);
        values.push_back(v);
      }
      std::vector<const char*> k, v, outs;
      for (std::size_t i = 0; i < keys.size(); ++i) {
        k.push_back(keys[i].c_str());
        v.push_back(values[i].c_str());
      }
      for (const auto& p : outputs) outs.push_back(p.c_str());
      check(cop_manifest_write(manifest.c_str(), command.c_str(), k.data(), v.data(), k.size(), backend.get(),
                               outs.data(), outs.size()));
    }
    return exit_code;
  } catch (const ApiError& e) {
    std::cerr << "error: " << cop_status_name(e.status) << ": " << e.what() << "\n";
    return 1;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
