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

// Exercises the shared library purely through its C interface.

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "cotprobe/cotprobe.h"
#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const std::string kFixtures = COP_FIXTURES_DIR;

std::string fixture(const char* name) { return kFixtures + "/" + name; }

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("cotprobe_capi_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string operator/(const char* name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("status names and errors") {
  CHECK(std::string(cop_status_name(COP_OK)) == "Ok");
  CHECK(std::string(cop_status_name(COP_ERR_MULTI_TOKEN_LABEL)) == "MultiTokenLabel");
  cop_dataset* d = nullptr;
  CHECK(cop_dataset_load("/nonexistent/file.jsonl", &d) == COP_ERR_IO);
  CHECK(d == nullptr);
  CHECK(std::strlen(cop_last_error()) > 0);
  CHECK(cop_dataset_load(nullptr, &d) == COP_ERR_INVALID_ARGUMENT);
  cop_backend_free(nullptr);
  cop_traces_free(nullptr);
}

TEST_CASE("probe, analyse and select through the C API") {
  Scratch tmp;
  cop_backend* backend = nullptr;
  REQUIRE(cop_backend_open_scripted(fixture("script.jsonl").c_str(), &backend) == COP_OK);
  cop_dataset* dataset = nullptr;
  REQUIRE(cop_dataset_load(fixture("dataset.jsonl").c_str(), &dataset) == COP_OK);
  CHECK(cop_dataset_size(dataset) == 12);

  char* desc = nullptr;
  REQUIRE(cop_backend_descriptor_json(backend, &desc) == COP_OK);
  CHECK(std::string(desc).find("\"backend_id\":\"scripted\"") != std::string::npos);
  cop_string_free(desc);

  cop_decode_config cfg;
  cop_decode_config_default(&cfg);
  CHECK(cfg.mode == COP_DECODE_GREEDY);
  CHECK(cfg.temperature == 0.7);
  CHECK(cfg.top_k == 40);
  cop_run_options opts;
  cop_run_options_default(&opts);
  opts.demos_path = nullptr;

  cop_traces* greedy = nullptr;
  REQUIRE(cop_probe_run(backend, dataset, &cfg, &opts, &greedy) == COP_OK);
  CHECK(cop_traces_size(greedy) == 12);

  double ear = -1;
  REQUIRE(cop_analysis_ear(greedy, &ear) == COP_OK);
  CHECK(ear >= 0.0);
  CHECK(ear <= 1.0);
  int ea_count = 0;
  for (size_t i = 0; i < cop_traces_size(greedy); ++i) {
    int ea = 0;
    REQUIRE(cop_trace_is_early_answering(greedy, i, &ea) == COP_OK);
    ea_count += ea;
  }
  CHECK(ear == doctest::Approx(ea_count / 12.0));

  double score = 0;
  CHECK(cop_trace_cop_score(greedy, 0, &score) == COP_OK);
  CHECK(cop_trace_cop_score(greedy, 99, &score) == COP_ERR_INVALID_ARGUMENT);
  double x[3];
  REQUIRE(cop_trace_features(greedy, 0, x) == COP_OK);
  CHECK(x[1] <= x[2]);

  const std::string path = tmp / "greedy.jsonl";
  REQUIRE(cop_traces_write(greedy, path.c_str(), 0) == COP_OK);
  cop_traces* back = nullptr;
  REQUIRE(cop_traces_read(path.c_str(), &back) == COP_OK);
  char* a = nullptr;
  char* b = nullptr;
  REQUIRE(cop_trace_json(greedy, 5, &a) == COP_OK);
  REQUIRE(cop_trace_json(back, 5, &b) == COP_OK);
  CHECK(std::string(a) == std::string(b));
  cop_string_free(a);
  cop_string_free(b);

  const cop_traces* sets[] = {greedy, back};
  const char* names[] = {"greedy", "reread"};
  REQUIRE(cop_report_write(COP_REPORT_EAR, sets, names, 2, (tmp / "ear.csv").c_str()) == COP_OK);
  CHECK(fs::file_size(tmp / "ear.csv") > 0);

  double acc = 0;
  REQUIRE(cop_select(greedy, COP_SELECT_GREEDY, (tmp / "gs.csv").c_str(), &acc) == COP_OK);
  CHECK(acc >= 0.0);
  CHECK(cop_select(greedy, COP_SELECT_COPS, (tmp / "cops.csv").c_str(), &acc) == COP_OK);

  // Labels that the script's vocabulary cannot represent.
  opts.labels = "A,Zebra";
  cop_traces* bad = nullptr;
  CHECK(cop_probe_run(backend, dataset, &cfg, &opts, &bad) == COP_ERR_UNKNOWN_TOKEN);

  cop_traces_free(back);
  cop_traces_free(greedy);
  cop_dataset_free(dataset);
  cop_backend_free(backend);
}

TEST_CASE("tree round trip through the C API") {
  Scratch tmp;
  cop_backend* backend = nullptr;
  REQUIRE(cop_backend_open_scripted(fixture("script.jsonl").c_str(), &backend) == COP_OK);
  cop_dataset* dataset = nullptr;
  REQUIRE(cop_dataset_load(fixture("dataset.jsonl").c_str(), &dataset) == COP_OK);
  cop_labels* labels = nullptr;
  REQUIRE(cop_labels_load(fixture("labels.jsonl").c_str(), &labels) == COP_OK);
  double rate = 0;
  REQUIRE(cop_analysis_tafcr(labels, &rate) == COP_OK);
  CHECK(rate >= 0.0);

  cop_decode_config cfg;
  cop_decode_config_default(&cfg);
  cfg.mode = COP_DECODE_SAMPLE;
  cfg.seed = 7;
  cop_run_options opts;
  cop_run_options_default(&opts);
  opts.samples = 3;
  cop_traces* traces = nullptr;
  REQUIRE(cop_probe_run(backend, dataset, &cfg, &opts, &traces) == COP_OK);
  CHECK(cop_traces_size(traces) == 36);

  cop_tree* tree = nullptr;
  REQUIRE(cop_tree_train(traces, labels, 16, 7, &tree) == COP_OK);
  CHECK(cop_tree_leaf_count(tree) <= 16);
  REQUIRE(cop_tree_save(tree, (tmp / "tree.json").c_str()) == COP_OK);
  cop_tree* loaded = nullptr;
  REQUIRE(cop_tree_load((tmp / "tree.json").c_str(), &loaded) == COP_OK);
  for (size_t i = 0; i < cop_traces_size(traces); ++i) {
    double x[3];
    REQUIRE(cop_trace_features(traces, i, x) == COP_OK);
    int c1 = -1, c2 = -2;
    REQUIRE(cop_tree_classify(tree, x, &c1) == COP_OK);
    REQUIRE(cop_tree_classify(loaded, x, &c2) == COP_OK);
    CHECK(c1 == c2);
  }
  cop_metrics m{};
  REQUIRE(cop_tree_evaluate(loaded, traces, labels, nullptr, &m) == COP_OK);
  CHECK(m.tp + m.fp + m.fn + m.tn == 36);

  cop_traces* chosen = nullptr;
  REQUIRE(cop_resample(backend, dataset, loaded, &cfg, &opts, 4, (tmp / "summary.csv").c_str(), &chosen) == COP_OK);
  CHECK(cop_traces_size(chosen) == 12);

  REQUIRE(cop_plot_deciles(traces, (tmp / "deciles.csv").c_str()) == COP_OK);
  size_t n = 0;
  REQUIRE(cop_plot_trajectories(traces, (tmp / "traj").c_str(), &n) == COP_OK);
  CHECK(n == 36);

  const char* keys[] = {"seed"};
  const char* values[] = {"7"};
  const std::string traj_dir = tmp / "traj";
  const std::string manifest = tmp / "traj/manifest.json";
  const char* outputs[] = {traj_dir.c_str()};
  REQUIRE(cop_manifest_write(manifest.c_str(), "plot trajectories", keys, values, 1, backend,
                             outputs, 1) == COP_OK);
  CHECK(fs::exists(tmp / "traj/manifest.json"));

  cop_traces_free(chosen);
  cop_tree_free(loaded);
  cop_tree_free(tree);
  cop_traces_free(traces);
  cop_labels_free(labels);
  cop_dataset_free(dataset);
  cop_backend_free(backend);
}

TEST_CASE("numeric helpers") {
  const double xs[] = {1, 2, 3, 4};
  const double ys[] = {2, 4, 6, 8.5};
  double r = 0;
  REQUIRE(cop_pearson(xs, ys, 4, &r) == COP_OK);
  CHECK(r > 0.99);
  const double flat[] = {1, 1, 1, 1};
  CHECK(cop_pearson(xs, flat, 4, &r) == COP_ERR_DEGENERATE_INPUT);
  double out[4];
  REQUIRE(cop_gaussian_smooth(flat, 4, 1.0, out) == COP_OK);
  for (double v : out) CHECK(v == doctest::Approx(1.0));
  cop_t_test t{};
  REQUIRE(cop_paired_t_test(ys, xs, 4, &t) == COP_OK);
  CHECK(t.dof == 3);
  CHECK(t.p_one_tailed < 0.05);
}

TEST_CASE("backend check against the built-in stub") {
  char* report = nullptr;
  int passed = 0;
  REQUIRE(cop_backend_check(nullptr, "A,B,C,D", &report, &passed) == COP_OK);
  CHECK(passed == 1);
  CHECK(std::string(report).find("\"partial-floor\"") != std::string::npos);
  cop_string_free(report);
}
