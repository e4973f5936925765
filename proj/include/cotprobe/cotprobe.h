/*
 * Copyright 2026 The cotprobe Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface of libcotprobe.
 *
 * All objects are opaque handles created by a cop_*_open / _load / _read /
 * _run function and released with the matching _free function (NULL is
 * accepted). Every fallible call returns a cop_status; on failure
 * cop_last_error() describes the problem. The message is thread-local and
 * stays valid until the next API call on the same thread.
 *
 * Strings returned through char** out-parameters are heap-allocated and must
 * be released with cop_string_free().
 *
 * Handles are immutable after creation and may be shared between threads,
 * except that a single cop_backend must not be used to generate from several
 * threads when it is a remote backend with a low server-side concurrency
 * limit (the library itself imposes no lock).
 */

#ifndef COTPROBE_COTPROBE_H_
#define COTPROBE_COTPROBE_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(COP_BUILDING_LIBRARY)
#    define COP_API __declspec(dllexport)
#  else
#    define COP_API __declspec(dllimport)
#  endif
#else
#  define COP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cop_status {
  COP_OK = 0,
  COP_ERR_INVALID_ARGUMENT = 1,
  COP_ERR_MULTI_TOKEN_LABEL = 2,
  COP_ERR_UNKNOWN_TOKEN = 3,
  COP_ERR_BACKEND_UNAVAILABLE = 4,
  COP_ERR_PARTIAL_DISTRIBUTION = 5,
  COP_ERR_BUDGET_EXCEEDED = 6,
  COP_ERR_SCRIPT_PARSE = 7,
  COP_ERR_SCRIPT_MISS = 8,
  COP_ERR_PROTOCOL = 9,
  COP_ERR_EMPTY_INPUT = 10,
  COP_ERR_MISSING_GOLD = 11,
  COP_ERR_NO_TRUE_ANSWERS = 12,
  COP_ERR_TOO_FEW_ITEMS = 13,
  COP_ERR_DEGENERATE_INPUT = 14,
  COP_ERR_SINGLE_CLASS = 15,
  COP_ERR_TOO_FEW_SAMPLES = 16,
  COP_ERR_PARSE = 17,
  COP_ERR_DUPLICATE_ID = 18,
  COP_ERR_INVALID_ANSWER_LABEL = 19,
  COP_ERR_IO = 20,
  COP_ERR_VERSION_MISMATCH = 21,
  COP_ERR_HEADER_MISMATCH = 22,
  COP_ERR_INTERNAL = 100
} cop_status;

typedef struct cop_backend cop_backend;
typedef struct cop_dataset cop_dataset;
typedef struct cop_traces cop_traces;
typedef struct cop_labels cop_labels;
typedef struct cop_tree cop_tree;

COP_API const char* cop_version(void);
COP_API const char* cop_status_name(cop_status status);
COP_API const char* cop_last_error(void);
COP_API void cop_string_free(char* s);

/* ---- decoding and run options ------------------------------------------ */

typedef enum cop_decode_mode { COP_DECODE_GREEDY = 0, COP_DECODE_SAMPLE = 1 } cop_decode_mode;

typedef struct cop_decode_config {
  cop_decode_mode mode;
  double temperature;
  int top_k; /* 0 disables */
  double top_p;
  uint64_t seed;
  int max_steps;
  int max_tokens_per_step;
} cop_decode_config;

/* Greedy mode; sampling fields at temperature 0.7, top-k 40, top-p 0.9. */
COP_API void cop_decode_config_default(cop_decode_config* cfg);

typedef struct cop_run_options {
  const char* labels;       /* comma-separated answer labels; NULL: first record's choices */
  const char* probe_string; /* NULL: " So, the answer is (" */
  const char* demos_path;   /* NULL: no demonstrations */
  int shots;                /* demonstrations used from demos_path, default 5 */
  int samples;              /* traces per question; sample i uses seed + i, default 1 */
} cop_run_options;

COP_API void cop_run_options_default(cop_run_options* opts);

/* ---- backends ---------------------------------------------------------- */

typedef struct cop_remote_options {
  const char* endpoint;   /* e.g. "http://127.0.0.1:8080"; NULL in cop_backend_check = stub */
  const char* auth_token; /* may be NULL */
  const char* model;      /* may be NULL */
  int top_logprobs;       /* default 20 */
  int max_attempts;       /* default 3 */
  int initial_backoff_ms; /* default 250 */
} cop_remote_options;

COP_API void cop_remote_options_default(cop_remote_options* opts);

COP_API cop_status cop_backend_open_scripted(const char* script_path, cop_backend** out);
/* Corpus: JSON lines {"text": ...}. order <= 0 selects the default (3). */
COP_API cop_status cop_backend_open_toy(const char* corpus_path, int order, cop_backend** out);
COP_API cop_status cop_backend_open_remote(const cop_remote_options* opts, cop_backend** out);
COP_API void cop_backend_free(cop_backend* backend);
COP_API cop_status cop_backend_descriptor_json(const cop_backend* backend, char** out_json);

/* Contract self-test. opts->endpoint == NULL runs against an in-process stub
 * server with fault injection. *passed is 1 when every check passed. */
COP_API cop_status cop_backend_check(const cop_remote_options* opts, const char* labels,
                                     char** report_json, int* passed);

/* ---- datasets, traces, judge labels ------------------------------------ */

COP_API cop_status cop_dataset_load(const char* path, cop_dataset** out);
COP_API size_t cop_dataset_size(const cop_dataset* dataset);
COP_API void cop_dataset_free(cop_dataset* dataset);

COP_API cop_status cop_probe_run(const cop_backend* backend, const cop_dataset* dataset,
                                 const cop_decode_config* cfg, const cop_run_options* opts,
                                 cop_traces** out);

COP_API cop_status cop_traces_read(const char* path, cop_traces** out);
COP_API cop_status cop_traces_write(const cop_traces* traces, const char* path, int append);
COP_API size_t cop_traces_size(const cop_traces* traces);
COP_API void cop_traces_free(cop_traces* traces);
/* One trace as a JSON object (same layout as a trace-file body line). */
COP_API cop_status cop_trace_json(const cop_traces* traces, size_t index, char** out_json);
COP_API cop_status cop_trace_cop_score(const cop_traces* traces, size_t index, double* out);
COP_API cop_status cop_trace_is_early_answering(const cop_traces* traces, size_t index, int* out);
/* Features in tree order: min change, min, max. */
COP_API cop_status cop_trace_features(const cop_traces* traces, size_t index, double out[3]);

COP_API cop_status cop_labels_load(const char* path, cop_labels** out);
COP_API size_t cop_labels_size(const cop_labels* labels);
COP_API void cop_labels_free(cop_labels* labels);

/* ---- analysis ---------------------------------------------------------- */

COP_API cop_status cop_analysis_ear(const cop_traces* traces, double* out);
COP_API cop_status cop_analysis_tafcr(const cop_labels* labels, double* out);

typedef enum cop_report_kind {
  COP_REPORT_EAR = 0,
  COP_REPORT_ACCURACY_SPLIT = 1,
  COP_REPORT_EFFECT = 2,
  COP_REPORT_SCORES = 3
} cop_report_kind;

/* CSV report over one or more named trace sets (COP_REPORT_SCORES lists
 * every trace of every set). */
COP_API cop_status cop_report_write(cop_report_kind kind, const cop_traces* const* sets,
                                    const char* const* names, size_t n_sets, const char* path);
COP_API cop_status cop_report_tafcr(const cop_labels* labels, const char* path);

COP_API cop_status cop_pearson(const double* xs, const double* ys, size_t n, double* out);
COP_API cop_status cop_gaussian_smooth(const double* series, size_t n, double sigma, double* out);

typedef struct cop_t_test {
  double t;
  double p_one_tailed;
  double cohens_d;
  size_t dof;
} cop_t_test;

COP_API cop_status cop_paired_t_test(const double* a, const double* b, size_t n, cop_t_test* out);

/* ---- selection --------------------------------------------------------- */

typedef enum cop_strategy { COP_SELECT_GREEDY = 0, COP_SELECT_MAJORITY = 1, COP_SELECT_COPS = 2 } cop_strategy;

/* Picks one trace per question and writes a CSV of the choices. Greedy picks
 * the greedy-decoded trace; the voting strategies use the sampled traces of
 * each question (all traces when none were sampled). */
COP_API cop_status cop_select(const cop_traces* traces, cop_strategy strategy, const char* path,
                              double* accuracy);

/* GS vs Maj@k vs CoPS@k over a dataset. Writes strategy_comparison.csv and
 * decisions.csv into out_dir. */
COP_API cop_status cop_evaluate_strategies(const cop_backend* backend, const cop_dataset* dataset,
                                           const cop_decode_config* sampling,
                                           const cop_run_options* opts, int k,
                                           const char* model_name, const char* out_dir);

/* ---- CoP tree ---------------------------------------------------------- */

typedef struct cop_metrics {
  double precision; /* NaN when undefined */
  double recall;
  double f1;
  size_t tp, fp, fn, tn;
} cop_metrics;

/* Trains on the reasoning-correctness label (cot_correct) of each trace. */
COP_API cop_status cop_tree_train(const cop_traces* traces, const cop_labels* labels,
                                  int max_leaves, uint64_t seed, cop_tree** out);
COP_API cop_status cop_tree_save(const cop_tree* tree, const char* path);
COP_API cop_status cop_tree_load(const char* path, cop_tree** out);
COP_API void cop_tree_free(cop_tree* tree);
COP_API size_t cop_tree_leaf_count(const cop_tree* tree);
/* features: min change, min, max. *correct is 1 for "correct". */
COP_API cop_status cop_tree_classify(const cop_tree* tree, const double features[3], int* correct);
/* Metrics against cot_correct labels; path may be NULL. */
COP_API cop_status cop_tree_evaluate(const cop_tree* tree, const cop_traces* traces,
                                     const cop_labels* labels, const char* path, cop_metrics* out);
COP_API cop_status cop_tree_classify_report(const cop_tree* tree, const cop_traces* traces,
                                            const char* path);

/* Resample until the tree accepts, per question. Writes a per-question
 * summary CSV to summary_path and returns the chosen traces. */
COP_API cop_status cop_resample(const cop_backend* backend, const cop_dataset* dataset,
                                const cop_tree* tree, const cop_decode_config* sampling,
                                const cop_run_options* opts, int max_samples,
                                const char* summary_path, cop_traces** out);

/* ---- plot data --------------------------------------------------------- */

COP_API cop_status cop_plot_trajectories(const cop_traces* traces, const char* dir, size_t* n_written);
COP_API cop_status cop_plot_deciles(const cop_traces* traces, const char* path);
COP_API cop_status cop_plot_ear_curve(const cop_traces* traces, const char* group_key, double sigma,
                                      const char* path);

/* ---- manifests --------------------------------------------------------- */

/* Records the command, its parameters, the backend descriptor (backend may be
 * NULL) and the SHA-256 of every output file. Outputs that are directories
 * are expanded to the files they contain. */
COP_API cop_status cop_manifest_write(const char* path, const char* command,
                                      const char* const* keys, const char* const* values,
                                      size_t n_params, const cop_backend* backend,
                                      const char* const* outputs, size_t n_outputs);

#ifdef __cplusplus
}
#endif

#endif /* COTPROBE_COTPROBE_H_ */
