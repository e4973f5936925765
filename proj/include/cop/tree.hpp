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

// Confidence features and the CART gate that screens reasoning chains.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cop/backend.hpp"
#include "cop/probe.hpp"
#include "cop/trace.hpp"

namespace cop {

inline constexpr std::size_t kFeatureCount = 3;
// Feature vector layout used by the tree: x[0] min change, x[1] min, x[2] max.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {"min_delta", "min",
                                                                             "max"};

struct CoPFeatures {
  double f_max = 0.0;        // max(p_1..p_k) of the final answer
  double f_min = 0.0;        // min(p_1..p_k)
  double f_min_delta = 0.0;  // min(p_i - p_{i-1}), i = 1..k
  bool degenerate = false;   // k = 0: (p_0, p_0, 0)

  std::array<double, kFeatureCount> as_array() const { return {f_min_delta, f_min, f_max}; }
  bool operator==(const CoPFeatures&) const = default;
};

CoPFeatures extract_features(std::span<const double> final_column);
CoPFeatures extract_features(const ProbeTrace& trace);

enum class Verdict : int { kIncorrect = 0, kCorrect = 1 };
std::string_view verdict_name(Verdict v);

struct LabeledSample {
  CoPFeatures features;
  Verdict label = Verdict::kIncorrect;
};

struct TreeNode {
  // Internal node when feature >= 0.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;  // taken when x[feature] <= threshold
  int right = -1;
  // Leaf payload (also kept for internal nodes: counts of samples reaching it).
  Verdict label = Verdict::kIncorrect;
  std::array<std::size_t, 2> counts = {0, 0};  // [incorrect, correct]

  bool is_leaf() const noexcept { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct TrainingMeta {
  std::uint64_t seed = 0;
  std::size_t sample_count = 0;
  std::string impurity = "gini";
  std::size_t max_leaves = 16;

  bool operator==(const TrainingMeta&) const = default;
};

class CoPTree {
 public:
  CoPTree(std::vector<TreeNode> nodes, TrainingMeta meta);

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  const TrainingMeta& meta() const noexcept { return meta_; }
  std::size_t leaf_count() const;
  std::size_t depth() const;
  // Index of the leaf reached by x.
  std::size_t route(const CoPFeatures& x) const;
  Verdict classify(const CoPFeatures& x) const { return nodes_[route(x)].label; }

  // Self-describing JSON with version tag, feature order and node array.
  std::string to_json() const;
  static CoPTree from_json(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static CoPTree load(const std::filesystem::path& path);

  bool operator==(const CoPTree&) const = default;

 private:
  std::vector<TreeNode> nodes_;
  TrainingMeta meta_;
};

// Gini CART grown best-first until max_leaves or no split lowers impurity.
// Candidate thresholds are midpoints of consecutive distinct values; equal
// gains prefer the lower feature index, then the smaller threshold; equal
// leaves prefer the one created first. Majority ties label kIncorrect.
// Throws kTooFewSamples (< 2) and kSingleClass.
CoPTree train_tree(std::span<const LabeledSample> samples, std::size_t max_leaves = 16,
                   std::uint64_t seed = 0);

inline Verdict classify(const CoPTree& tree, const CoPFeatures& x) { return tree.classify(x); }

struct ClassificationMetrics {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

// Positive class is kCorrect; zero denominators leave the value absent.
ClassificationMetrics classification_metrics(std::span<const Verdict> preds,
                                             std::span<const Verdict> labels);

struct ResampleOutcome {
  ProbeTrace trace;
  int n_samples = 0;
  bool accepted = false;
};

// Samples with seeds cfg.seed, cfg.seed + 1, ... until the tree says kCorrect
// or max_samples runs out; in the latter case the reject with the highest CoP
// score (earliest on ties) is returned.
ResampleOutcome resample_until_accept(const PromptSpec& spec, const ModelBackend& backend,
                                      const TargetTokenSet& targets, const DecodeConfig& cfg,
                                      const CoPTree& tree, int max_samples,
                                      const RunOptions& options);

}  // namespace cop
