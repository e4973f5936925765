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

#include "cop/tree.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cop/analysis.hpp"
#include "cop/error.hpp"
#include "json_text.hpp"

namespace cop {

namespace {

constexpr int kFormatVersion = 1;

// N * gini for a node with the given class counts.
double weighted_gini(double c0, double c1) {
  const double n = c0 + c1;
  return n == 0.0 ? 0.0 : n - (c0 * c0 + c1 * c1) / n;
}

Verdict majority(const std::array<std::size_t, 2>& counts) {
  return counts[1] > counts[0] ? Verdict::kCorrect : Verdict::kIncorrect;
}

struct Split {
  bool valid = false;
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

Split best_split(std::span<const LabeledSample> samples, const std::vector<std::size_t>& idx) {
  std::array<std::size_t, 2> total = {0, 0};
  for (auto i : idx) ++total[static_cast<int>(samples[i].label)];
  const double parent = weighted_gini(static_cast<double>(total[0]), static_cast<double>(total[1]));
  const double eps = 1e-12 * static_cast<double>(idx.size());
  Split best;
  if (total[0] == 0 || total[1] == 0) return best;

  std::vector<std::size_t> order = idx;
  for (int f = 0; f < static_cast<int>(kFeatureCount); ++f) {
    auto value = [&](std::size_t i) { return samples[i].features.as_array()[static_cast<std::size_t>(f)]; };
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
    std::array<double, 2> left = {0.0, 0.0};
    for (std::size_t p = 0; p + 1 < order.size(); ++p) {
      left[static_cast<int>(samples[order[p]].label)] += 1.0;
      const double lo = value(order[p]);
      const double hi = value(order[p + 1]);
      if (!(lo < hi)) continue;
      const double gain =
          parent - weighted_gini(left[0], left[1]) -
          weighted_gini(static_cast<double>(total[0]) - left[0], static_cast<double>(total[1]) - left[1]);
      if (gain > eps && (!best.valid || gain > best.gain + eps)) {
        double thr = lo + (hi - lo) / 2.0;
        if (!(thr < hi)) thr = lo;
        best = {true, f, thr, gain};
      }
    }
  }
  return best;
}

}  // namespace

CoPFeatures extract_features(std::span<const double> col) {
  if (col.empty()) throw Error(ErrorCode::kInvalidArgument, "empty confidence column");
  CoPFeatures x;
  if (col.size() == 1) {
    x.f_max = x.f_min = col[0];
    x.f_min_delta = 0.0;
    x.degenerate = true;
    return x;
  }
  x.f_max = *std::max_element(col.begin() + 1, col.end());
  x.f_min = *std::min_element(col.begin() + 1, col.end());
  x.f_min_delta = col[1] - col[0];
  for (std::size_t i = 2; i < col.size(); ++i) x.f_min_delta = std::min(x.f_min_delta, col[i] - col[i - 1]);
  return x;
}

CoPFeatures extract_features(const ProbeTrace& trace) { return extract_features(trace.final_column()); }

std::string_view verdict_name(Verdict v) { return v == Verdict::kCorrect ? "correct" : "incorrect"; }

CoPTree::CoPTree(std::vector<TreeNode> nodes, TrainingMeta meta)
    : nodes_(std::move(nodes)), meta_(std::move(meta)) {
  if (nodes_.empty()) throw Error(ErrorCode::kInvalidArgument, "tree has no nodes");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.is_leaf()) continue;
    const auto size = static_cast<int>(nodes_.size());
    if (n.feature >= static_cast<int>(kFeatureCount) || n.left <= static_cast<int>(i) ||
        n.right <= static_cast<int>(i) || n.left >= size || n.right >= size) {
      throw Error(ErrorCode::kInvalidArgument, "malformed tree node " + std::to_string(i));
    }
  }
}

std::size_t CoPTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(),
                                                [](const auto& n) { return n.is_leaf(); }));
}

std::size_t CoPTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes_[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return best;
}

std::size_t CoPTree::route(const CoPFeatures& x) const {
  const auto v = x.as_array();
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(v[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return i;
}

std::string CoPTree::to_json() const {
  using detail::ObjectWriter;
  std::string features = "[";
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    features += (f ? "," : "") + detail::json_string(kFeatureNames[f]);
  }
  features += "]";
  const std::string training = ObjectWriter()
                                   .integer("seed", static_cast<long long>(meta_.seed))
                                   .integer("sample_count", static_cast<long long>(meta_.sample_count))
                                   .str("impurity", meta_.impurity)
                                   .done();
  std::string out = "{\"format\":\"cop-tree\",\"version\":" + std::to_string(kFormatVersion) +
                    ",\n\"features\":" + features +
                    ",\n\"max_leaves\":" + std::to_string(meta_.max_leaves) +
                    ",\n\"training\":" + training + ",\n\"nodes\":[\n";
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    ObjectWriter w;
    w.integer("id", static_cast<long long>(i));
    if (n.is_leaf()) {
      w.str("label", verdict_name(n.label));
    } else {
      w.integer("feature", n.feature).num("threshold", n.threshold).integer("left", n.left).integer("right", n.right);
    }
    w.raw("counts", "[" + std::to_string(n.counts[0]) + "," + std::to_string(n.counts[1]) + "]");
    out += w.done() + (i + 1 < nodes_.size() ? ",\n" : "\n");
  }
  out += "]}\n";
  return out;
}

CoPTree CoPTree::from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format").get<std::string>() != "cop-tree") {
      throw Error(ErrorCode::kParseError, "not a cop-tree file");
    }
    if (doc.at("version").get<int>() != kFormatVersion) {
      throw Error(ErrorCode::kVersionMismatch, "tree format version " + doc.at("version").dump());
    }
    const auto features = doc.at("features").get<std::vector<std::string>>();
    if (features.size() != kFeatureCount ||
        !std::equal(features.begin(), features.end(), kFeatureNames.begin())) {
      throw Error(ErrorCode::kParseError, "unexpected feature order");
    }
    TrainingMeta meta;
    meta.max_leaves = doc.at("max_leaves").get<std::size_t>();
    const auto& tr = doc.at("training");
    meta.seed = tr.at("seed").get<std::uint64_t>();
    meta.sample_count = tr.at("sample_count").get<std::size_t>();
    meta.impurity = tr.at("impurity").get<std::string>();
    std::vector<TreeNode> nodes;
    for (const auto& jn : doc.at("nodes")) {
      TreeNode n;
      n.counts = jn.at("counts").get<std::array<std::size_t, 2>>();
      if (jn.contains("feature")) {
        n.feature = jn.at("feature").get<int>();
        n.threshold = jn.at("threshold").get<double>();
        n.left = jn.at("left").get<int>();
        n.right = jn.at("right").get<int>();
        n.label = majority(n.counts);
      } else {
        n.label = jn.at("label").get<std::string>() == "correct" ? Verdict::kCorrect : Verdict::kIncorrect;
      }
      nodes.push_back(n);
    }
    return CoPTree(std::move(nodes), std::move(meta));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
}

void CoPTree::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out << to_json();
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path.string());
}

CoPTree CoPTree::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

CoPTree train_tree(std::span<const LabeledSample> samples, std::size_t max_leaves,
                   std::uint64_t seed) {
  if (samples.size() < 2) throw Error(ErrorCode::kTooFewSamples, "need at least 2 samples");
  if (max_leaves < 1) throw Error(ErrorCode::kInvalidArgument, "max_leaves must be >= 1");
  std::array<std::size_t, 2> total = {0, 0};
  for (const auto& s : samples) ++total[static_cast<int>(s.label)];
  if (total[0] == 0 || total[1] == 0) throw Error(ErrorCode::kSingleClass, "training labels have one class");

  struct Pending {
    std::vector<std::size_t> idx;
    Split split;
  };
  std::vector<TreeNode> nodes;
  std::vector<Pending> pending;  // parallel to nodes; empty once a node is split

  auto make_node = [&](std::vector<std::size_t> idx) {
    TreeNode n;
    for (auto i : idx) ++n.counts[static_cast<int>(samples[i].label)];
    n.label = majority(n.counts);
    nodes.push_back(n);
    Split s = best_split(samples, idx);
    pending.push_back({std::move(idx), s});
  };

  std::vector<std::size_t> all(samples.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  make_node(std::move(all));

  std::size_t leaves = 1;
  while (leaves < max_leaves) {
    std::optional<std::size_t> pick;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!nodes[i].is_leaf() || !pending[i].split.valid) continue;
      if (!pick || pending[i].split.gain > pending[*pick].split.gain) pick = i;
    }
    if (!pick) break;
    const Split s = pending[*pick].split;
    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (auto i : pending[*pick].idx) {
      (samples[i].features.as_array()[static_cast<std::size_t>(s.feature)] <= s.threshold ? left : right)
          .push_back(i);
    }
    pending[*pick].idx.clear();
    nodes[*pick].feature = s.feature;
    nodes[*pick].threshold = s.threshold;
    nodes[*pick].left = static_cast<int>(nodes.size());
    make_node(std::move(left));
    nodes[*pick].right = static_cast<int>(nodes.size());
    make_node(std::move(right));
    ++leaves;
  }

  TrainingMeta meta;
  meta.seed = seed;
  meta.sample_count = samples.size();
  meta.max_leaves = max_leaves;
  return CoPTree(std::move(nodes), std::move(meta));
}

ClassificationMetrics classification_metrics(std::span<const Verdict> preds,
                                             std::span<const Verdict> labels) {
  if (preds.size() != labels.size() || preds.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "predictions and labels must be equal non-empty lists");
  }
  ClassificationMetrics m;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == Verdict::kCorrect;
    const bool y = labels[i] == Verdict::kCorrect;
    if (p && y) ++m.tp;
    else if (p && !y) ++m.fp;
    else if (!p && y) ++m.fn;
    else ++m.tn;
  }
  if (m.tp + m.fp > 0) m.precision = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp);
  if (m.tp + m.fn > 0) m.recall = static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn);
  if (m.precision && m.recall && *m.precision + *m.recall > 0.0) {
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  return m;
}

ResampleOutcome resample_until_accept(const PromptSpec& spec, const ModelBackend& backend,
                                      const TargetTokenSet& targets, const DecodeConfig& cfg,
                                      const CoPTree& tree, int max_samples,
                                      const RunOptions& options) {
  if (cfg.mode != DecodeMode::kSample) {
    throw Error(ErrorCode::kInvalidArgument, "resampling needs sample decoding");
  }
  if (max_samples < 1) throw Error(ErrorCode::kInvalidArgument, "max_samples must be >= 1");
  std::optional<ResampleOutcome> best;
  double best_score = 0.0;
  for (int s = 0; s < max_samples; ++s) {
    DecodeConfig sample_cfg = cfg;
    sample_cfg.seed = cfg.seed + static_cast<std::uint64_t>(s);
    RunOptions opts = options;
    opts.sample_index = s;
    ProbeTrace trace = run_cop(spec, backend, targets, sample_cfg, opts);
    if (tree.classify(extract_features(trace)) == Verdict::kCorrect) {
      return {std::move(trace), s + 1, true};
    }
    const double score = cop_score(trace);
    if (!best || score > best_score) {
      best_score = score;
      best = ResampleOutcome{std::move(trace), 0, false};
    }
  }
  best->n_samples = max_samples;
  return std::move(*best);
}

}  // namespace cop
