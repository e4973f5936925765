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

#include "cop/backend.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cop/error.hpp"

namespace cop {

std::uint64_t mix64(std::uint64_t x) noexcept {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_string(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

TokenDistribution TokenDistribution::full(std::vector<double> probs) {
  TokenDistribution d;
  d.complete_ = true;
  d.dense_ = std::move(probs);
  return d;
}

TokenDistribution TokenDistribution::partial(std::vector<std::pair<TokenId, double>> entries) {
  TokenDistribution d;
  d.complete_ = false;
  std::sort(entries.begin(), entries.end());
  d.sparse_ = std::move(entries);
  return d;
}

std::optional<double> TokenDistribution::probability(TokenId token) const {
  if (complete_) {
    if (token < 0 || static_cast<std::size_t>(token) >= dense_.size()) return 0.0;
    return dense_[static_cast<std::size_t>(token)];
  }
  auto it = std::lower_bound(sparse_.begin(), sparse_.end(), token,
                             [](const auto& e, TokenId t) { return e.first < t; });
  if (it == sparse_.end() || it->first != token) return std::nullopt;
  return it->second;
}

std::vector<std::pair<TokenId, double>> TokenDistribution::entries() const {
  if (!complete_) return sparse_;
  std::vector<std::pair<TokenId, double>> out;
  for (std::size_t i = 0; i < dense_.size(); ++i) {
    if (dense_[i] > 0.0) out.emplace_back(static_cast<TokenId>(i), dense_[i]);
  }
  return out;
}

GenerationState ModelBackend::begin(std::string_view prompt, std::string context_key,
                                    std::uint64_t seed) const {
  GenerationState state;
  state.context_key = std::move(context_key);
  state.seed = seed;
  state.rng.seed(seed);
  for (TokenId t : tokenize(prompt)) append(state, t);
  state.prompt_length = state.context_tokens.size();
  return state;
}

void ModelBackend::append(GenerationState& state, TokenId token) const {
  const std::uint64_t prev = state.cache_entries.empty() ? 0 : state.cache_entries.back().key;
  const auto pos = static_cast<std::uint64_t>(state.cache_entries.size());
  const std::uint64_t key = mix64(prev ^ mix64((pos << 32) ^ static_cast<std::uint32_t>(token)));
  state.context_tokens.push_back(token);
  state.cache_entries.push_back({token, key});
}

void ModelBackend::truncate(GenerationState& state, std::size_t length) const {
  if (length > state.context_tokens.size()) {
    throw Error(ErrorCode::kInvalidArgument, "truncate beyond context length");
  }
  state.context_tokens.resize(length);
  state.cache_entries.resize(length);
}

TargetTokenSet validate_target_set(std::span<const std::string> labels,
                                   const ModelBackend& backend) {
  if (labels.empty()) throw Error(ErrorCode::kInvalidArgument, "no target labels given");
  // Structural checks (distinctness) happen before any backend call.
  {
    std::vector<TargetEntry> probe;
    for (const auto& l : labels) probe.push_back({l, -1});
    TargetTokenSet check(std::move(probe));
  }
  std::vector<TargetEntry> entries;
  for (const auto& label : labels) {
    const LabelResolution r = backend.resolve_label(label);
    switch (r.status) {
      case LabelStatus::kSingleToken:
        entries.push_back({label, r.token});
        break;
      case LabelStatus::kMultiToken:
        throw Error(ErrorCode::kMultiTokenLabel, "'" + label + "' tokenizes into several tokens");
      case LabelStatus::kUnknown:
        throw Error(ErrorCode::kUnknownToken, "'" + label + "' is not in the backend vocabulary");
    }
  }
  return TargetTokenSet(std::move(entries));
}

ProbeResult probe_distribution(const ModelBackend& backend, GenerationState& state,
                               std::span<const TokenId> probe_tokens,
                               const TargetTokenSet& targets, double missing_floor) {
  const std::size_t mark = state.context_tokens.size();
  struct Rollback {
    const ModelBackend& backend;
    GenerationState& state;
    std::size_t mark;
    ~Rollback() { backend.truncate(state, mark); }
  } rollback{backend, state, mark};

  for (TokenId t : probe_tokens) backend.append(state, t);
  const TokenDistribution dist = backend.next_distribution(state);

  std::vector<std::optional<double>> found;
  found.reserve(targets.size());
  double present = 0.0;
  std::size_t missing = 0;
  for (const auto& e : targets.entries()) {
    auto p = dist.probability(e.token);
    if (p) {
      const double v = std::clamp(*p, 0.0, 1.0);
      present += v;
      found.emplace_back(v);
    } else {
      ++missing;
      found.emplace_back(std::nullopt);
    }
  }

  ProbeResult result{ConfidenceRow({0.0}), {}};
  // Rounded server payloads can overshoot 1 slightly.
  const double scale = present > 1.0 + kRowSumTolerance ? 1.0 / present : 1.0;
  const double residual = std::max(0.0, 1.0 - present * scale);
  const double floor =
      missing == 0 ? 0.0 : std::min(missing_floor, residual / static_cast<double>(missing));
  std::vector<double> probs;
  probs.reserve(targets.size());
  for (std::size_t j = 0; j < targets.size(); ++j) {
    if (found[j]) {
      probs.push_back(*found[j] * scale);
    } else {
      probs.push_back(floor);
      result.missing_labels.push_back(targets[j].label);
    }
  }
  result.row = ConfidenceRow(std::move(probs));
  return result;
}

TokenId choose_token(const TokenDistribution& dist, const DecodeConfig& cfg, std::mt19937_64& rng) {
  auto cands = dist.entries();
  if (cands.empty()) throw Error(ErrorCode::kBackendUnavailable, "empty next-token distribution");

  if (cfg.mode == DecodeMode::kGreedy) {
    auto best = cands.front();
    for (const auto& c : cands) {
      if (c.second > best.second) best = c;
    }
    return best.first;
  }

  std::stable_sort(cands.begin(), cands.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (cfg.top_k > 0 && static_cast<std::size_t>(cfg.top_k) < cands.size()) {
    cands.resize(static_cast<std::size_t>(cfg.top_k));
  }
  const double log_max = std::log(cands.front().second);
  std::vector<double> w;
  w.reserve(cands.size());
  for (const auto& c : cands) w.push_back(std::exp((std::log(c.second) - log_max) / cfg.temperature));
  double total = std::accumulate(w.begin(), w.end(), 0.0);

  if (cfg.top_p < 1.0) {
    double cum = 0.0;
    std::size_t keep = 0;
    while (keep < w.size()) {
      cum += w[keep] / total;
      ++keep;
      if (cum >= cfg.top_p) break;
    }
    w.resize(keep);
    cands.resize(keep);
    total = std::accumulate(w.begin(), w.end(), 0.0);
  }

  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * total;
  double cum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    cum += w[i];
    if (u < cum) return cands[i].first;
  }
  return cands.back().first;
}

StepResult generate_step(const ModelBackend& backend, GenerationState& state,
                         const DecodeConfig& cfg, const StepStopRule& stop) {
  cfg.validate();
  stop.validate();
  const int budget = std::min(cfg.max_tokens_per_step, stop.max_tokens_per_step);
  const auto eos = backend.end_of_sequence();
  StepResult r;
  while (true) {
    const TokenId tok = choose_token(backend.next_distribution(state), cfg, state.rng);
    if (eos && tok == *eos) {
      r.finished = true;
      break;
    }
    backend.append(state, tok);
    r.tokens.push_back(tok);
    const TokenId one[] = {tok};
    r.text += backend.detokenize(one);
    if (ends_at_step_boundary(r.text, stop)) break;
    if (static_cast<int>(r.tokens.size()) >= budget) {
      r.budget_exceeded = true;
      break;
    }
  }
  return r;
}

}  // namespace cop
