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

#include "cop/scripted_backend.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"

#include "cop/error.hpp"
#include "cop/toy_lm.hpp"

namespace cop {

ScriptedBackend::ScriptedBackend() {
  eos_ = vocab_.add_special("<eos>");
  other_ = vocab_.add_special("<other>");
}

void ScriptedBackend::add_step(const std::string& context_key, int variant,
                               const std::string& text) {
  if (variant < 0) throw Error(ErrorCode::kInvalidArgument, "negative variant");
  vocab_.add_text(text);
  Variant& v = script_[context_key][variant];
  v.steps.push_back(text);
  for (TokenId t : vocab_.tokenize(text)) v.tokens.push_back(t);
  v.step_ends.push_back(v.tokens.size());
}

void ScriptedBackend::add_probe(const std::string& context_key, int variant, int step,
                                const std::map<std::string, double>& dist) {
  if (variant < 0 || step < 0) throw Error(ErrorCode::kInvalidArgument, "negative variant/step");
  double sum = 0.0;
  for (const auto& [label, p] : dist) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "probability outside [0,1]");
    sum += p;
    vocab_.add(label);
  }
  if (sum > 1.0 + kRowSumTolerance) throw Error(ErrorCode::kInvalidArgument, "probe sums above 1");
  script_[context_key][variant].probes[step] = dist;
}

void ScriptedBackend::add_vocabulary_piece(const std::string& piece) { vocab_.add(piece); }

int ScriptedBackend::variant_count(const std::string& context_key) const {
  auto it = script_.find(context_key);
  return it == script_.end() ? 0 : static_cast<int>(it->second.size());
}

int ScriptedBackend::variant_for(const std::string& context_key, std::uint64_t seed) const {
  auto it = script_.find(context_key);
  if (it == script_.end()) throw Error(ErrorCode::kScriptMiss, "unknown context '" + context_key + "'");
  const auto n = it->second.size();
  std::size_t slot = 0;
  if (seed != 0 && n > 1) slot = 1 + mix64(seed ^ hash_string(context_key)) % (n - 1);
  return std::next(it->second.begin(), static_cast<std::ptrdiff_t>(slot))->first;
}

BackendDescriptor ScriptedBackend::descriptor() const {
  return {"scripted", vocab_.size(), true, std::nullopt};
}

std::vector<TokenId> ScriptedBackend::tokenize(std::string_view text) const {
  return vocab_.tokenize(text);
}

std::string ScriptedBackend::detokenize(std::span<const TokenId> tokens) const {
  return vocab_.detokenize(tokens);
}

LabelResolution ScriptedBackend::resolve_label(std::string_view label) const {
  return resolve_with_vocabulary(vocab_, label);
}

const ScriptedBackend::Variant& ScriptedBackend::variant_of(const GenerationState& state) const {
  const int v = variant_for(state.context_key, state.seed);
  return script_.at(state.context_key).at(v);
}

TokenDistribution ScriptedBackend::next_distribution(const GenerationState& state) const {
  const Variant& variant = variant_of(state);

  const auto& expected = variant.tokens;
  const auto& step_ends = variant.step_ends;

  const auto generated = std::span(state.context_tokens).subspan(state.prompt_length);
  const auto [gen_it, exp_it] =
      std::mismatch(generated.begin(), generated.end(), expected.begin(), expected.end());
  const auto common = static_cast<std::size_t>(gen_it - generated.begin());

  std::vector<double> probs(vocab_.size(), 0.0);
  if (common == generated.size()) {
    const TokenId next = common < expected.size() ? expected[common] : eos_;
    probs[static_cast<std::size_t>(next)] = 1.0;
    return TokenDistribution::full(std::move(probs));
  }

  // Anything past the last completed step is treated as a probe suffix.
  const auto boundary = std::upper_bound(step_ends.begin(), step_ends.end(), common) - 1;
  const int step = static_cast<int>(boundary - step_ends.begin());
  auto probe = variant.probes.find(step);
  if (probe == variant.probes.end()) {
    throw Error(ErrorCode::kScriptMiss, "no probe scripted for '" + state.context_key +
                                            "' after step " + std::to_string(step));
  }
  double mass = 0.0;
  for (const auto& [label, p] : probe->second) {
    probs[static_cast<std::size_t>(*vocab_.find(label))] += p;
    mass += p;
  }
  probs[static_cast<std::size_t>(other_)] = std::max(0.0, 1.0 - mass);
  return TokenDistribution::full(std::move(probs));
}

ScriptedBackend load_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open script " + path.string());
  ScriptedBackend backend;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto rec = nlohmann::json::parse(line);
      const auto key = rec.at("context_key").get<std::string>();
      const auto kind = rec.at("kind").get<std::string>();
      const auto& payload = rec.at("payload");
      const int variant = payload.value("variant", 0);
      if (kind == "step") {
        backend.add_step(key, variant, payload.at("text").get<std::string>());
      } else if (kind == "probe") {
        backend.add_probe(key, variant, payload.at("step").get<int>(),
                          payload.at("dist").get<std::map<std::string, double>>());
      } else if (kind == "vocab") {
        for (const auto& p : payload.at("pieces")) backend.add_vocabulary_piece(p.get<std::string>());
      } else {
        throw LineError(ErrorCode::kScriptParseError, lineno, "unknown record kind '" + kind + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw LineError(ErrorCode::kScriptParseError, lineno, e.what());
    } catch (const LineError&) {
      throw;
    } catch (const Error& e) {
      throw LineError(ErrorCode::kScriptParseError, lineno, e.what());
    }
  }
  return backend;
}

}  // namespace cop
