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

#include "cop/toy_lm.hpp"

#include <fstream>

#include "json.hpp"

#include "cop/error.hpp"

namespace cop {

namespace {

constexpr TokenId kPad = -1;

}  // namespace

LabelResolution resolve_with_vocabulary(const Vocabulary& vocab, std::string_view label) {
  const auto toks = vocab.tokenize(label);
  bool any_byte = false;
  for (TokenId t : toks) any_byte = any_byte || vocab.is_byte(t);
  if (toks.empty() || any_byte) return {LabelStatus::kUnknown, -1};
  if (toks.size() > 1) return {LabelStatus::kMultiToken, -1};
  return {LabelStatus::kSingleToken, toks.front()};
}

ToyLanguageModel ToyLanguageModel::train(const std::vector<std::string>& documents,
                                         Options options) {
  if (options.order < 1) throw Error(ErrorCode::kInvalidArgument, "toy LM order must be >= 1");
  ToyLanguageModel lm;
  lm.options_ = std::move(options);
  lm.eos_ = lm.vocab_.add_special("<eos>");
  for (const auto& doc : documents) lm.vocab_.add_text(doc);
  for (const auto& s : lm.options_.fallback_support) lm.vocab_.add(s);

  const auto ctx_len = static_cast<std::size_t>(lm.options_.order - 1);
  for (const auto& doc : documents) {
    std::vector<TokenId> seq(ctx_len, kPad);
    for (TokenId t : lm.vocab_.tokenize(doc)) seq.push_back(t);
    seq.push_back(lm.eos_);
    for (std::size_t i = ctx_len; i < seq.size(); ++i) {
      std::vector<TokenId> ctx(seq.begin() + static_cast<std::ptrdiff_t>(i - ctx_len),
                               seq.begin() + static_cast<std::ptrdiff_t>(i));
      ++lm.table_[ctx][seq[i]];
    }
  }

  if (lm.options_.fallback_support.empty()) {
    lm.fallback_ = lm.vocab_.regular_tokens();
  } else {
    for (const auto& s : lm.options_.fallback_support) lm.fallback_.push_back(*lm.vocab_.find(s));
  }
  if (lm.fallback_.empty()) lm.fallback_.push_back(lm.eos_);
  return lm;
}

ToyLanguageModel ToyLanguageModel::from_corpus_file(const std::filesystem::path& path,
                                                    Options options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open corpus " + path.string());
  std::vector<std::string> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      docs.push_back(j.at("text").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw LineError(ErrorCode::kParseError, lineno, e.what());
    }
  }
  return train(docs, std::move(options));
}

BackendDescriptor ToyLanguageModel::descriptor() const {
  return {"toy-lm/order-" + std::to_string(options_.order), vocab_.size(), true, std::nullopt};
}

std::vector<TokenId> ToyLanguageModel::tokenize(std::string_view text) const {
  return vocab_.tokenize(text);
}

std::string ToyLanguageModel::detokenize(std::span<const TokenId> tokens) const {
  return vocab_.detokenize(tokens);
}

LabelResolution ToyLanguageModel::resolve_label(std::string_view label) const {
  return resolve_with_vocabulary(vocab_, label);
}

TokenDistribution ToyLanguageModel::next_distribution(const GenerationState& state) const {
  const auto ctx_len = static_cast<std::size_t>(options_.order - 1);
  const auto& cells = state.cache_entries;
  std::vector<TokenId> ctx(ctx_len, kPad);
  const std::size_t have = std::min(ctx_len, cells.size());
  for (std::size_t i = 0; i < have; ++i) {
    ctx[ctx_len - have + i] = cells[cells.size() - have + i].token;
  }

  std::vector<double> probs(vocab_.size(), 0.0);
  if (auto it = table_.find(ctx); it != table_.end()) {
    std::uint64_t total = 0;
    for (const auto& [tok, n] : it->second) total += n;
    for (const auto& [tok, n] : it->second) {
      probs[static_cast<std::size_t>(tok)] = static_cast<double>(n) / static_cast<double>(total);
    }
  } else {
    const double u = 1.0 / static_cast<double>(fallback_.size());
    for (TokenId t : fallback_) probs[static_cast<std::size_t>(t)] = u;
  }
  return TokenDistribution::full(std::move(probs));
}

}  // namespace cop
