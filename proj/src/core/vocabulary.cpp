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

#include "cop/vocabulary.hpp"

#include <algorithm>
#include <cctype>

#include "cop/error.hpp"

namespace cop {

namespace {

enum class CharClass { kWord, kSpace, kOther };

CharClass classify(unsigned char c) {
  if (std::isalnum(c) || c >= 0x80) return CharClass::kWord;
  if (std::isspace(c)) return CharClass::kSpace;
  return CharClass::kOther;
}

}  // namespace

Vocabulary::Vocabulary() {
  pieces_.reserve(kByteTokens);
  for (int b = 0; b < kByteTokens; ++b) {
    pieces_.emplace_back(1, static_cast<char>(b));
    special_.push_back(false);
  }
}

std::vector<std::string> Vocabulary::pre_split(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const CharClass cls = classify(static_cast<unsigned char>(text[i]));
    std::size_t j = i + 1;
    if (cls != CharClass::kOther) {
      while (j < text.size() && classify(static_cast<unsigned char>(text[j])) == cls) ++j;
    }
    out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

TokenId Vocabulary::add(std::string_view piece) {
  if (piece.empty()) throw Error(ErrorCode::kInvalidArgument, "empty vocabulary piece");
  if (auto id = find(piece)) return *id;
  const auto id = static_cast<TokenId>(pieces_.size());
  pieces_.emplace_back(piece);
  special_.push_back(false);
  index_.emplace(std::string(piece), id);
  longest_piece_ = std::max(longest_piece_, piece.size());
  return id;
}

TokenId Vocabulary::add_special(std::string_view name) {
  const auto id = static_cast<TokenId>(pieces_.size());
  pieces_.emplace_back(name);
  special_.push_back(true);
  return id;
}

void Vocabulary::add_text(std::string_view text) {
  for (const auto& p : pre_split(text)) add(p);
}

std::optional<TokenId> Vocabulary::find(std::string_view piece) const {
  if (auto it = index_.find(std::string(piece)); it != index_.end()) return it->second;
  return std::nullopt;
}

bool Vocabulary::is_special(TokenId id) const {
  return id >= 0 && static_cast<std::size_t>(id) < special_.size() && special_[id];
}

void Vocabulary::encode_word(std::string_view word, std::vector<TokenId>& out) const {
  std::size_t i = 0;
  while (i < word.size()) {
    std::size_t len = std::min(longest_piece_, word.size() - i);
    std::optional<TokenId> hit;
    for (; len > 0; --len) {
      if ((hit = find(word.substr(i, len)))) break;
    }
    if (hit) {
      out.push_back(*hit);
      i += len;
    } else {
      out.push_back(static_cast<TokenId>(static_cast<unsigned char>(word[i])));
      ++i;
    }
  }
}

std::vector<TokenId> Vocabulary::tokenize(std::string_view text) const {
  std::vector<TokenId> out;
  for (const auto& word : pre_split(text)) {
    if (auto id = find(word)) {
      out.push_back(*id);
    } else {
      encode_word(word, out);
    }
  }
  return out;
}

std::string Vocabulary::detokenize(std::span<const TokenId> tokens) const {
  std::string out;
  for (TokenId t : tokens) {
    if (!is_special(t)) out += piece(t);
  }
  return out;
}

std::vector<TokenId> Vocabulary::regular_tokens() const {
  std::vector<TokenId> out;
  for (auto id = kByteTokens; static_cast<std::size_t>(id) < pieces_.size(); ++id) {
    if (!special_[id]) out.push_back(id);
  }
  return out;
}

}  // namespace cop
