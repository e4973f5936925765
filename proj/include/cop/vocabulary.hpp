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

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cop/trace.hpp"

namespace cop {

// Piece vocabulary used by the in-process backends. Ids 0..255 are byte
// fallback tokens so that every string tokenizes; those do not count as
// vocabulary entries when resolving answer labels.
class Vocabulary {
 public:
  static constexpr TokenId kByteTokens = 256;

  Vocabulary();

  // Splits text into word runs, whitespace runs and single punctuation
  // characters. Concatenating the pieces reproduces the input.
  static std::vector<std::string> pre_split(std::string_view text);

  TokenId add(std::string_view piece);
  TokenId add_special(std::string_view name);
  // Adds every pre-split piece of text.
  void add_text(std::string_view text);

  std::optional<TokenId> find(std::string_view piece) const;
  bool is_byte(TokenId id) const noexcept { return id >= 0 && id < kByteTokens; }
  bool is_special(TokenId id) const;
  std::size_t size() const noexcept { return pieces_.size(); }
  const std::string& piece(TokenId id) const { return pieces_.at(static_cast<std::size_t>(id)); }

  // Whole pieces when known, otherwise greedy longest-prefix matching with
  // byte fallback.
  std::vector<TokenId> tokenize(std::string_view text) const;
  std::string detokenize(std::span<const TokenId> tokens) const;

  // Ids of all non-byte, non-special pieces in id order.
  std::vector<TokenId> regular_tokens() const;

 private:
  void encode_word(std::string_view word, std::vector<TokenId>& out) const;

  std::vector<std::string> pieces_;
  std::vector<bool> special_;
  std::unordered_map<std::string, TokenId> index_;
  std::size_t longest_piece_ = 1;
};

}  // namespace cop
