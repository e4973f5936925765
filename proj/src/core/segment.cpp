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

#include "cop/segment.hpp"

#include <cctype>

#include "cop/error.hpp"

namespace cop {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || u >= 0x80;
}

// `head` ends with a terminator; decide whether that terminator closes a
// sentence.
bool terminator_closes(std::string_view head, const StepStopRule& rule) {
  if (head.empty() || rule.terminators.find(head.back()) == std::string::npos) return false;
  for (const auto& guard : rule.abbreviation_guards) {
    if (guard.empty() || head.size() < guard.size()) continue;
    if (head.substr(head.size() - guard.size()) != guard) continue;
    const std::size_t before = head.size() - guard.size();
    if (before == 0 || !is_word_char(head[before - 1])) return false;
  }
  return true;
}

}  // namespace

void StepStopRule::validate() const {
  if (terminators.empty()) throw Error(ErrorCode::kInvalidArgument, "no step terminators");
  if (max_tokens_per_step < 1) {
    throw Error(ErrorCode::kInvalidArgument, "max_tokens_per_step must be >= 1");
  }
}

bool ends_at_step_boundary(std::string_view text, const StepStopRule& rule) {
  std::size_t end = text.size();
  while (end > 0 && is_space(text[end - 1])) --end;
  if (end == text.size() || end == 0) return false;
  return terminator_closes(text.substr(0, end), rule);
}

std::vector<std::string> segment_steps(std::string_view text, const StepStopRule& rule) {
  std::vector<std::string> out;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (i + 1 < text.size() && is_space(text[i + 1]) &&
        terminator_closes(text.substr(0, i + 1), rule)) {
      std::size_t j = i + 1;
      while (j < text.size() && is_space(text[j])) ++j;
      out.emplace_back(text.substr(start, j - start));
      start = j;
      i = j;
      continue;
    }
    ++i;
  }
  if (start < text.size()) out.emplace_back(text.substr(start));
  return out;
}

}  // namespace cop
