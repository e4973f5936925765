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

#include <string>
#include <string_view>
#include <vector>

namespace cop {

// Where one reasoning step ends: a terminator followed by whitespace, unless
// the text before the whitespace ends in a guarded abbreviation.
struct StepStopRule {
  std::string terminators = ".?!";
  std::vector<std::string> abbreviation_guards = {"e.g.", "i.e.", "Dr.", "Mr.", "Mrs.",
                                                  "Ms.", "vs."};
  int max_tokens_per_step = 128;

  void validate() const;
};

// True when `text` ends exactly at a step boundary: a terminator followed by at
// least one whitespace character, and nothing after the whitespace.
bool ends_at_step_boundary(std::string_view text, const StepStopRule& rule);

// Lossless split: concatenating the result reproduces `text`. Each boundary
// sits after the whole whitespace run that follows a terminator.
std::vector<std::string> segment_steps(std::string_view text, const StepStopRule& rule);

}  // namespace cop
