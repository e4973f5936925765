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

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cop/backend.hpp"
#include "cop/segment.hpp"
#include "cop/trace.hpp"

namespace cop {

inline constexpr std::string_view kDefaultProbeString = " So, the answer is (";
inline constexpr std::string_view kDefaultCotTrigger = "Let's think step by step.";

struct Demo {
  std::string question;
  std::string answer;  // reasoning plus final answer, without the trigger
};

struct PromptSpec {
  std::string instruction;
  std::vector<Demo> demos;
  std::string question;
  std::string cot_trigger = std::string(kDefaultCotTrigger);
};

// Instruction and demos as stored in a demos file:
//   {"instruction": "...", "cot_trigger": "...", "demos": [{"question": ..., "answer": ...}]}
struct PromptTemplate {
  std::string instruction;
  std::vector<Demo> demos;
  std::string cot_trigger = std::string(kDefaultCotTrigger);

  // Keeps the first `shots` demos (default 5).
  PromptSpec for_question(std::string question, std::size_t shots = 5) const;
};

PromptTemplate load_prompt_template(const std::filesystem::path& path);

// Renders
//   {instruction}
//   Question: {demo q}
//   Answer: {trigger} {demo a}
//   <blank line>
//   ...
//   Question: {q}
//   Answer:
std::string build_prompt(const PromptSpec& spec);

struct RunOptions {
  std::string question_id;
  std::string probe_string = std::string(kDefaultProbeString);
  StepStopRule stop;
  std::optional<std::size_t> gold;
  int sample_index = 0;
  std::map<std::string, std::string> metadata;
};

// Probes once on the bare prompt, then after every generated step, until the
// answer pattern appears, generation ends, or cfg.max_steps is reached. The
// decoding RNG is seeded with cfg.seed in sample mode and 0 in greedy mode.
ProbeTrace run_cop(const PromptSpec& spec, const ModelBackend& backend,
                   const TargetTokenSet& targets, const DecodeConfig& cfg,
                   const RunOptions& options);

}  // namespace cop
