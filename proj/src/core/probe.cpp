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

#include "cop/probe.hpp"

#include <fstream>

#include "json.hpp"

#include "cop/error.hpp"

namespace cop {

PromptSpec PromptTemplate::for_question(std::string question, std::size_t shots) const {
  PromptSpec spec;
  spec.instruction = instruction;
  spec.cot_trigger = cot_trigger;
  spec.question = std::move(question);
  const std::size_t n = std::min(shots, demos.size());
  spec.demos.assign(demos.begin(), demos.begin() + static_cast<std::ptrdiff_t>(n));
  return spec;
}

PromptTemplate load_prompt_template(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open demos file " + path.string());
  PromptTemplate t;
  try {
    const auto doc = nlohmann::json::parse(in);
    t.instruction = doc.value("instruction", std::string());
    t.cot_trigger = doc.value("cot_trigger", std::string(kDefaultCotTrigger));
    for (const auto& d : doc.value("demos", nlohmann::json::array())) {
      t.demos.push_back({d.at("question").get<std::string>(), d.at("answer").get<std::string>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
  return t;
}

std::string build_prompt(const PromptSpec& spec) {
  std::string out;
  if (!spec.instruction.empty()) {
    out += spec.instruction;
    out += '\n';
  }
  for (const auto& demo : spec.demos) {
    out += "Question: " + demo.question + "\n";
    out += "Answer: " + spec.cot_trigger + " " + demo.answer + "\n\n";
  }
  out += "Question: " + spec.question + "\nAnswer:";
  return out;
}

ProbeTrace run_cop(const PromptSpec& spec, const ModelBackend& backend,
                   const TargetTokenSet& targets, const DecodeConfig& cfg,
                   const RunOptions& options) {
  cfg.validate();
  options.stop.validate();

  ProbeTrace trace;
  trace.question_id = options.question_id;
  trace.sample_index = options.sample_index;
  trace.prompt = build_prompt(spec);
  trace.gold = options.gold;
  trace.decode_config = cfg;
  trace.backend_id = backend.descriptor().backend_id;
  trace.probe_string = options.probe_string;
  trace.metadata = options.metadata;
  // c_0 is read right after the rendered prompt, i.e. after "Answer:".
  trace.metadata.emplace("c0_position", "after_prompt");

  const std::uint64_t seed = cfg.mode == DecodeMode::kSample ? cfg.seed : 0;
  GenerationState state = backend.begin(trace.prompt, options.question_id, seed);
  const auto probe_tokens = backend.tokenize(options.probe_string);

  std::vector<ConfidenceRow> rows;
  auto probe = [&] {
    auto result = probe_distribution(backend, state, probe_tokens, targets);
    trace.flags.partial_distribution = trace.flags.partial_distribution || result.partial();
    rows.push_back(std::move(result.row));
  };

  probe();
  std::string answer_text;
  bool done = false;
  while (!done) {
    if (static_cast<int>(trace.steps.size()) >= cfg.max_steps) {
      trace.flags.step_limit_reached = true;
      break;
    }
    StepResult step = generate_step(backend, state, cfg, options.stop);
    trace.flags.budget_exceeded = trace.flags.budget_exceeded || step.budget_exceeded;
    done = step.finished;
    if (step.text.empty()) break;
    answer_text += step.text;
    trace.steps.push_back(std::move(step.text));
    probe();
    if (find_answer_label(trace.steps.back(), targets)) done = true;
  }

  trace.matrix = ConfidenceMatrix(std::move(rows));
  const FinalPrediction fp = final_prediction(answer_text, targets, trace.matrix);
  trace.final_prediction = fp.index;
  trace.flags.answer_fallback = fp.fallback;
  return trace;
}

}  // namespace cop
