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

#include <fstream>
#include <numeric>

#include "cop/backend.hpp"
#include "cop/error.hpp"
#include "cop/probe.hpp"
#include "cop/scripted_backend.hpp"
#include "cop/toy_lm.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace cop;

namespace {

const std::vector<std::string> kLabels = {"A", "B", "C", "D"};

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no exception");
  return ErrorCode::kInvalidArgument;
}

ToyLanguageModel small_toy(std::vector<std::string> fallback = {}) {
  ToyLanguageModel::Options o;
  o.fallback_support = std::move(fallback);
  return ToyLanguageModel::train({"The sky is blue. So, the answer is (B).",
                                  "Grass is green. Leaves are green. So, the answer is (A).",
                                  "Options A B C D"},
                                 o);
}

ScriptedBackend one_question() {
  ScriptedBackend b;
  b.add_step("q", 0, "First we note a fact. ");
  b.add_step("q", 0, "Then we combine it. ");
  b.add_step("q", 0, "So, the answer is (B).");
  b.add_probe("q", 0, 0, {{"A", 0.4}, {"B", 0.3}, {"C", 0.2}, {"D", 0.1}});
  b.add_probe("q", 0, 1, {{"A", 0.2}, {"B", 0.5}, {"C", 0.2}, {"D", 0.1}});
  b.add_probe("q", 0, 2, {{"A", 0.1}, {"B", 0.6}, {"C", 0.2}, {"D", 0.1}});
  b.add_probe("q", 0, 3, {{"A", 0.05}, {"B", 0.9}, {"C", 0.03}, {"D", 0.02}});
  return b;
}

// A top-N-only backend wrapping a fixed raw payload.
class PartialBackend final : public ModelBackend {
 public:
  std::vector<std::pair<TokenId, double>> payload;
  BackendDescriptor descriptor() const override { return {"partial", 300, false, 5}; }
  std::vector<TokenId> tokenize(std::string_view text) const override {
    std::vector<TokenId> out;
    for (unsigned char c : text) out.push_back(c);
    return out;
  }
  std::string detokenize(std::span<const TokenId> tokens) const override {
    std::string s;
    for (auto t : tokens) s += static_cast<char>(t);
    return s;
  }
  LabelResolution resolve_label(std::string_view label) const override {
    return {LabelStatus::kSingleToken, static_cast<unsigned char>(label[0])};
  }
  std::optional<TokenId> end_of_sequence() const override { return std::nullopt; }
  TokenDistribution next_distribution(const GenerationState&) const override {
    return TokenDistribution::partial(payload);
  }
};

}  // namespace

TEST_CASE("toy LM falls back to a uniform distribution on unseen contexts") {
  const auto lm = small_toy(kLabels);
  auto state = lm.begin("zzz qqq", "x", 0);
  const auto dist = lm.next_distribution(state);
  REQUIRE(dist.complete());
  const auto targets = validate_target_set(kLabels, lm);
  for (const auto& e : targets.entries()) CHECK(*dist.probability(e.token) == 0.25);
  CHECK(std::accumulate(dist.dense().begin(), dist.dense().end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("next_distribution is pure") {
  const auto lm = small_toy();
  auto state = lm.begin("The sky is", "x", 0);
  const auto before = state;
  const auto a = lm.next_distribution(state);
  const auto b = lm.next_distribution(state);
  CHECK(a.dense() == b.dense());
  CHECK(state == before);
}

TEST_CASE("scripted backend replays probe rows exactly") {
  const auto b = one_question();
  const auto targets = validate_target_set(kLabels, b);
  auto state = b.begin("Question: x\nAnswer:", "q", 0);
  const auto probe = b.tokenize(" So, the answer is (");
  const auto r = probe_distribution(b, state, probe, targets);
  CHECK(r.row.probs()[0] == 0.4);
  CHECK(r.row.probs()[1] == 0.3);
  CHECK(r.row.probs()[2] == 0.2);
  CHECK(r.row.probs()[3] == 0.1);
  CHECK_FALSE(r.partial());
}

TEST_CASE("probe_distribution restores the state bit for bit") {
  const auto lm = small_toy();
  const auto targets = validate_target_set(kLabels, lm);
  DecodeConfig cfg = DecodeConfig::sampling(42);
  auto state = lm.begin("The sky is blue.", "q", 42);
  StepStopRule stop;
  for (int i = 0; i < 3; ++i) {
    const auto snapshot = state;
    const auto probe = lm.tokenize(" So, the answer is (");
    const auto r = probe_distribution(lm, state, probe, targets);
    CHECK(state == snapshot);
    CHECK(state.cache_entries.size() == state.context_tokens.size());
    // Extracted values are the full-distribution entries.
    auto with_probe = state;
    for (auto t : probe) lm.append(with_probe, t);
    const auto dist = lm.next_distribution(with_probe);
    for (std::size_t j = 0; j < targets.size(); ++j) CHECK(r.row[j] == *dist.probability(targets[j].token));
    generate_step(lm, state, cfg, stop);
  }
}

TEST_CASE("partial distributions floor missing labels") {
  PartialBackend b;
  // Raw payload: A 0.5, B 0.3, C 0.1, and two non-target tokens; D absent.
  b.payload = {{'A', 0.5}, {'B', 0.3}, {'C', 0.1}, {'x', 0.05}, {'y', 0.02}};
  const auto targets = validate_target_set(kLabels, b);
  auto state = b.begin("ctx", "q", 0);
  const auto snapshot = state;
  const auto r = probe_distribution(b, state, b.tokenize("("), targets);
  // Reference extraction: look each label up in the raw payload, floor the rest.
  std::vector<double> expected;
  for (const auto& label : kLabels) {
    double v = 1e-6;
    for (const auto& [tok, p] : b.payload) {
      if (tok == static_cast<unsigned char>(label[0])) v = p;
    }
    expected.push_back(v);
  }
  CHECK(std::vector<double>(r.row.probs().begin(), r.row.probs().end()) == expected);
  CHECK(r.missing_labels == std::vector<std::string>{"D"});
  CHECK(state == snapshot);
}

TEST_CASE("validate_target_set") {
  ScriptedBackend b = one_question();
  b.add_vocabulary_piece("carbon");
  b.add_vocabulary_piece("ated");
  CHECK(validate_target_set(kLabels, b).size() == 4);
  CHECK(code_of([&] { validate_target_set(std::vector<std::string>{"carbonated"}, b); }) ==
        ErrorCode::kMultiTokenLabel);
  CHECK(code_of([&] { validate_target_set(std::vector<std::string>{"Q"}, b); }) == ErrorCode::kUnknownToken);
  CHECK(code_of([&] { validate_target_set(std::vector<std::string>{}, b); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([&] { validate_target_set(std::vector<std::string>{"A", "A"}, b); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("greedy generation replays scripted steps verbatim") {
  const auto b = one_question();
  auto state = b.begin("Question: x\nAnswer:", "q", 0);
  DecodeConfig cfg;
  StepStopRule stop;
  CHECK(generate_step(b, state, cfg, stop).text == "First we note a fact. ");
  CHECK(generate_step(b, state, cfg, stop).text == "Then we combine it. ");
  const auto last = generate_step(b, state, cfg, stop);
  CHECK(last.text == "So, the answer is (B).");
  CHECK(last.finished);
  CHECK(state.cache_entries.size() == state.context_tokens.size());
}

TEST_CASE("seeded sampling is reproducible") {
  const auto lm = small_toy();
  const DecodeConfig cfg = DecodeConfig::sampling(1234);
  StepStopRule stop;
  std::vector<std::string> runs;
  for (int r = 0; r < 2; ++r) {
    auto state = lm.begin("Grass is", "q", cfg.seed);
    std::string text;
    for (int i = 0; i < 4; ++i) text += generate_step(lm, state, cfg, stop).text;
    runs.push_back(text);
  }
  CHECK(runs[0] == runs[1]);
}

TEST_CASE("step budget stops generation and flags it") {
  const auto lm = small_toy(kLabels);
  DecodeConfig cfg;
  cfg.max_tokens_per_step = 3;
  StepStopRule stop;
  auto state = lm.begin("unseen words here", "q", 0);
  const auto r = generate_step(lm, state, cfg, stop);
  CHECK(r.tokens.size() == 3);
  CHECK(r.budget_exceeded);
}

TEST_CASE("probes between steps do not change toy LM output") {
  const auto lm = small_toy();
  const auto targets = validate_target_set(kLabels, lm);
  const auto probe = lm.tokenize(" So, the answer is (");
  DecodeConfig cfg;
  StepStopRule stop;
  for (const std::string prompt : {"The sky", "Grass is green.", "Leaves"}) {
    auto plain = lm.begin(prompt, "q", 0);
    auto probed = lm.begin(prompt, "q", 0);
    std::string a, b;
    for (int i = 0; i < 6; ++i) {
      const auto s1 = generate_step(lm, plain, cfg, stop);
      probe_distribution(lm, probed, probe, targets);
      const auto s2 = generate_step(lm, probed, cfg, stop);
      a += s1.text;
      b += s2.text;
      CHECK(plain == probed);
      if (s1.finished) break;
    }
    CHECK(a == b);
  }
}

TEST_CASE("choose_token") {
  const auto dist = TokenDistribution::full({0.1, 0.4, 0.4, 0.1});
  std::mt19937_64 rng(1);
  CHECK(choose_token(dist, DecodeConfig{}, rng) == 1);
  DecodeConfig top1 = DecodeConfig::sampling(0);
  top1.top_k = 1;
  for (int i = 0; i < 20; ++i) CHECK(choose_token(dist, top1, rng) == 1);
  // top-p keeps only the smallest prefix reaching the mass.
  DecodeConfig nucleus = DecodeConfig::sampling(0);
  nucleus.top_k = 0;
  nucleus.temperature = 1.0;
  nucleus.top_p = 0.5;
  for (int i = 0; i < 50; ++i) {
    const auto t = choose_token(dist, nucleus, rng);
    CHECK((t == 1 || t == 2));
  }
  // Frequencies follow the distribution at temperature 1 without truncation.
  DecodeConfig plain = DecodeConfig::sampling(0);
  plain.top_k = 0;
  plain.top_p = 1.0;
  plain.temperature = 1.0;
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 20000; ++i) ++counts[static_cast<std::size_t>(choose_token(dist, plain, rng))];
  CHECK(counts[0] / 20000.0 == doctest::Approx(0.1).epsilon(0.15));
  CHECK(counts[1] / 20000.0 == doctest::Approx(0.4).epsilon(0.05));
}

TEST_CASE("load_script") {
  testutil::TempDir dir;
  const auto path = dir / "script.jsonl";
  {
    std::ofstream f(path);
    f << R"({"context_key": "q1", "kind": "step", "payload": {"text": "One. "}})" "\n";
    f << R"({"context_key": "q1", "kind": "step", "payload": {"text": "Two. "}})" "\n";
    f << R"({"context_key": "q1", "kind": "step", "payload": {"text": "So, the answer is (C)."}})" "\n";
    for (int i = 0; i < 4; ++i) {
      f << R"({"context_key": "q1", "kind": "probe", "payload": {"step": )" << i
        << R"(, "dist": {"A": 0.1, "B": 0.2, "C": 0.3, "D": 0.1}}})" "\n";
    }
  }
  const auto b = load_script(path);
  const auto targets = validate_target_set(kLabels, b);
  RunOptions ro;
  ro.question_id = "q1";
  PromptSpec spec;
  spec.question = "Q?";
  const auto t = run_cop(spec, b, targets, DecodeConfig{}, ro);
  CHECK(t.step_count() == 3);
  CHECK(t.matrix.row_count() == 4);
  CHECK(t.final_prediction == 2);

  ro.question_id = "unknown";
  CHECK(code_of([&] { run_cop(spec, b, targets, DecodeConfig{}, ro); }) == ErrorCode::kScriptMiss);

  const auto bad = dir / "bad.jsonl";
  {
    std::ofstream f(bad);
    f << R"({"context_key": "q1", "kind": "step", "payload": {"text": "One. "}})" "\n";
    f << R"({"context_key": "q1", "kind": "nonsense"})" "\n";
  }
  try {
    load_script(bad);
    FAIL("expected a parse error");
  } catch (const LineError& e) {
    CHECK(e.code() == ErrorCode::kScriptParseError);
    CHECK(e.line() == 2);
  }
}
