// Copyright 2026 The healdag Authors
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

#include <gtest/gtest.h>

#include "healdag/error.hpp"
#include "healdag/expert.hpp"
#include "healdag/fault_expert.hpp"
#include "healdag/log.hpp"
#include "healdag/remote_expert.hpp"
#include "healdag/scenario.hpp"
#include "test_support.hpp"

namespace healdag {
namespace {

using test::id;
using test::vx;

class QuietLog : public ::testing::Test {
 protected:
  void SetUp() override {
    set_log_sink([this](LogLevel level, std::string_view msg) {
      if (level >= LogLevel::kWarning) warnings.emplace_back(msg);
    });
  }
  void TearDown() override { set_log_sink({}); }
  std::vector<std::string> warnings;
};

using ConfidenceTest = QuietLog;

TEST_F(ConfidenceTest, DirectRead) {
  auto r = parse_confidence("confidence: 0.85");
  EXPECT_FALSE(r.parse_failure);
  EXPECT_DOUBLE_EQ(r.value, 0.85);
}

TEST_F(ConfidenceTest, ClampedWithWarning) {
  auto r = parse_confidence("confidence: 1.7");
  EXPECT_DOUBLE_EQ(r.value, 1.0);
  EXPECT_TRUE(r.clamped);
  EXPECT_FALSE(warnings.empty());
}

TEST_F(ConfidenceTest, MissingFieldIsParseFailure) {
  auto r = parse_confidence("certainty: 0.9");
  EXPECT_TRUE(r.parse_failure);
  EXPECT_EQ(r.value, 0.0);
}

TEST_F(ConfidenceTest, OtherSpellings) {
  EXPECT_DOUBLE_EQ(parse_confidence(R"({"confidence": 0.4})").value, 0.4);
  EXPECT_DOUBLE_EQ(parse_confidence("Confidence = .5").value, 0.5);
  EXPECT_TRUE(parse_confidence("confidence: high").parse_failure);
  EXPECT_TRUE(parse_confidence("confidence: 0.5e").parse_failure);
}

TEST(OutputSchemaTest, RoundTripEveryKind) {
  const std::vector<ExpertOutput> outputs = {
      RagOutput{{"Paris is the capital"}, {{"doc1", "Paris is the capital of France."}}, {{0, 0}}},
      LogicOutput{{"a", "b"}, {true, false}},
      ExprOutput{"Paris. [doc1]", {{"Lyon is larger", true}}},
  };
  for (const auto& o : outputs) {
    auto back = output_from_json(nlohmann::json::parse(output_to_json(o).dump()));
    EXPECT_EQ(back, o);
    EXPECT_EQ(fingerprint(back), fingerprint(o));
  }
}

TEST(OutputSchemaTest, RandomRoundTrips) {
  test::Rng rng(3);
  for (int i = 0; i < 300; ++i) {
    ExpertOutput o;
    switch (rng.below(3)) {
      case 0: {
        RagOutput r;
        const std::size_t a = 1 + rng.below(3), k = 1 + rng.below(3);
        for (std::size_t j = 0; j < a; ++j) r.assertions.push_back("fact " + std::to_string(rng.next() % 100));
        for (std::size_t j = 0; j < k; ++j) r.evidence.push_back({"s" + std::to_string(j), "text"});
        for (std::size_t j = 0; j < a; ++j) r.citations.push_back({j, rng.below(k)});
        o = r;
        break;
      }
      case 1: {
        LogicOutput l;
        for (std::size_t j = 0; j < rng.below(5); ++j) {
          l.history.push_back("h" + std::to_string(j));
          l.verifications.push_back(rng.coin(0.5));
        }
        o = l;
        break;
      }
      default:
        o = ExprOutput{"draft " + std::to_string(rng.next() % 1000), {}};
    }
    ASSERT_EQ(output_from_json(nlohmann::json::parse(output_to_json(o).dump())), o);
  }
}

TEST(OutputSchemaTest, Violations) {
  EXPECT_TRUE(schema_violation(RagOutput{{"a"}, {}, {{0, 0}}}).has_value());
  EXPECT_TRUE(schema_violation(LogicOutput{{"a", "b"}, {true}}).has_value());
  EXPECT_TRUE(schema_violation(ExprOutput{"The sky is green.", {{"grass is blue", false}}}).has_value());
  EXPECT_FALSE(schema_violation(ExprOutput{"The sky is green.", {{"the SKY is  green", false}}}).has_value());
  EXPECT_FALSE(schema_violation(ExprOutput{"x", {{"elsewhere", true}}}).has_value());
}

TEST(OutputSchemaTest, SelfReportedAnomalies) {
  EXPECT_TRUE(self_reported_anomaly(LogicOutput{{"a"}, {false}}).has_value());
  EXPECT_TRUE(self_reported_anomaly(RagOutput{{"claim"}, {}, {}}).has_value());
  EXPECT_FALSE(self_reported_anomaly(LogicOutput{{"a"}, {true}}).has_value());
}

TEST(OutputSchemaTest, RenderAnswer) {
  EXPECT_EQ(render_answer(ExprOutput{"x = 2", {}}), "x = 2");
  EXPECT_EQ(render_answer(RagOutput{{"a.", "b."}, {{"s", "t"}}, {{0, 0}, {1, 0}}}), "a. b.");
  EXPECT_EQ(render_answer(LogicOutput{{"first", "second", "third"}, {true, true, false}}), "second");
}

TEST(ParseResponseTest, WellFormed) {
  auto fb = parse_response(ExpertKind::kLogic,
                           R"({"output":{"history":["x=1"],"verifications":[true]},"confidence":0.7,)"
                           R"("exception":false,"tokens_prompt":5,"tokens_completion":3})");
  EXPECT_FALSE(fb.exception);
  EXPECT_FALSE(fb.parse_failure);
  EXPECT_DOUBLE_EQ(fb.confidence, 0.7);
  EXPECT_EQ(fb.tokens(), 8u);
}

TEST(ParseResponseTest, ParseFailureAlwaysRaisesException) {
  const std::vector<std::string> malformed = {
      "",
      "not json",
      "[1,2]",
      R"({"confidence":0.9})",
      R"({"output":{"draft":"x","unsupported":[]}})",
      R"({"output":{"draft":"x","unsupported":[]},"confidence":"very"})",
      R"({"output":{"history":["a"],"verifications":[true]},"confidence":0.9})",
      R"({"output":{"draft":"x","unsupported":[]},"confidence":0.9,"exception":"no"})",
      R"({"output":{"assertions":["a"],"evidence":[],"citations":[[0,4]]},"confidence":0.9})",
  };
  for (const auto& raw : malformed) {
    auto fb = parse_response(ExpertKind::kExpr, raw);
    EXPECT_TRUE(fb.parse_failure) << raw;
    EXPECT_TRUE(fb.exception) << raw;
    EXPECT_EQ(fb.confidence, 0.0) << raw;
    EXPECT_EQ(kind_of(fb.output), ExpertKind::kExpr) << raw;
  }
}

TEST(ParseResponseTest, StringConfidenceField) {
  auto fb = parse_response(ExpertKind::kExpr, R"({"output":{"draft":"ok","unsupported":[]},"confidence":"confidence: 0.6"})");
  EXPECT_FALSE(fb.exception);
  EXPECT_DOUBLE_EQ(fb.confidence, 0.6);
}

TEST(ScenarioTest, FixtureRoundTripsThroughScriptedExpert) {
  auto table = parse_scripted_scenario(R"({"r1":[{"output":{"assertions":["Paris is the capital"],
      "evidence":[{"source_id":"snippet1","text":"Paris is the capital of France."}],"citations":[[0,0]]},
      "exception":false,"confidence":0.92,"tokens_prompt":12,"tokens_completion":7,"wall_time":0.4}]})");
  auto backend = std::make_shared<ScriptedBackend>(table);
  ScriptedExpert rag(ExpertKind::kRag, backend);
  auto fb = rag.execute({vx("r1", ExpertKind::kRag), {}, std::nullopt});
  EXPECT_EQ(fb, table.at(id("r1")).front().feedback);
  EXPECT_DOUBLE_EQ(fb.confidence, 0.92);
  EXPECT_EQ(fb.tokens_prompt, 12u);
}

TEST(ScenarioTest, FailedVerificationForcesException) {
  auto table = parse_scripted_scenario(R"({"v2":[{"output":{"history":["x-1=3x+2","x=3/2"],
      "verifications":[true,false]},"exception":false,"confidence":0.8}]})");
  ScriptedExpert logic(ExpertKind::kLogic, std::make_shared<ScriptedBackend>(table));
  auto fb = logic.execute({vx("v2", ExpertKind::kLogic), {}, std::nullopt});
  EXPECT_TRUE(fb.exception);
  EXPECT_DOUBLE_EQ(fb.confidence, 0.8);
}

TEST(ScenarioTest, KthConsultationGetsKthRecordThenRepeats) {
  auto table = parse_scripted_scenario(R"({"a":[
      {"output":{"draft":"one","unsupported":[]},"confidence":0.1},
      {"output":{"draft":"two","unsupported":[]},"confidence":0.2}]})");
  ScriptedExpert e(ExpertKind::kExpr, std::make_shared<ScriptedBackend>(table));
  const ExpertCall call{vx("a", ExpertKind::kExpr), {}, std::nullopt};
  EXPECT_EQ(render_answer(e.execute(call).output), "one");
  EXPECT_EQ(render_answer(e.execute(call).output), "two");
  EXPECT_EQ(render_answer(e.execute(call).output), "two");
}

TEST(ScenarioTest, WildcardServesNodesWithoutEntries) {
  auto table = parse_scripted_scenario(R"({"*":[{"output":{"draft":"any","unsupported":[]},"confidence":0.5}]})");
  ScriptedExpert e(ExpertKind::kExpr, std::make_shared<ScriptedBackend>(table));
  EXPECT_EQ(render_answer(e.execute({vx("zzz", ExpertKind::kExpr), {}, std::nullopt}).output), "any");
}

TEST(ScenarioTest, EmptyFileGivesEmptyTableAndMissingFixture) {
  auto table = parse_scripted_scenario("  \n");
  EXPECT_TRUE(table.empty());
  ScriptedExpert e(ExpertKind::kExpr, std::make_shared<ScriptedBackend>(table));
  try {
    e.execute({vx("a", ExpertKind::kExpr), {}, std::nullopt});
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kMissingFixture);
  }
}

TEST(ScenarioTest, DuplicateKeyNamesLine) {
  try {
    parse_scripted_scenario("{\n\"a\": [],\n\"a\": []\n}", "dup.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kScenarioParse);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(ScenarioTest, BadFieldDiagnostics) {
  try {
    parse_scripted_scenario(R"({"a":[{"output":{"draft":"x","unsupported":[]},"confidence":0.5,"tokens_prompt":-3}]})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kScenarioParse);
    EXPECT_NE(std::string(e.what()).find("tokens_prompt"), std::string::npos);
  }
  EXPECT_THROW(parse_scripted_scenario("{\"a\": [ {,] }"), Error);
  EXPECT_THROW(parse_scripted_scenario(R"({"a":[{"colour":1}]})"), Error);
}

TEST(ScenarioTest, MalformedRawReplyGoesThroughParser) {
  auto table = parse_scripted_scenario(R"({"a":[{"output":"<<garbage>>","confidence":0.9}]})");
  ScriptedExpert e(ExpertKind::kExpr, std::make_shared<ScriptedBackend>(table));
  auto fb = e.execute({vx("a", ExpertKind::kExpr), {}, std::nullopt});
  EXPECT_TRUE(fb.parse_failure);
  EXPECT_TRUE(fb.exception);
}

TEST(ScenarioTest, AbsEquationFixtureHasFiveEntries) {
  auto table = load_scripted_scenario(test::source_dir() / "scenarios/abs_equation/scenario.json");
  std::size_t n = 0;
  for (const auto& [k, v] : table) n += v.size();
  EXPECT_EQ(n, 5u);
}

TEST(ScenarioTest, ScriptedIsBitDeterministic) {
  auto table = load_scripted_scenario(test::source_dir() / "scenarios/abs_equation/scenario.json");
  auto run_all = [&] {
    auto backend = std::make_shared<ScriptedBackend>(table);
    std::vector<NodeFeedback> out;
    for (const auto& [node, _] : table) {
      const auto kind = node.name == "v4" ? ExpertKind::kExpr : ExpertKind::kLogic;
      out.push_back(ScriptedExpert(kind, backend).execute({vx(node.str(), kind), {}, std::nullopt}));
    }
    return out;
  };
  EXPECT_EQ(run_all(), run_all());
}

TEST(FaultExpertTest, RateOneAlwaysFails) {
  FaultProfile p;
  p.failure_rate = 1.0;
  FaultInjectingExpert e(ExpertKind::kRag, p);
  for (int i = 0; i < 20; ++i) {
    auto fb = e.execute({vx("r", ExpertKind::kRag), {}, std::nullopt});
    EXPECT_TRUE(fb.exception);
    EXPECT_EQ(fb.confidence, 0.0);
  }
  EXPECT_EQ(e.injected(), 20u);
}

TEST(FaultExpertTest, RateZeroNeverFails) {
  FaultProfile p;
  FaultInjectingExpert e(ExpertKind::kLogic, p);
  auto fb = e.execute({vx("l", ExpertKind::kLogic), {}, std::nullopt});
  EXPECT_FALSE(fb.exception);
  EXPECT_DOUBLE_EQ(fb.confidence, p.healthy_confidence);
}

TEST(FaultExpertTest, SeededDrawsReplay) {
  FaultProfile p;
  p.failure_rate = 0.4;
  p.seed = 99;
  auto draws = [&] {
    FaultInjectingExpert e(ExpertKind::kExpr, p);
    std::vector<bool> out;
    for (int i = 0; i < 64; ++i) out.push_back(e.execute({vx("x", ExpertKind::kExpr), {}, std::nullopt}).exception);
    return out;
  };
  const auto a = draws();
  EXPECT_EQ(a, draws());
  const auto fails = std::count(a.begin(), a.end(), true);
  EXPECT_GT(fails, 10);
  EXPECT_LT(fails, 45);
}

TEST(FaultExpertTest, ModesProduceTheirSymptoms) {
  FaultProfile p;
  p.failure_rate = 1.0;
  p.mode = FaultMode::kLowConfidence;
  p.low_confidence = 0.05;
  auto low = FaultInjectingExpert(ExpertKind::kLogic, p).execute({vx("l", ExpertKind::kLogic), {}, std::nullopt});
  EXPECT_FALSE(low.exception);
  EXPECT_DOUBLE_EQ(low.confidence, 0.05);
  p.mode = FaultMode::kMalformed;
  auto bad = FaultInjectingExpert(ExpertKind::kLogic, p).execute({vx("l", ExpertKind::kLogic), {}, std::nullopt});
  EXPECT_TRUE(bad.parse_failure);
  EXPECT_TRUE(bad.exception);
}

TEST(FaultExpertTest, RejectsBadRate) {
  FaultProfile p;
  p.failure_rate = 1.5;
  EXPECT_THROW(FaultInjectingExpert(ExpertKind::kRag, p), Error);
}

TEST(RemoteExpertTest, RequestCarriesContextInParentOrder) {
  ExpertCall call{vx("c", ExpertKind::kExpr, {"b", "a"}), {}, RepairContext{"fix it", std::nullopt}};
  call.parent_payloads.push_back({id("b"), ExprOutput{"B", {}}, std::nullopt});
  call.parent_payloads.push_back({id("a"), ExprOutput{"A", {}}, std::nullopt});
  auto j = remote_request(call);
  EXPECT_EQ(j["instruction"], "do c");
  EXPECT_EQ(j["parent_payloads"][0]["source"], "b");
  EXPECT_EQ(j["parent_payloads"][1]["source"], "a");
  EXPECT_EQ(j["repair_context"], "fix it");
}

TEST(RemoteExpertTest, UnreachableEndpointIsExpertUnavailable) {
  RemoteEndpoint ep;
  ep.url = "http://127.0.0.1:1";
  ep.timeout_seconds = 0.2;
  ep.retries = 1;
  RemoteExpert e(ExpertKind::kExpr, ep);
  try {
    e.execute({vx("x", ExpertKind::kExpr), {}, std::nullopt});
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::kExpertUnavailable);
  }
}

TEST(TokenEstimateTest, Whitespace) {
  EXPECT_EQ(estimate_tokens(""), 0u);
  EXPECT_EQ(estimate_tokens("  a bb\tccc\n"), 3u);
}

}  // namespace
}  // namespace healdag
