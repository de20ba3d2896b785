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

#include <gtest/gtest.h>

#include <cmath>

#include "healdag/critic.hpp"
#include "healdag/error.hpp"
#include "test_support.hpp"

namespace healdag {
namespace {

using test::id;
using test::vx;

Trajectory trajectory(std::size_t nodes, std::uint32_t eta, std::vector<bool> legal, std::string answer = "x") {
  Trajectory t;
  t.id = "t";
  t.query = "q";
  t.node_count = nodes;
  t.reconstructions = eta;
  t.per_node_legality = std::move(legal);
  t.final_answer = std::move(answer);
  return t;
}

class FixedGrader final : public TaskGrader {
 public:
  explicit FixedGrader(double phi) : phi_(phi) {}
  double grade(const Trajectory&) const override { return phi_; }

 private:
  double phi_;
};

TEST(RewardTest, HandValues) {
  EXPECT_DOUBLE_EQ(reward(true, 1.0, 4, 0, 0.05, 1.0), 1.0 - 0.05 * std::log(5.0));
  EXPECT_DOUBLE_EQ(reward(true, 0.5, 3, 2, 0.1, 2.0), 0.5 - 0.1 * std::log(8.0));
  EXPECT_DOUBLE_EQ(reward(false, 0.9, 3, 2, 0.1, 2.0), -0.1 * std::log(8.0));
}

TEST(RewardTest, VetoIgnoresTaskScore) {
  // One illegal node out of four, eta 1.
  const double expected = -0.1 * std::log(1.0 + 4.0 + 2.0 * 1.0);
  CriticConfig cfg;
  cfg.lambda = 0.1;
  cfg.gamma = 2.0;
  std::vector<double> rewards;
  for (int i = 0; i <= 10; ++i) {
    FixedGrader g(i / 10.0);
    rewards.push_back(reward(trajectory(4, 1, {true, false, true, true}), cfg, g));
  }
  for (double r : rewards) {
    EXPECT_NEAR(r, expected, 1e-12);
    // Bit-identical, so the variance is exactly zero.
    EXPECT_EQ(r, rewards[0]);
  }
}

TEST(RewardTest, PenaltyIsSublinear) {
  // The marginal penalty of one more node shrinks as the graph grows.
  double previous_step = std::numeric_limits<double>::infinity();
  for (std::size_t n = 1; n <= 1000; ++n) {
    const double step = reward(true, 1.0, n, 0, 0.1, 2.0) - reward(true, 1.0, n + 1, 0, 0.1, 2.0);
    ASSERT_GT(step, 0.0);
    ASSERT_LT(step, previous_step);
    previous_step = step;
  }
}

TEST(RewardTest, PropertyMonotoneInNodesAndEta) {
  test::Rng rng(51);
  for (int trial = 0; trial < 2000; ++trial) {
    const double lambda = rng.uniform();
    const double gamma = 3.0 * rng.uniform();
    const double phi = rng.uniform();
    const std::size_t n = 1 + rng.below(500);
    const std::uint32_t eta = static_cast<std::uint32_t>(rng.below(10));
    const double base = reward(true, phi, n, eta, lambda, gamma);
    ASSERT_LE(reward(true, phi, n + 1, eta, lambda, gamma), base);
    ASSERT_LE(reward(true, phi, n, eta + 1, lambda, gamma), base);
    ASSERT_LE(reward(false, phi, n, eta, lambda, gamma), base);
  }
}

TEST(TrajectoryCheckTest, Rejects) {
  EXPECT_THROW(trajectory(0, 0, {}).check(), Error);
  EXPECT_THROW(trajectory(2, 0, {true}).check(), Error);
  EXPECT_NO_THROW(trajectory(1, 0, {true}).check());
}

TEST(LegalityTest, AssignmentMismatchAndCycle) {
  TaskGraph g = test::diamond();
  EXPECT_EQ(legality_vector(g), std::vector<bool>(4, true));
  g.assignments[id("v2")] = ExpertKind::kRag;
  EXPECT_FALSE(legality(g.vertex(id("v2")), g));
  EXPECT_TRUE(legality(g.vertex(id("v3")), g));

  TaskGraph cyclic = test::diamond();
  cyclic.vertices.at(id("v1")).parents = {id("v4")};
  cyclic.edges.insert({id("v4"), id("v1")});
  EXPECT_FALSE(legality(cyclic.vertex(id("v2")), cyclic));
}

TEST(ExactMatchGraderTest, NormalizesAnswers) {
  ExactMatchGrader g(std::map<std::string, std::string>{{"q", "The answer is 4"}});
  EXPECT_EQ(g.grade(trajectory(1, 0, {true}, "the answer is 4.")), 1.0);
  EXPECT_EQ(g.grade(trajectory(1, 0, {true}, "5")), 0.0);
  Trajectory none = trajectory(1, 0, {true});
  none.final_answer.reset();
  EXPECT_EQ(g.grade(none), 0.0);
  none = trajectory(1, 0, {true});
  none.query = "other";
  EXPECT_EQ(g.grade(none), 0.0);
}

TEST(SplitPropositionsTest, Sentences) {
  EXPECT_EQ(split_propositions("A is b. C is d! Why?"), (std::vector<std::string>{"A is b.", "C is d!", "Why?"}));
  EXPECT_EQ(split_propositions("pi is 3.14 exactly"), std::vector<std::string>{"pi is 3.14 exactly"});
  EXPECT_TRUE(split_propositions("").empty());
}

TEST(SupportedRatioTest, CitedAndFlagged) {
  const std::vector<Evidence> ev = {{"d1", "Paris is in France"}, {"d2", "x"}};
  ExprOutput draft{"Paris is in France [d1]. It is big [d9]. It has 2M people [d2].", {}};
  EXPECT_NEAR(grade_supported_ratio(draft, ev, 0.1), 2.0 / 3.0, 1e-12);
  draft.unsupported = {{"it has 2m people", false}};
  EXPECT_NEAR(grade_supported_ratio(draft, ev, 0.1), 1.0 / 3.0 - 0.1, 1e-12);
  draft.unsupported.push_back({"implied claim", true});
  draft.unsupported.push_back({"another", true});
  draft.unsupported.push_back({"more", true});
  EXPECT_EQ(grade_supported_ratio(draft, ev, 0.1), 0.0);
  EXPECT_EQ(grade_supported_ratio(ExprOutput{}, ev), 0.0);
}

TEST(SupportedRatioTest, PropertyBounded) {
  test::Rng rng(52);
  for (int trial = 0; trial < 500; ++trial) {
    ExprOutput d;
    const std::size_t n = rng.below(5);
    for (std::size_t i = 0; i < n; ++i) {
      d.draft += "claim " + std::to_string(i) + " [d" + std::to_string(rng.below(4)) + "]. ";
    }
    for (std::size_t i = 0; i < rng.below(3); ++i) d.unsupported.push_back({"claim " + std::to_string(i), false});
    const double s = grade_supported_ratio(d, {{"d0", ""}, {"d1", ""}}, rng.uniform());
    ASSERT_GE(s, 0.0);
    ASSERT_LE(s, 1.0);
  }
}

TEST(CriticConfigTest, Check) {
  CriticConfig c;
  EXPECT_NO_THROW(c.check());
  c.lambda = -1;
  EXPECT_THROW(c.check(), Error);
  c = CriticConfig{};
  c.grader = "vibes";
  EXPECT_THROW(c.check(), Error);
}

TEST(ScoreReportTest, Csv) {
  FixedGrader g(1.0);
  CriticConfig cfg;
  cfg.lambda = 0.0;
  const ScoreRow row = score(trajectory(2, 0, {true, true}), cfg, g);
  EXPECT_EQ(row.reward, 1.0);
  const std::string csv = score_report_csv({row});
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "id,phi,legality,node_count,eta,reward");
}

}  // namespace
}  // namespace healdag
