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

#include "healdag/dpo.hpp"
#include "healdag/error.hpp"
#include "test_support.hpp"

namespace healdag {
namespace {

// Direct transcription of the per-pair objective, used as an oracle.
double oracle_loss(const PolicyParams& p, const PreferenceDataset& d, double beta) {
  auto logprob = [](const std::vector<double>& w, std::size_t i, const std::vector<FeatureVector>& set) {
    std::vector<double> s;
    for (const auto& f : set) {
      double dot = 0.0;
      for (std::size_t k = 0; k < f.size(); ++k) dot += w[k] * f[k];
      s.push_back(dot);
    }
    double z = 0.0;
    for (double v : s) z += std::exp(v);
    return s[i] - std::log(z);
  };
  double total = 0.0;
  for (const auto& pair : d.pairs) {
    const auto& set = d.sets[pair.set].features;
    const double rc = beta * (logprob(p.weights, pair.chosen, set) - logprob(p.reference_weights, pair.chosen, set));
    const double rr =
        beta * (logprob(p.weights, pair.rejected, set) - logprob(p.reference_weights, pair.rejected, set));
    total += -std::log(1.0 / (1.0 + std::exp(-(rc - rr))));
  }
  return total / static_cast<double>(d.pairs.size());
}

PolicyParams random_params(test::Rng& rng, std::size_t dim, double scale) {
  PolicyParams p = PolicyParams::zeros(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    p.weights[k] = scale * (2.0 * rng.uniform() - 1.0);
    p.reference_weights[k] = scale * (2.0 * rng.uniform() - 1.0);
  }
  return p;
}

TEST(PolicyTest, LogprobsNormalize) {
  const std::vector<FeatureVector> set = {{1, 0}, {0, 1}, {1, 1}};
  const auto lp = policy_logprobs({0.3, -0.7}, set);
  double z = 0.0;
  for (double v : lp) z += std::exp(v);
  EXPECT_NEAR(z, 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(lp[1], policy_logprob({0.3, -0.7}, 1, set));
}

TEST(PolicyTest, LargeScoresStayFinite) {
  const std::vector<FeatureVector> set = {{1000}, {-1000}};
  const auto lp = policy_logprobs({1.0}, set);
  EXPECT_NEAR(lp[0], 0.0, 1e-12);
  EXPECT_TRUE(std::isfinite(lp[1]));
}

TEST(PolicyTest, Errors) {
  EXPECT_THROW(policy_logprob({1.0}, 0, {{1.0}}), Error);
  EXPECT_THROW(policy_logprob({1.0}, 2, {{1.0}, {2.0}}), Error);
}

TEST(DpoLossTest, EqualsLn2AtReference) {
  test::Rng rng(61);
  for (int seed = 0; seed < 50; ++seed) {
    const auto d = make_random_dataset(seed, 3 + rng.below(5), 2 + rng.below(4));
    if (d.pairs.empty()) continue;
    PolicyParams p = random_params(rng, d.dim, 2.0);
    p.weights = p.reference_weights;
    EXPECT_NEAR(dpo_loss(p, d, 0.1 + rng.uniform()), std::log(2.0), 1e-12);
  }
}

TEST(DpoLossTest, MatchesOracle) {
  test::Rng rng(62);
  for (int seed = 0; seed < 50; ++seed) {
    const auto d = make_random_dataset(100 + seed, 4, 3);
    if (d.pairs.empty()) continue;
    const PolicyParams p = random_params(rng, d.dim, 1.0);
    const double beta = 0.05 + rng.uniform();
    EXPECT_NEAR(dpo_loss(p, d, beta), oracle_loss(p, d, beta), 1e-10);
  }
}

TEST(DpoLossTest, EmptyBatch) {
  PreferenceDataset d;
  try {
    dpo_loss(PolicyParams::zeros(kFeatureDim), d, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyBatch);
  }
}

TEST(DpoGradientTest, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto d = make_random_dataset(seed, 4, 4);
    if (d.pairs.empty()) continue;
    test::Rng rng(seed + 1000);
    const auto check = gradient_check(random_params(rng, d.dim, 0.5), d, 0.5);
    EXPECT_TRUE(check.passed) << "seed " << seed << " err " << check.max_relative_error;
  }
}

TEST(BuildPairsTest, MarginAndVeto) {
  CandidateSet s;
  s.query_id = "q";
  s.raw = {{1}, {2}, {3}};
  s.rewards = {0.5, 0.52, 0.9};
  s.vetoed = {false, false, true};
  s.freeze();
  auto pairs = build_pairs({s}, 0.05);
  // (0.9 vetoed never chosen) so only pairs led by 0.52 or 0.5 with gap >= 0.05: none.
  EXPECT_TRUE(pairs.empty());

  s.vetoed = {false, false, false};
  pairs = build_pairs({s}, 0.05);
  ASSERT_EQ(pairs.size(), 2u);
  for (const auto& p : pairs) EXPECT_EQ(p.chosen, 2u);

  s.rewards = {0.1, 0.5, 0.9};
  s.vetoed = {true, false, false};
  EXPECT_EQ(build_pairs({s}, 0.05, true).size(), 3u);
  EXPECT_EQ(build_pairs({s}, 0.05, false).size(), 1u);
}

TEST(BuildPairsTest, TiesNeverPair) {
  CandidateSet s;
  s.raw = {{1}, {2}};
  s.rewards = {0.4, 0.4};
  s.vetoed = {false, false};
  s.freeze();
  EXPECT_TRUE(build_pairs({s}, 0.0).empty());
}

TEST(StandardizationTest, ConstantColumnIsZero) {
  const auto stats = fit_standardization({{1, 5}, {3, 5}});
  EXPECT_EQ(stats.mean, (std::vector<double>{2, 5}));
  EXPECT_EQ(stats.stddev[1], 0.0);
  const auto f = standardize({3, 5}, stats);
  EXPECT_GT(f[0], 0.0);
  EXPECT_EQ(f[1], 0.0);
}

TEST(StandardizationTest, FrozenStatsAreKept) {
  CandidateSet s;
  s.raw = {{1, 2}, {3, 4}};
  s.rewards = {0, 1};
  s.vetoed = {false, false};
  s.freeze();
  const auto stats = s.stats;
  const auto features = s.features;
  s.raw.push_back({100, 100});
  EXPECT_EQ(s.stats, stats);
  EXPECT_EQ(s.features, features);
}

TEST(TrainTest, PrefersFewerNodes) {
  const auto d = make_fewer_nodes_dataset(7, 16, 4, 0.05);
  DpoConfig cfg;
  cfg.beta = 0.5;
  cfg.learning_rate = 0.5;
  cfg.steps = 500;
  const auto r = train(cfg, d, PolicyParams::zeros(d.dim));
  EXPECT_NEAR(r.initial_loss, std::log(2.0), 1e-12);
  EXPECT_LT(r.params.weights[static_cast<std::size_t>(Feature::kNodeCount)], 0.0);
  EXPECT_LE(r.loss_curve.back(), 0.5 * r.initial_loss);
  EXPECT_EQ(r.loss_curve.size(), 500u);
}

TEST(TrainTest, DivergenceNamesStep) {
  const auto d = make_fewer_nodes_dataset(7, 4, 4, 0.05);
  DpoConfig cfg;
  cfg.beta = 1e300;
  cfg.learning_rate = 1e300;
  cfg.steps = 5;
  try {
    train(cfg, d, PolicyParams::zeros(d.dim));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDivergence);
    EXPECT_NE(std::string(e.what()).find("step"), std::string::npos);
  }
}

TEST(DatasetIoTest, RoundTrip) {
  const auto d = make_random_dataset(3, 3, 3);
  EXPECT_EQ(dataset_from_json(nlohmann::json::parse(dataset_to_json(d).dump())), d);
  EXPECT_THROW(dataset_from_json(nlohmann::json::parse(R"({"sets": 3})")), Error);
}

TEST(DpoConfigTest, Check) {
  DpoConfig c;
  EXPECT_NO_THROW(c.check());
  c.beta = 0;
  EXPECT_THROW(c.check(), Error);
  c = DpoConfig{};
  c.candidates_per_query = 1;
  EXPECT_THROW(c.check(), Error);
  EXPECT_EQ(dpo_config_from_json(nlohmann::json::parse(dpo_config_to_json(DpoConfig{}).dump())), DpoConfig{});
}

}  // namespace
}  // namespace healdag
