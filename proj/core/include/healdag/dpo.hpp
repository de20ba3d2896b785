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

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "healdag/critic.hpp"

namespace healdag {

using FeatureVector = std::vector<double>;

/// Trajectory feature layout.
enum class Feature : std::size_t {
  kNodeCount = 0,
  kReconstructions,
  kRagCount,
  kLogicCount,
  kExprCount,
  kMeanConfidence,
  kDepth,
};
inline constexpr std::size_t kFeatureDim = 7;
inline constexpr std::array<std::string_view, kFeatureDim> kFeatureNames = {
    "node_count", "reconstructions", "rag_count", "logic_count", "expr_count", "mean_confidence", "depth"};

/// Unstandardized features of a trajectory's final topology.
FeatureVector raw_features(const Trajectory& trajectory);

/// Per-candidate-set statistics. A constant column has stddev 0 and
/// standardizes to 0.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> stddev;
  bool operator==(const Standardization&) const = default;
};

Standardization fit_standardization(const std::vector<FeatureVector>& raw);
FeatureVector standardize(const FeatureVector& raw, const Standardization& stats);

/// One query's candidates. `features` are standardized with `stats`, which
/// are frozen here so training never recomputes them.
struct CandidateSet {
  std::string query_id;
  std::vector<FeatureVector> raw;
  std::vector<FeatureVector> features;
  std::vector<double> rewards;
  std::vector<bool> vetoed;
  Standardization stats;

  /// Fills stats and features from raw.
  void freeze();
  bool operator==(const CandidateSet&) const = default;
};

struct PreferencePair {
  std::string query_id;
  std::size_t set = 0;
  std::size_t chosen = 0;
  std::size_t rejected = 0;
  double reward_gap = 0.0;
  bool operator==(const PreferencePair&) const = default;
};

struct PreferenceDataset {
  std::size_t dim = kFeatureDim;
  std::vector<CandidateSet> sets;
  std::vector<PreferencePair> pairs;
  bool operator==(const PreferenceDataset&) const = default;
};

struct PolicyParams {
  std::vector<double> weights;
  std::vector<double> reference_weights;

  static PolicyParams zeros(std::size_t dim) { return {std::vector<double>(dim), std::vector<double>(dim)}; }
  bool operator==(const PolicyParams&) const = default;
};

struct DpoConfig {
  double beta = 0.1;
  double epsilon = 0.05;
  double learning_rate = 0.05;
  std::uint32_t steps = 500;
  std::uint32_t candidates_per_query = 4;
  std::uint64_t seed = 0;
  // A vetoed trajectory may still serve as the rejected side of a pair.
  bool allow_vetoed_rejected = true;

  /// Throws kConfig.
  void check() const;
  bool operator==(const DpoConfig&) const = default;
};

/// w.f_i - logsumexp_j(w.f_j). Throws kInvalidArgument for fewer than two
/// candidates or an out-of-range index; logs a warning when every feature
/// vector is identical (the result is then uniform).
double policy_logprob(const std::vector<double>& weights, std::size_t candidate,
                      const std::vector<FeatureVector>& set);
std::vector<double> policy_logprobs(const std::vector<double>& weights, const std::vector<FeatureVector>& set);

/// beta * (log pi_theta - log pi_ref).
double implicit_reward(const PolicyParams& params, std::size_t candidate, const std::vector<FeatureVector>& set,
                       double beta);

/// Mean over pairs of -log sigmoid(r(chosen) - r(rejected)). Throws
/// kEmptyBatch.
double dpo_loss(const PolicyParams& params, const PreferenceDataset& data, double beta);

/// Analytic gradient of dpo_loss with respect to params.weights.
std::vector<double> dpo_gradient(const PolicyParams& params, const PreferenceDataset& data, double beta);

/// Every (higher, lower) pair per set whose reward gap is at least epsilon
/// and strictly positive. A vetoed candidate is never chosen.
std::vector<PreferencePair> build_pairs(const std::vector<CandidateSet>& sets, double epsilon,
                                        bool allow_vetoed_rejected = true);

struct TrainResult {
  PolicyParams params;
  double initial_loss = 0.0;
  // Loss after each step.
  std::vector<double> loss_curve;
};

/// Full-batch gradient descent from `init`. Throws kEmptyBatch on an empty
/// dataset and kDivergence naming the step once the loss is non-finite.
TrainResult train(const DpoConfig& config, const PreferenceDataset& data, PolicyParams init);

struct GradientCheck {
  std::vector<double> analytic;
  std::vector<double> numeric;
  double max_relative_error = 0.0;
  bool passed = false;
};

/// Central differences with step `h`. Relative error per coordinate is
/// |a - n| / max(|a|, |n|, floor).
GradientCheck gradient_check(const PolicyParams& params, const PreferenceDataset& data, double beta,
                             double h = 1e-5, double tolerance = 1e-4, double floor = 1e-6);

/// Random dataset of `queries` sets whose rewards fall with node_count:
/// chosen always has fewer nodes. Features are otherwise noise.
PreferenceDataset make_fewer_nodes_dataset(std::uint64_t seed, std::size_t queries, std::size_t candidates,
                                           double epsilon, std::size_t dim = kFeatureDim);

/// Random dataset with random rewards; for gradient checks.
PreferenceDataset make_random_dataset(std::uint64_t seed, std::size_t queries, std::size_t candidates,
                                      std::size_t dim = kFeatureDim);

nlohmann::ordered_json dataset_to_json(const PreferenceDataset& data);
/// Throws kConfig.
PreferenceDataset dataset_from_json(const nlohmann::json& j);

nlohmann::ordered_json dpo_config_to_json(const DpoConfig& config);
DpoConfig dpo_config_from_json(const nlohmann::json& j);

nlohmann::ordered_json training_report(const DpoConfig& config, const TrainResult& result);

}  // namespace healdag
