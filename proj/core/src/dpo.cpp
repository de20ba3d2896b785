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

#include "healdag/dpo.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "healdag/error.hpp"
#include "healdag/log.hpp"

namespace healdag {

using nlohmann::json;
using nlohmann::ordered_json;

FeatureVector raw_features(const Trajectory& trajectory) {
  FeatureVector f(kFeatureDim, 0.0);
  f[static_cast<std::size_t>(Feature::kNodeCount)] = static_cast<double>(trajectory.node_count);
  f[static_cast<std::size_t>(Feature::kReconstructions)] = static_cast<double>(trajectory.reconstructions);
  if (!trajectory.graph_history.empty()) {
    const TaskGraph& g = trajectory.graph_history.back();
    for (const auto& [_, v] : g.vertices) {
      switch (v.kind) {
        case ExpertKind::kRag: f[static_cast<std::size_t>(Feature::kRagCount)] += 1; break;
        case ExpertKind::kLogic: f[static_cast<std::size_t>(Feature::kLogicCount)] += 1; break;
        case ExpertKind::kExpr: f[static_cast<std::size_t>(Feature::kExprCount)] += 1; break;
      }
    }
    std::size_t depth = 0;
    for (const auto& [_, r] : topological_ranks(g)) depth = std::max(depth, r + 1);
    f[static_cast<std::size_t>(Feature::kDepth)] = static_cast<double>(depth);
  }
  if (!trajectory.feedbacks.empty()) {
    double sum = 0.0;
    for (const auto& fb : trajectory.feedbacks) sum += fb.confidence;
    f[static_cast<std::size_t>(Feature::kMeanConfidence)] = sum / static_cast<double>(trajectory.feedbacks.size());
  }
  return f;
}

Standardization fit_standardization(const std::vector<FeatureVector>& raw) {
  Standardization s;
  if (raw.empty()) return s;
  const std::size_t dim = raw.front().size();
  const double n = static_cast<double>(raw.size());
  s.mean.assign(dim, 0.0);
  s.stddev.assign(dim, 0.0);
  for (const auto& f : raw) {
    for (std::size_t k = 0; k < dim; ++k) s.mean[k] += f.at(k);
  }
  for (auto& m : s.mean) m /= n;
  for (const auto& f : raw) {
    for (std::size_t k = 0; k < dim; ++k) s.stddev[k] += (f[k] - s.mean[k]) * (f[k] - s.mean[k]);
  }
  for (auto& sd : s.stddev) sd = std::sqrt(sd / n);
  return s;
}

FeatureVector standardize(const FeatureVector& raw, const Standardization& stats) {
  FeatureVector out(raw.size(), 0.0);
  for (std::size_t k = 0; k < raw.size(); ++k) {
    out[k] = stats.stddev.at(k) > 0.0 ? (raw[k] - stats.mean.at(k)) / stats.stddev[k] : 0.0;
  }
  return out;
}

void CandidateSet::freeze() {
  stats = fit_standardization(raw);
  features.clear();
  for (const auto& f : raw) features.push_back(standardize(f, stats));
}

void DpoConfig::check() const {
  if (!(beta > 0.0)) throw Error(ErrorCode::kConfig, "dpo beta must be positive");
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::kConfig, "dpo epsilon must be >= 0");
  if (!(learning_rate >= 0.0)) throw Error(ErrorCode::kConfig, "dpo learning_rate must be >= 0");
  if (candidates_per_query < 2) throw Error(ErrorCode::kConfig, "dpo candidates_per_query must be >= 2");
}

namespace {

double dot(const std::vector<double>& w, const FeatureVector& f) {
  if (w.size() != f.size()) throw Error(ErrorCode::kInvalidArgument, "weight and feature dimensions differ");
  double s = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * f[k];
  return s;
}

double log_sigmoid(double x) {
  // -softplus(-x), stable for large |x|.
  return -(std::max(-x, 0.0) + std::log1p(std::exp(-std::abs(x))));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

const std::vector<FeatureVector>& set_of(const PreferenceDataset& data, const PreferencePair& p) {
  if (p.set >= data.sets.size()) throw Error(ErrorCode::kInvalidArgument, "pair references a missing set");
  return data.sets[p.set].features;
}

double pair_margin(const PolicyParams& params, const PreferenceDataset& data, const PreferencePair& p, double beta) {
  const auto& set = set_of(data, p);
  return implicit_reward(params, p.chosen, set, beta) - implicit_reward(params, p.rejected, set, beta);
}

// Uniform in [0, 1) from the top 53 bits.
double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double normal(std::mt19937_64& rng) {
  double u1 = uniform(rng);
  while (u1 <= 0.0) u1 = uniform(rng);
  const double u2 = uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

std::vector<double> policy_logprobs(const std::vector<double>& weights, const std::vector<FeatureVector>& set) {
  if (set.size() < 2) throw Error(ErrorCode::kInvalidArgument, "candidate set needs at least two members");
  if (std::all_of(set.begin(), set.end(), [&](const FeatureVector& f) { return f == set.front(); })) {
    log_warning("DEGENERATE_SET: all candidate features identical; policy is uniform");
  }
  std::vector<double> logits;
  logits.reserve(set.size());
  for (const auto& f : set) logits.push_back(dot(weights, f));
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - top);
  const double lse = top + std::log(sum);
  for (auto& l : logits) l -= lse;
  return logits;
}

double policy_logprob(const std::vector<double>& weights, std::size_t candidate, const std::vector<FeatureVector>& set) {
  if (candidate >= set.size()) throw Error(ErrorCode::kInvalidArgument, "candidate outside its set");
  return policy_logprobs(weights, set)[candidate];
}

double implicit_reward(const PolicyParams& params, std::size_t candidate, const std::vector<FeatureVector>& set,
                       double beta) {
  return beta * (policy_logprob(params.weights, candidate, set) - policy_logprob(params.reference_weights, candidate, set));
}

double dpo_loss(const PolicyParams& params, const PreferenceDataset& data, double beta) {
  if (data.pairs.empty()) throw Error(ErrorCode::kEmptyBatch, "no preference pairs");
  double sum = 0.0;
  for (const auto& p : data.pairs) sum += -log_sigmoid(pair_margin(params, data, p, beta));
  return sum / static_cast<double>(data.pairs.size());
}

std::vector<double> dpo_gradient(const PolicyParams& params, const PreferenceDataset& data, double beta) {
  if (data.pairs.empty()) throw Error(ErrorCode::kEmptyBatch, "no preference pairs");
  std::vector<double> grad(params.weights.size(), 0.0);
  // The logsumexp terms cancel within a set, so d(margin)/dw = beta (f_w - f_l).
  for (const auto& p : data.pairs) {
    const auto& set = set_of(data, p);
    const double scale = -beta * sigmoid(-pair_margin(params, data, p, beta));
    const auto& fw = set.at(p.chosen);
    const auto& fl = set.at(p.rejected);
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += scale * (fw[k] - fl[k]);
  }
  for (auto& g : grad) g /= static_cast<double>(data.pairs.size());
  return grad;
}

std::vector<PreferencePair> build_pairs(const std::vector<CandidateSet>& sets, double epsilon,
                                        bool allow_vetoed_rejected) {
  std::vector<PreferencePair> out;
  for (std::size_t s = 0; s < sets.size(); ++s) {
    const auto& set = sets[s];
    const auto vetoed = [&](std::size_t i) { return i < set.vetoed.size() && set.vetoed[i]; };
    for (std::size_t i = 0; i < set.rewards.size(); ++i) {
      if (vetoed(i)) continue;
      for (std::size_t j = 0; j < set.rewards.size(); ++j) {
        if (i == j) continue;
        const double gap = set.rewards[i] - set.rewards[j];
        if (!(gap > 0.0) || gap < epsilon) continue;
        if (vetoed(j) && !allow_vetoed_rejected) continue;
        out.push_back({set.query_id, s, i, j, gap});
      }
    }
  }
  return out;
}

TrainResult train(const DpoConfig& config, const PreferenceDataset& data, PolicyParams init) {
  config.check();
  TrainResult result;
  result.params = std::move(init);
  result.initial_loss = dpo_loss(result.params, data, config.beta);
  if (!std::isfinite(result.initial_loss)) throw Error(ErrorCode::kDivergence, "loss is non-finite at step 0");
  result.loss_curve.reserve(config.steps);
  for (std::uint32_t step = 1; step <= config.steps; ++step) {
    const auto grad = dpo_gradient(result.params, data, config.beta);
    for (std::size_t k = 0; k < grad.size(); ++k) result.params.weights[k] -= config.learning_rate * grad[k];
    const double loss = dpo_loss(result.params, data, config.beta);
    if (!std::isfinite(loss)) {
      throw Error(ErrorCode::kDivergence, "loss is non-finite at step " + std::to_string(step));
    }
    result.loss_curve.push_back(loss);
  }
  return result;
}

GradientCheck gradient_check(const PolicyParams& params, const PreferenceDataset& data, double beta, double h,
                             double tolerance, double floor) {
  GradientCheck check;
  check.analytic = dpo_gradient(params, data, beta);
  PolicyParams probe = params;
  for (std::size_t k = 0; k < params.weights.size(); ++k) {
    probe.weights[k] = params.weights[k] + h;
    const double up = dpo_loss(probe, data, beta);
    probe.weights[k] = params.weights[k] - h;
    const double down = dpo_loss(probe, data, beta);
    probe.weights[k] = params.weights[k];
    const double numeric = (up - down) / (2.0 * h);
    check.numeric.push_back(numeric);
    const double a = check.analytic[k];
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
    check.max_relative_error = std::max(check.max_relative_error, rel);
  }
  check.passed = check.max_relative_error <= tolerance;
  return check;
}

PreferenceDataset make_fewer_nodes_dataset(std::uint64_t seed, std::size_t queries, std::size_t candidates,
                                           double epsilon, std::size_t dim) {
  if (dim == 0 || candidates < 2) throw Error(ErrorCode::kInvalidArgument, "dataset needs dim >= 1, candidates >= 2");
  std::mt19937_64 rng(seed);
  PreferenceDataset data;
  data.dim = dim;
  for (std::size_t q = 0; q < queries; ++q) {
    CandidateSet set;
    set.query_id = "q" + std::to_string(q);
    for (std::size_t c = 0; c < candidates; ++c) {
      FeatureVector f(dim);
      f[0] = 3.0 + static_cast<double>(rng() % 10);
      for (std::size_t k = 1; k < dim; ++k) f[k] = normal(rng);
      set.raw.push_back(f);
      set.rewards.push_back(1.0 - 0.05 * f[0]);
      set.vetoed.push_back(false);
    }
    set.freeze();
    data.sets.push_back(std::move(set));
  }
  data.pairs = build_pairs(data.sets, epsilon);
  return data;
}

PreferenceDataset make_random_dataset(std::uint64_t seed, std::size_t queries, std::size_t candidates,
                                      std::size_t dim) {
  std::mt19937_64 rng(seed);
  PreferenceDataset data;
  data.dim = dim;
  for (std::size_t q = 0; q < queries; ++q) {
    CandidateSet set;
    set.query_id = "q" + std::to_string(q);
    for (std::size_t c = 0; c < candidates; ++c) {
      FeatureVector f(dim);
      for (auto& x : f) x = normal(rng);
      set.raw.push_back(f);
      set.rewards.push_back(uniform(rng));
      set.vetoed.push_back(false);
    }
    set.freeze();
    data.sets.push_back(std::move(set));
  }
  data.pairs = build_pairs(data.sets, 0.0);
  return data;
}

namespace {

ordered_json vector_json(const std::vector<double>& v) { return ordered_json(v); }

std::vector<double> vector_from(const json& j, std::size_t dim, const std::string& what) {
  if (!j.is_array() || j.size() != dim) throw Error(ErrorCode::kConfig, what + ": expected " + std::to_string(dim) + " numbers");
  std::vector<double> out;
  for (const auto& x : j) {
    if (!x.is_number()) throw Error(ErrorCode::kConfig, what + ": expected numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

}  // namespace

ordered_json dataset_to_json(const PreferenceDataset& data) {
  ordered_json j;
  j["dim"] = data.dim;
  j["feature_names"] = ordered_json::array();
  if (data.dim == kFeatureDim) {
    for (auto n : kFeatureNames) j["feature_names"].push_back(std::string(n));
  }
  j["sets"] = ordered_json::array();
  for (const auto& s : data.sets) {
    ordered_json sj;
    sj["query_id"] = s.query_id;
    sj["stats"] = {{"mean", vector_json(s.stats.mean)}, {"stddev", vector_json(s.stats.stddev)}};
    sj["candidates"] = ordered_json::array();
    for (std::size_t i = 0; i < s.raw.size(); ++i) {
      ordered_json c;
      c["raw"] = vector_json(s.raw[i]);
      c["features"] = vector_json(s.features[i]);
      c["reward"] = s.rewards[i];
      c["vetoed"] = i < s.vetoed.size() && s.vetoed[i];
      sj["candidates"].push_back(std::move(c));
    }
    j["sets"].push_back(std::move(sj));
  }
  j["pairs"] = ordered_json::array();
  for (const auto& p : data.pairs) {
    j["pairs"].push_back({{"query_id", p.query_id},
                          {"set", p.set},
                          {"chosen", p.chosen},
                          {"rejected", p.rejected},
                          {"reward_gap", p.reward_gap}});
  }
  return j;
}

PreferenceDataset dataset_from_json(const json& j) {
  PreferenceDataset data;
  try {
    data.dim = j.at("dim").get<std::size_t>();
    for (const auto& sj : j.at("sets")) {
      CandidateSet s;
      s.query_id = sj.at("query_id").get<std::string>();
      s.stats.mean = vector_from(sj.at("stats").at("mean"), data.dim, "stats.mean");
      s.stats.stddev = vector_from(sj.at("stats").at("stddev"), data.dim, "stats.stddev");
      for (const auto& c : sj.at("candidates")) {
        s.raw.push_back(vector_from(c.at("raw"), data.dim, "raw"));
        s.features.push_back(vector_from(c.at("features"), data.dim, "features"));
        s.rewards.push_back(c.at("reward").get<double>());
        s.vetoed.push_back(c.value("vetoed", false));
      }
      data.sets.push_back(std::move(s));
    }
    for (const auto& pj : j.at("pairs")) {
      PreferencePair p;
      p.query_id = pj.at("query_id").get<std::string>();
      p.set = pj.at("set").get<std::size_t>();
      p.chosen = pj.at("chosen").get<std::size_t>();
      p.rejected = pj.at("rejected").get<std::size_t>();
      p.reward_gap = pj.at("reward_gap").get<double>();
      if (p.set >= data.sets.size() || p.chosen >= data.sets[p.set].features.size() ||
          p.rejected >= data.sets[p.set].features.size()) {
        throw Error(ErrorCode::kConfig, "pair indexes outside its candidate set");
      }
      data.pairs.push_back(std::move(p));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("preference dataset: ") + e.what());
  }
  return data;
}

ordered_json dpo_config_to_json(const DpoConfig& config) {
  ordered_json j;
  j["beta"] = config.beta;
  j["epsilon"] = config.epsilon;
  j["learning_rate"] = config.learning_rate;
  j["steps"] = config.steps;
  j["candidates_per_query"] = config.candidates_per_query;
  j["seed"] = config.seed;
  j["allow_vetoed_rejected"] = config.allow_vetoed_rejected;
  return j;
}

DpoConfig dpo_config_from_json(const json& j) {
  DpoConfig c;
  if (!j.is_object()) throw Error(ErrorCode::kConfig, "dpo section must be an object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "beta") c.beta = v.get<double>();
      else if (key == "epsilon") c.epsilon = v.get<double>();
      else if (key == "learning_rate") c.learning_rate = v.get<double>();
      else if (key == "steps") c.steps = v.get<std::uint32_t>();
      else if (key == "candidates_per_query") c.candidates_per_query = v.get<std::uint32_t>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "allow_vetoed_rejected") c.allow_vetoed_rejected = v.get<bool>();
      else throw Error(ErrorCode::kConfig, "unknown dpo field '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("dpo section: ") + e.what());
  }
  c.check();
  return c;
}

ordered_json training_report(const DpoConfig& config, const TrainResult& result) {
  ordered_json j;
  j["config"] = dpo_config_to_json(config);
  j["initial_loss"] = result.initial_loss;
  j["final_loss"] = result.loss_curve.empty() ? result.initial_loss : result.loss_curve.back();
  j["loss_curve"] = result.loss_curve;
  j["weights"] = result.params.weights;
  j["reference_weights"] = result.params.reference_weights;
  if (result.params.weights.size() == kFeatureDim) {
    ordered_json named;
    for (std::size_t k = 0; k < kFeatureDim; ++k) named[std::string(kFeatureNames[k])] = result.params.weights[k];
    j["named_weights"] = std::move(named);
  }
  return j;
}

}  // namespace healdag
