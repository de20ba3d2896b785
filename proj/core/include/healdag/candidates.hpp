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

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "healdag/config.hpp"
#include "healdag/critic.hpp"
#include "healdag/dpo.hpp"
#include "healdag/planner.hpp"

namespace healdag {

/// Knobs for the seeded topology sampler.
struct TopologySampler {
  std::uint32_t min_rag = 1;
  std::uint32_t max_rag = 3;
  std::uint32_t min_logic = 0;
  std::uint32_t max_logic = 3;
  // Chance that the sampled sink carries the right answer.
  double answer_accuracy = 0.8;
};

/// Draws one plan for `query`: parallel RAG roots, an optional LOGIC chain
/// and an EXPR sink whose instruction is either `answer` or a wrong one.
/// Depends only on (seed, draw).
GraphFile sample_plan(const std::string& query, const std::string& answer, const TopologySampler& sampler,
                      std::uint64_t seed, std::uint64_t draw);

/// Reference policy stand-in: a ScriptedPlanner over a sampled plan.
class StochasticPlanner final : public PlannerPort {
 public:
  StochasticPlanner(const std::string& answer, TopologySampler sampler, std::uint64_t seed, std::uint64_t draw)
      : answer_(answer), sampler_(sampler), seed_(seed), draw_(draw) {}

  PlanProposal initial_plan(const std::string& query) override;
  PatchProposal propose_patch(const PatchRequest& request) override;
  SubgraphProposal propose_subgraph(const SubgraphRequest& request, IdAllocator& ids) override;

 private:
  std::string answer_;
  TopologySampler sampler_;
  std::uint64_t seed_;
  std::uint64_t draw_;
  std::optional<ScriptedPlanner> inner_;
};

struct CandidateGenConfig {
  std::size_t queries = 8;
  TopologySampler sampler;
  // Synthetic experts fail this fraction of calls with an exception.
  double expert_failure_rate = 0.1;
  // Candidates per query, epsilon, seed and vetoed-pair policy come from
  // engine.dpo; the critic weights from engine.critic.
  EngineConfig engine = EngineConfig::defaults();
};

/// Synthetic query i is "synthetic query <i>" with answer "answer <i>".
std::map<std::string, std::string> synthetic_answer_key(std::size_t queries);

struct GeneratedCandidates {
  PreferenceDataset dataset;
  // Parallel to dataset.sets, one trajectory per candidate.
  std::vector<std::vector<Trajectory>> trajectories;
  std::vector<ScoreRow> scores;
};

/// Runs the orchestrator once per candidate with synthetic experts, scores
/// every trajectory with an exact-match critic over the synthetic key,
/// freezes per-set standardization and builds margin-filtered pairs.
GeneratedCandidates generate_candidates(const CandidateGenConfig& config);

}  // namespace healdag
