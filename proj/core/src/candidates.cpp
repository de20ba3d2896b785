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

#include "healdag/candidates.hpp"

#include <random>

#include "healdag/error.hpp"
#include "healdag/fault_expert.hpp"
#include "healdag/orchestrator.hpp"

namespace healdag {

namespace {

std::uint32_t pick(std::mt19937_64& rng, std::uint32_t lo, std::uint32_t hi) {
  return lo + static_cast<std::uint32_t>(rng() % (static_cast<std::uint64_t>(hi - lo) + 1));
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::mt19937_64 seeded(std::uint64_t seed, std::uint64_t draw) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(draw), static_cast<std::uint32_t>(draw >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

GraphFile sample_plan(const std::string& query, const std::string& answer, const TopologySampler& sampler,
                      std::uint64_t seed, std::uint64_t draw) {
  if (sampler.min_rag == 0 || sampler.min_rag > sampler.max_rag || sampler.min_logic > sampler.max_logic) {
    throw Error(ErrorCode::kInvalidArgument, "topology sampler ranges are empty");
  }
  auto rng = seeded(seed, draw);
  const std::uint32_t rag = pick(rng, sampler.min_rag, sampler.max_rag);
  const std::uint32_t logic = pick(rng, sampler.min_logic, sampler.max_logic);
  const bool right = unit(rng) < sampler.answer_accuracy;

  std::vector<Vertex> vertices;
  std::vector<NodeId> roots;
  for (std::uint32_t i = 1; i <= rag; ++i) {
    NodeId id("r" + std::to_string(i));
    vertices.push_back({id, ExpertKind::kRag, "Retrieve fact " + std::to_string(i) + " for: " + query, {}});
    roots.push_back(id);
  }
  std::vector<NodeId> last = roots;
  for (std::uint32_t i = 1; i <= logic; ++i) {
    NodeId id("l" + std::to_string(i));
    vertices.push_back({id, ExpertKind::kLogic, "Deduce step " + std::to_string(i), last});
    last = {id};
  }
  NodeId sink("x1");
  vertices.push_back({sink, ExpertKind::kExpr, right ? answer : "not " + answer, last});

  GraphFile file;
  file.graph = TaskGraph::from_vertices(query, vertices, sink);
  return file;
}

PlanProposal StochasticPlanner::initial_plan(const std::string& query) {
  inner_.emplace(sample_plan(query, answer_, sampler_, seed_, draw_));
  return inner_->initial_plan(query);
}

PatchProposal StochasticPlanner::propose_patch(const PatchRequest& request) {
  if (!inner_) throw Error(ErrorCode::kInvalidArgument, "patch requested before planning");
  return inner_->propose_patch(request);
}

SubgraphProposal StochasticPlanner::propose_subgraph(const SubgraphRequest& request, IdAllocator& ids) {
  if (!inner_) throw Error(ErrorCode::kInvalidArgument, "subgraph requested before planning");
  return inner_->propose_subgraph(request, ids);
}

std::map<std::string, std::string> synthetic_answer_key(std::size_t queries) {
  std::map<std::string, std::string> key;
  for (std::size_t i = 0; i < queries; ++i) key["synthetic query " + std::to_string(i)] = "answer " + std::to_string(i);
  return key;
}

GeneratedCandidates generate_candidates(const CandidateGenConfig& config) {
  config.engine.check();
  const DpoConfig& dpo = config.engine.dpo;
  if (dpo.candidates_per_query < 2) throw Error(ErrorCode::kConfig, "need at least two candidates per query");

  const auto key = synthetic_answer_key(config.queries);
  const ExactMatchGrader grader(key);

  GeneratedCandidates out;
  std::size_t q = 0;
  for (const auto& [query, answer] : key) {
    CandidateSet set;
    set.query_id = "q" + std::to_string(q);
    std::vector<Trajectory> trajectories;
    for (std::uint32_t c = 0; c < dpo.candidates_per_query; ++c) {
      const std::uint64_t draw = q * dpo.candidates_per_query + c;
      StochasticPlanner planner(answer, config.sampler, dpo.seed, draw);

      FaultProfile profile = config.engine.experts.fault;
      profile.failure_rate = config.expert_failure_rate;
      profile.mode = FaultMode::kException;
      profile.seed = dpo.seed ^ (draw * 0x9E3779B97F4A7C15ULL);
      ExpertRegistry experts;
      for (auto kind : kAllExpertKinds) experts.add(std::make_shared<FaultInjectingExpert>(kind, profile));

      RunResult result = run(query, planner, experts, config.engine);
      Trajectory traj = trajectory_of(result, query, set.query_id + "/" + std::to_string(c));
      ScoreRow row = score(traj, config.engine.critic, grader);

      set.raw.push_back(raw_features(traj));
      set.rewards.push_back(row.reward);
      set.vetoed.push_back(!row.legal);
      out.scores.push_back(row);
      trajectories.push_back(std::move(traj));
    }
    set.freeze();
    out.dataset.sets.push_back(std::move(set));
    out.trajectories.push_back(std::move(trajectories));
    ++q;
  }
  out.dataset.pairs = build_pairs(out.dataset.sets, dpo.epsilon, dpo.allow_vetoed_rejected);
  return out;
}

}  // namespace healdag
