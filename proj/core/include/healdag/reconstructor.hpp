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
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "healdag/expert.hpp"
#include "healdag/graph.hpp"
#include "healdag/repository.hpp"

namespace healdag {

enum class RepairAction { kPatch, kReconstruct, kFallback };

std::string_view to_string(RepairAction action) noexcept;
std::optional<RepairAction> parse_repair_action(std::string_view text) noexcept;

/// eta counts every repair attempt, patch or reconstruction.
struct RepairBudget {
  std::uint32_t eta = 0;
  std::uint32_t omega_max = 3;

  bool exhausted() const { return eta >= omega_max; }
  /// Throws kInvalidArgument when already exhausted.
  void charge();
};

/// PATCH for an exception or confidence-floor cause on a node without a
/// failed patch behind it; RECONSTRUCT for global uncertainty or a node
/// whose patch already failed; FALLBACK once eta reaches omega_max.
/// Throws kInvalidArgument for a NONE cause.
RepairAction decide_repair(const SuspensionCause& cause, bool patch_already_failed, const RepairBudget& budget);

/// Cost of one planner call, charged to the PLAN adapter.
struct PlannerCharge {
  std::uint64_t tokens_prompt = 0;
  std::uint64_t tokens_completion = 0;
  double wall_time = 0.0;

  std::uint64_t tokens() const { return tokens_prompt + tokens_completion; }
  bool operator==(const PlannerCharge&) const = default;
};

struct PlanProposal {
  std::optional<TaskGraph> graph;
  PlannerCharge charge;
};

struct PatchRequest {
  TaskGraph graph;
  Vertex failed;
  SuspensionCause cause;
  std::optional<NodeFeedback> failed_feedback;
};

struct PatchProposal {
  // Only kind and instruction are used; id and parents are assigned by the
  // engine. Empty means refusal.
  std::optional<Vertex> vertex;
  PlannerCharge charge;
};

struct SubgraphRequest {
  TaskGraph graph;
  NodeId root;
  std::set<NodeId> removed;
  std::string query;
  // Committed outputs of surviving parents of the removed region.
  std::vector<ContextPayload> upstream;
  SuspensionCause cause;
};

struct SubgraphProposal {
  // Empty means refusal.
  std::optional<std::vector<Vertex>> vertices;
  // Required when the removed region holds the sink.
  std::optional<NodeId> sink;
  // Extra edges from new vertices into survivors.
  std::set<Edge> extra_edges;
  PlannerCharge charge;
};

/// Generates plans and repair material. Decisions stay in the engine.
class PlannerPort {
 public:
  virtual ~PlannerPort() = default;
  virtual PlanProposal initial_plan(const std::string& query) = 0;
  virtual PatchProposal propose_patch(const PatchRequest& request) = 0;
  /// New vertex ids must come from `ids` or otherwise be fresh.
  virtual SubgraphProposal propose_subgraph(const SubgraphRequest& request, IdAllocator& ids) = 0;
};

enum class ProposalOutcome { kOk, kRefused, kInvalid };

struct DeltaProposal {
  ProposalOutcome outcome = ProposalOutcome::kOk;
  std::optional<GraphDelta> delta;
  std::optional<RepairContext> repair_context;
  PlannerCharge charge;
  std::string diagnostic;
};

/// Patch vertex inherits the failed node's parents; every out-edge of the
/// failed node is rewired onto it. Its kind must match the failed node,
/// except that RAG is accepted for a CONFIDENCE_FLOOR cause.
DeltaProposal build_patch_delta(const TaskGraph& graph, const NodeId& failed, const SuspensionCause& cause,
                                PlannerPort& planner, const ArtifactRepository& repo, IdAllocator& ids);

/// Removes the downstream closure of `failed` and splices in the planner's
/// subgraph. The replacement may hold at most |closure| + size_slack
/// vertices.
DeltaProposal build_reconstruct_delta(const TaskGraph& graph, const NodeId& failed, const SuspensionCause& cause,
                                      PlannerPort& planner, const ArtifactRepository& repo, IdAllocator& ids,
                                      std::size_t size_slack);

}  // namespace healdag
