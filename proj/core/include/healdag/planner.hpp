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

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include <nlohmann/json.hpp>

#include "healdag/reconstructor.hpp"

namespace healdag {

struct ScriptedSubgraph {
  std::vector<Vertex> vertices;
  std::optional<NodeId> sink;
  std::set<Edge> extra_edges;
  bool operator==(const ScriptedSubgraph&) const = default;
};

/// Canned planner behaviour carried in the graph file's `planner` section.
struct PlannerScript {
  PlannerCharge plan_charge;
  PlannerCharge patch_charge;
  PlannerCharge subgraph_charge;
  // Keyed by the failed node (patches) or truncation root (subgraphs).
  std::map<NodeId, Vertex> patches;
  std::map<NodeId, ScriptedSubgraph> subgraphs;
  std::set<NodeId> refuse_patch;
  std::set<NodeId> refuse_subgraph;
  bool refuse_all_patches = false;
  bool refuse_all_subgraphs = false;

  bool operator==(const PlannerScript&) const = default;
};

/// Graph file: {query, sink, vertices: [{id, expert_kind, instruction,
/// parents}], assignments?, planner?}.
struct GraphFile {
  TaskGraph graph;
  PlannerScript planner;
  bool operator==(const GraphFile&) const = default;
};

/// Throws kConfig on malformed input.
GraphFile graph_file_from_json(const nlohmann::json& j);
nlohmann::ordered_json graph_file_to_json(const GraphFile& file);
GraphFile load_graph_file(const std::filesystem::path& path);

/// Replays a fixed plan. Without a scripted entry, a patch re-derives the
/// failed node's task with the same expert and a subgraph clones the
/// removed live region under fresh ids.
class ScriptedPlanner final : public PlannerPort {
 public:
  explicit ScriptedPlanner(GraphFile file) : file_(std::move(file)) {}

  PlanProposal initial_plan(const std::string& query) override;
  PatchProposal propose_patch(const PatchRequest& request) override;
  SubgraphProposal propose_subgraph(const SubgraphRequest& request, IdAllocator& ids) override;

 private:
  GraphFile file_;
};

/// Clones the live part of `removed` with next_rebuild ids, rewiring
/// internal parents to the clones. Shared by the scripted and stochastic
/// planners.
ScriptedSubgraph clone_region(const TaskGraph& graph, const std::set<NodeId>& removed, IdAllocator& ids);

}  // namespace healdag
