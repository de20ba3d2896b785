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
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "healdag/node_id.hpp"
#include "healdag/suspension.hpp"

namespace healdag {

struct Vertex {
  NodeId id;
  ExpertKind kind = ExpertKind::kLogic;
  std::string instruction;
  // Ordered; payloads are handed to the expert in this order.
  std::vector<NodeId> parents;

  bool operator==(const Vertex&) const = default;
};

/// (from, to): `from` is a parent of `to`.
using Edge = std::pair<NodeId, NodeId>;

/// One version of the task graph. Values are treated as immutable snapshots;
/// every mutation goes through apply_delta and yields version + 1.
///
/// `failed` holds vertices retained for audit after a patch replaced them.
/// They never re-enter the frontier and must have no dependents.
/// `assignments` is the plan's declared expert table, consulted by the critic.
struct TaskGraph {
  std::uint64_t version = 0;
  std::string query;
  std::map<NodeId, Vertex> vertices;
  std::set<Edge> edges;
  NodeId sink;
  std::set<NodeId> failed;
  std::map<NodeId, ExpertKind> assignments;

  /// Derives edges from the parent lists and records each vertex's kind in
  /// the assignment table.
  static TaskGraph from_vertices(std::string query, const std::vector<Vertex>& vertices,
                                 NodeId sink);

  bool contains(const NodeId& id) const { return vertices.count(id) != 0; }
  bool is_failed(const NodeId& id) const { return failed.count(id) != 0; }
  const Vertex& vertex(const NodeId& id) const;
  std::vector<NodeId> children(const NodeId& id) const;
  std::size_t live_size() const { return vertices.size() - failed.size(); }

  bool operator==(const TaskGraph&) const = default;
};

enum class ViolationKind {
  kCycle,
  kDanglingParent,
  kEdgeParentMismatch,
  kInvalidExpertKind,
  kDuplicateParent,
  kNoSink,
  kMultipleSinks,
  kSinkNotDesignated,
  kFailedNodeHasDependents,
};

std::string_view to_string(ViolationKind kind) noexcept;

struct Violation {
  ViolationKind kind;
  std::optional<NodeId> node;
  std::string detail;
};

using ValidationReport = std::vector<Violation>;

/// Empty iff the graph is acyclic, edges and parent lists agree, every expert
/// kind is in the pool and exactly one live sink exists and is the
/// designated one.
ValidationReport validate(const TaskGraph& graph);

bool has_violation(const ValidationReport& report, ViolationKind kind);

/// Longest-path depth from the roots. Requires an acyclic graph.
std::map<NodeId, std::size_t> topological_ranks(const TaskGraph& graph);

/// All vertices ordered by (rank, id).
std::vector<NodeId> topological_order(const TaskGraph& graph);

/// Uncommitted live vertices whose parents are all committed, ordered by
/// (rank, id).
std::vector<NodeId> ready_frontier(const TaskGraph& graph, const std::set<NodeId>& committed);

/// `root` plus every vertex reachable from it. Throws kUnknownNode.
std::set<NodeId> downstream_closure(const TaskGraph& graph, const NodeId& root);

/// True iff `id` lies on a directed cycle. Works on unvalidated graphs.
bool on_cycle(const TaskGraph& graph, const NodeId& id);

enum class DeltaKind { kPatchInsert, kSubgraphReplace };

std::string_view to_string(DeltaKind kind) noexcept;

/// A topology transformation.
///
/// kPatchInsert: `anchor` is the failed node, `added` holds the single patch
/// vertex and `rewired_edges` moves every out-edge of the anchor onto it. The
/// anchor stays in the graph, marked failed. Nothing may be removed.
///
/// kSubgraphReplace: `removed` must contain `anchor` and lie inside its
/// downstream closure. `added` is the replacement subgraph; `rewired_edges`
/// may attach added vertices as extra parents of survivors.
///
/// `new_sink` names the replacement sink whenever the old sink is removed or
/// patched. An empty delta only bumps the version.
struct GraphDelta {
  DeltaKind kind = DeltaKind::kPatchInsert;
  std::optional<NodeId> anchor;
  std::set<NodeId> removed;
  std::vector<Vertex> added;
  std::set<Edge> rewired_edges;
  std::optional<NodeId> new_sink;
  SuspensionCause trigger;
};

/// Throws kInvalidDelta when the delta breaks its own contract or the result
/// would fail validation.
TaskGraph apply_delta(const TaskGraph& graph, const GraphDelta& delta);

/// Append-only version history; earlier versions are never touched.
class GraphHistory {
 public:
  explicit GraphHistory(TaskGraph initial);

  const TaskGraph& current() const { return versions_.back(); }
  const TaskGraph& at(std::size_t version) const;
  std::size_t size() const { return versions_.size(); }
  const TaskGraph& apply(const GraphDelta& delta);
  std::vector<TaskGraph> snapshot() const { return {versions_.begin(), versions_.end()}; }

 private:
  std::deque<TaskGraph> versions_;
};

}  // namespace healdag
