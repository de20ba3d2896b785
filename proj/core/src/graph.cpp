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

#include "healdag/graph.hpp"

#include <algorithm>
#include <queue>
#include <sstream>

#include "healdag/error.hpp"

namespace healdag {

std::string_view to_string(CauseKind kind) noexcept {
  switch (kind) {
    case CauseKind::kNone: return "NONE";
    case CauseKind::kExceptionFlag: return "EXCEPTION_FLAG";
    case CauseKind::kConfidenceFloor: return "CONFIDENCE_FLOOR";
    case CauseKind::kGlobalUncertainty: return "GLOBAL_UNCERTAINTY";
  }
  return "?";
}

std::optional<CauseKind> parse_cause_kind(std::string_view text) noexcept {
  for (auto kind : {CauseKind::kNone, CauseKind::kExceptionFlag, CauseKind::kConfidenceFloor,
                    CauseKind::kGlobalUncertainty}) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

std::string_view to_string(ViolationKind kind) noexcept {
  switch (kind) {
    case ViolationKind::kCycle: return "CYCLE";
    case ViolationKind::kDanglingParent: return "DANGLING_PARENT";
    case ViolationKind::kEdgeParentMismatch: return "EDGE_PARENT_MISMATCH";
    case ViolationKind::kInvalidExpertKind: return "INVALID_EXPERT_KIND";
    case ViolationKind::kDuplicateParent: return "DUPLICATE_PARENT";
    case ViolationKind::kNoSink: return "NO_SINK";
    case ViolationKind::kMultipleSinks: return "MULTIPLE_SINKS";
    case ViolationKind::kSinkNotDesignated: return "SINK_NOT_DESIGNATED";
    case ViolationKind::kFailedNodeHasDependents: return "FAILED_NODE_HAS_DEPENDENTS";
  }
  return "?";
}

std::string_view to_string(DeltaKind kind) noexcept {
  return kind == DeltaKind::kPatchInsert ? "PATCH_INSERT" : "SUBGRAPH_REPLACE";
}

TaskGraph TaskGraph::from_vertices(std::string query, const std::vector<Vertex>& vertices,
                                   NodeId sink) {
  TaskGraph graph;
  graph.query = std::move(query);
  graph.sink = std::move(sink);
  for (const auto& v : vertices) {
    for (const auto& p : v.parents) graph.edges.emplace(p, v.id);
    graph.assignments[v.id] = v.kind;
    graph.vertices.emplace(v.id, v);
  }
  return graph;
}

const Vertex& TaskGraph::vertex(const NodeId& id) const {
  auto it = vertices.find(id);
  if (it == vertices.end()) throw Error(ErrorCode::kUnknownNode, id.str());
  return it->second;
}

std::vector<NodeId> TaskGraph::children(const NodeId& id) const {
  std::vector<NodeId> out;
  for (auto it = edges.lower_bound(Edge{id, NodeId{}}); it != edges.end() && it->first == id; ++it) {
    out.push_back(it->second);
  }
  return out;
}

namespace {

// Kahn's algorithm over the edge set. Returns the vertices that could not be
// ordered (empty iff acyclic).
std::set<NodeId> unordered_after_kahn(const TaskGraph& graph) {
  std::map<NodeId, std::size_t> indegree;
  for (const auto& [id, _] : graph.vertices) indegree[id] = 0;
  for (const auto& [from, to] : graph.edges) {
    if (graph.contains(from) && graph.contains(to)) ++indegree[to];
  }
  std::queue<NodeId> ready;
  for (const auto& [id, deg] : indegree) {
    if (deg == 0) ready.push(id);
  }
  std::set<NodeId> remaining;
  for (const auto& [id, _] : graph.vertices) remaining.insert(id);
  while (!ready.empty()) {
    NodeId id = ready.front();
    ready.pop();
    remaining.erase(id);
    for (const auto& child : graph.children(id)) {
      if (!graph.contains(child)) continue;
      if (--indegree[child] == 0) ready.push(child);
    }
  }
  return remaining;
}

}  // namespace

bool on_cycle(const TaskGraph& graph, const NodeId& id) {
  std::set<NodeId> seen;
  std::vector<NodeId> stack = graph.children(id);
  while (!stack.empty()) {
    NodeId cur = stack.back();
    stack.pop_back();
    if (cur == id) return true;
    if (!seen.insert(cur).second) continue;
    for (auto& c : graph.children(cur)) stack.push_back(std::move(c));
  }
  return false;
}

ValidationReport validate(const TaskGraph& graph) {
  ValidationReport report;
  auto add = [&](ViolationKind kind, std::optional<NodeId> node, std::string detail) {
    report.push_back(Violation{kind, std::move(node), std::move(detail)});
  };

  std::set<Edge> derived;
  for (const auto& [id, v] : graph.vertices) {
    if (!is_valid(v.kind)) {
      add(ViolationKind::kInvalidExpertKind, id,
          "expert kind " + std::to_string(static_cast<int>(v.kind)) + " is not in the pool");
    }
    std::set<NodeId> seen;
    for (const auto& p : v.parents) {
      if (!seen.insert(p).second) add(ViolationKind::kDuplicateParent, id, "parent " + p.str());
      if (!graph.contains(p)) add(ViolationKind::kDanglingParent, id, "parent " + p.str() + " absent");
      derived.emplace(p, id);
    }
  }
  for (const auto& e : graph.edges) {
    if (!derived.count(e)) {
      add(ViolationKind::kEdgeParentMismatch, e.second,
          "edge " + e.first.str() + "->" + e.second.str() + " not in parent list");
    }
  }
  for (const auto& e : derived) {
    if (!graph.edges.count(e)) {
      add(ViolationKind::kEdgeParentMismatch, e.second,
          "parent " + e.first.str() + " of " + e.second.str() + " has no edge");
    }
  }

  auto remaining = unordered_after_kahn(graph);
  for (const auto& id : remaining) {
    if (on_cycle(graph, id)) {
      add(ViolationKind::kCycle, id, "vertex lies on a directed cycle");
      break;
    }
  }

  if (graph.vertices.empty()) {
    add(ViolationKind::kNoSink, std::nullopt, "graph has no vertices");
    return report;
  }
  std::vector<NodeId> sinks;
  for (const auto& [id, _] : graph.vertices) {
    const bool failed = graph.is_failed(id);
    std::size_t live_children = 0;
    for (const auto& c : graph.children(id)) {
      if (graph.contains(c) && !graph.is_failed(c)) ++live_children;
    }
    if (failed) {
      if (live_children > 0) add(ViolationKind::kFailedNodeHasDependents, id, "failed vertex still feeds live vertices");
      continue;
    }
    if (live_children == 0) sinks.push_back(id);
  }
  if (sinks.empty()) {
    add(ViolationKind::kNoSink, std::nullopt, "no live vertex without children");
  } else if (sinks.size() > 1) {
    std::ostringstream names;
    for (const auto& s : sinks) names << ' ' << s;
    add(ViolationKind::kMultipleSinks, sinks.front(), "sinks:" + names.str());
  }
  if (!graph.contains(graph.sink) || graph.is_failed(graph.sink) ||
      std::find(sinks.begin(), sinks.end(), graph.sink) == sinks.end()) {
    add(ViolationKind::kSinkNotDesignated, graph.sink, "designated sink " + graph.sink.str() + " is not the live sink");
  }
  return report;
}

bool has_violation(const ValidationReport& report, ViolationKind kind) {
  return std::any_of(report.begin(), report.end(), [&](const Violation& v) { return v.kind == kind; });
}

std::map<NodeId, std::size_t> topological_ranks(const TaskGraph& graph) {
  if (!unordered_after_kahn(graph).empty()) {
    throw Error(ErrorCode::kInvalidArgument, "topological rank requested on a cyclic graph");
  }
  std::map<NodeId, std::size_t> rank;
  // Repeated relaxation in Kahn order.
  std::map<NodeId, std::size_t> indegree;
  for (const auto& [id, _] : graph.vertices) indegree[id] = 0;
  for (const auto& [from, to] : graph.edges) {
    if (graph.contains(from) && graph.contains(to)) ++indegree[to];
  }
  std::queue<NodeId> ready;
  for (const auto& [id, deg] : indegree) {
    if (deg == 0) {
      ready.push(id);
      rank[id] = 0;
    }
  }
  while (!ready.empty()) {
    NodeId id = ready.front();
    ready.pop();
    for (const auto& child : graph.children(id)) {
      if (!graph.contains(child)) continue;
      rank[child] = std::max(rank[child], rank[id] + 1);
      if (--indegree[child] == 0) ready.push(child);
    }
  }
  return rank;
}

namespace {

void sort_by_rank(std::vector<NodeId>& ids, const std::map<NodeId, std::size_t>& rank) {
  std::sort(ids.begin(), ids.end(), [&](const NodeId& a, const NodeId& b) {
    auto ra = rank.at(a);
    auto rb = rank.at(b);
    if (ra != rb) return ra < rb;
    return a.str() < b.str();
  });
}

}  // namespace

std::vector<NodeId> topological_order(const TaskGraph& graph) {
  auto rank = topological_ranks(graph);
  std::vector<NodeId> ids;
  for (const auto& [id, _] : graph.vertices) ids.push_back(id);
  sort_by_rank(ids, rank);
  return ids;
}

std::vector<NodeId> ready_frontier(const TaskGraph& graph, const std::set<NodeId>& committed) {
  auto rank = topological_ranks(graph);
  std::vector<NodeId> ready;
  for (const auto& [id, v] : graph.vertices) {
    if (committed.count(id) || graph.is_failed(id)) continue;
    bool all = std::all_of(v.parents.begin(), v.parents.end(),
                           [&](const NodeId& p) { return committed.count(p) != 0; });
    if (all) ready.push_back(id);
  }
  sort_by_rank(ready, rank);
  return ready;
}

std::set<NodeId> downstream_closure(const TaskGraph& graph, const NodeId& root) {
  if (!graph.contains(root)) throw Error(ErrorCode::kUnknownNode, root.str());
  std::set<NodeId> closure{root};
  std::queue<NodeId> frontier;
  frontier.push(root);
  while (!frontier.empty()) {
    NodeId cur = frontier.front();
    frontier.pop();
    for (auto& child : graph.children(cur)) {
      if (closure.insert(child).second) frontier.push(std::move(child));
    }
  }
  return closure;
}

namespace {

[[noreturn]] void reject(const std::string& why) { throw Error(ErrorCode::kInvalidDelta, why); }

void insert_added(TaskGraph& next, const std::vector<Vertex>& added) {
  for (const auto& v : added) {
    if (next.contains(v.id)) reject("added vertex " + v.id.str() + " already exists");
    next.vertices.emplace(v.id, v);
    next.assignments[v.id] = v.kind;
    for (const auto& p : v.parents) next.edges.emplace(p, v.id);
  }
}

}  // namespace

TaskGraph apply_delta(const TaskGraph& graph, const GraphDelta& delta) {
  TaskGraph next = graph;
  next.version = graph.version + 1;

  std::set<NodeId> added_ids;
  for (const auto& v : delta.added) {
    if (!added_ids.insert(v.id).second) reject("duplicate added vertex " + v.id.str());
  }
  if (!delta.anchor) {
    if (!delta.removed.empty() || !delta.added.empty() || !delta.rewired_edges.empty()) {
      reject("non-empty delta without an anchor");
    }
    return next;
  }
  const NodeId& anchor = *delta.anchor;
  if (!graph.contains(anchor)) reject("anchor " + anchor.str() + " not in graph");

  if (delta.kind == DeltaKind::kPatchInsert) {
    if (!delta.removed.empty()) reject("PATCH_INSERT may not remove vertices");
    if (delta.added.size() != 1) reject("PATCH_INSERT adds exactly one vertex");
    if (graph.is_failed(anchor)) reject("anchor " + anchor.str() + " already patched");
    const Vertex& patch = delta.added.front();
    insert_added(next, delta.added);

    std::set<NodeId> rewired_children;
    for (const auto& [from, to] : delta.rewired_edges) {
      if (from != patch.id) reject("rewired edge must originate at the patch vertex");
      if (!graph.edges.count(Edge{anchor, to})) reject("rewired edge to " + to.str() + " has no matching anchor edge");
      auto& parents = next.vertices.at(to).parents;
      std::replace(parents.begin(), parents.end(), anchor, patch.id);
      next.edges.erase(Edge{anchor, to});
      next.edges.emplace(patch.id, to);
      rewired_children.insert(to);
    }
    for (const auto& child : graph.children(anchor)) {
      if (!rewired_children.count(child)) reject("out-edge " + anchor.str() + "->" + child.str() + " left dangling");
    }
    next.failed.insert(anchor);
    if (graph.sink == anchor) {
      if (delta.new_sink && *delta.new_sink != patch.id) reject("patched sink must hand over to the patch vertex");
      next.sink = patch.id;
    }
  } else {
    if (!delta.removed.count(anchor)) reject("SUBGRAPH_REPLACE must remove its anchor");
    auto closure = downstream_closure(graph, anchor);
    for (const auto& r : delta.removed) {
      if (!closure.count(r)) reject("removed vertex " + r.str() + " is outside the anchor's downstream closure");
    }
    for (const auto& r : delta.removed) {
      next.vertices.erase(r);
      next.failed.erase(r);
      next.assignments.erase(r);
    }
    for (auto it = next.edges.begin(); it != next.edges.end();) {
      if (delta.removed.count(it->first) || delta.removed.count(it->second)) {
        it = next.edges.erase(it);
      } else {
        ++it;
      }
    }
    insert_added(next, delta.added);
    for (const auto& [from, to] : delta.rewired_edges) {
      if (!added_ids.count(from)) reject("rewired edge must originate in the replacement subgraph");
      if (!next.contains(to) || added_ids.count(to)) reject("rewired edge must target a surviving vertex");
      next.vertices.at(to).parents.push_back(from);
      next.edges.emplace(from, to);
    }
    if (delta.removed.count(graph.sink)) {
      if (!delta.new_sink || !added_ids.count(*delta.new_sink)) reject("removed sink needs a replacement sink");
      next.sink = *delta.new_sink;
    }
  }

  auto report = validate(next);
  if (!report.empty()) {
    std::ostringstream why;
    why << "result fails validation:";
    for (const auto& v : report) why << ' ' << to_string(v.kind) << '(' << v.detail << ')';
    reject(why.str());
  }
  return next;
}

GraphHistory::GraphHistory(TaskGraph initial) { versions_.push_back(std::move(initial)); }

const TaskGraph& GraphHistory::at(std::size_t version) const {
  const auto base = versions_.front().version;
  if (version < base || version - base >= versions_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "no graph version " + std::to_string(version));
  }
  return versions_[version - base];
}

const TaskGraph& GraphHistory::apply(const GraphDelta& delta) {
  versions_.push_back(apply_delta(versions_.back(), delta));
  return versions_.back();
}

}  // namespace healdag
