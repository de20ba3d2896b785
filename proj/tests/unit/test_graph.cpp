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

#include <algorithm>
#include <deque>

#include <gtest/gtest.h>

#include "healdag/error.hpp"
#include "healdag/graph.hpp"
#include "healdag/graph_io.hpp"
#include "test_support.hpp"

namespace healdag {
namespace {

using test::chain;
using test::diamond;
using test::id;
using test::vx;

std::vector<NodeId> ids(std::initializer_list<const char*> names) {
  std::vector<NodeId> out;
  for (auto n : names) out.push_back(id(n));
  return out;
}

// Brute-force reachability over the edge list.
std::set<NodeId> bfs_closure(const TaskGraph& g, const NodeId& root) {
  std::set<NodeId> seen{root};
  std::deque<NodeId> todo{root};
  while (!todo.empty()) {
    NodeId cur = todo.front();
    todo.pop_front();
    for (const auto& [from, to] : g.edges) {
      if (from == cur && seen.insert(to).second) todo.push_back(to);
    }
  }
  return seen;
}

// Every uncommitted live vertex whose parents are all committed.
std::set<NodeId> brute_frontier(const TaskGraph& g, const std::set<NodeId>& committed) {
  std::set<NodeId> out;
  for (const auto& [vid, v] : g.vertices) {
    if (committed.count(vid) || g.is_failed(vid)) continue;
    if (std::all_of(v.parents.begin(), v.parents.end(), [&](const NodeId& p) { return committed.count(p) > 0; })) {
      out.insert(vid);
    }
  }
  return out;
}

TEST(NodeIdTest, RenderingRoundTrips) {
  for (const char* s : {"v2", "v2_patch", "v2_patch3", "v7_r2", "fact_lookup"}) {
    EXPECT_EQ(NodeId::parse(s).str(), s);
  }
  NodeId p = NodeId::parse("v2_patch");
  EXPECT_TRUE(p.patch);
  EXPECT_EQ(p.name, "v2");
}

TEST(NodeIdTest, AllocatorNeverCollides) {
  IdAllocator ids;
  ids.observe(id("v2"));
  ids.observe(id("v2_patch"));
  NodeId a = ids.next_patch(id("v2"));
  NodeId b = ids.next_patch(id("v2"));
  EXPECT_NE(a, id("v2_patch"));
  EXPECT_NE(a, b);
  EXPECT_TRUE(a.patch);
}

TEST(ValidateTest, ChainIsClean) { EXPECT_TRUE(validate(chain(4)).empty()); }

TEST(ValidateTest, TwoCycleReported) {
  TaskGraph g = chain(2);
  g.vertices[id("v1")].parents.push_back(id("v2"));
  g.edges.insert({id("v2"), id("v1")});
  EXPECT_TRUE(has_violation(validate(g), ViolationKind::kCycle));
}

TEST(ValidateTest, DanglingParentReported) {
  TaskGraph g = chain(3);
  g.vertices[id("v2")].parents.push_back(id("ghost"));
  g.edges.insert({id("ghost"), id("v2")});
  EXPECT_TRUE(has_violation(validate(g), ViolationKind::kDanglingParent));
}

TEST(ValidateTest, EdgeParentMismatchReported) {
  TaskGraph g = chain(3);
  g.edges.erase({id("v1"), id("v2")});
  EXPECT_TRUE(has_violation(validate(g), ViolationKind::kEdgeParentMismatch));
}

TEST(ValidateTest, TwoSinksRejected) {
  TaskGraph g = TaskGraph::from_vertices(
      "q", {vx("a", ExpertKind::kRag), vx("b", ExpertKind::kExpr, {"a"}), vx("c", ExpertKind::kExpr, {"a"})},
      id("b"));
  EXPECT_FALSE(validate(g).empty());
}

TEST(ValidateTest, InvalidKindReported) {
  TaskGraph g = chain(2);
  g.vertices[id("v1")].kind = static_cast<ExpertKind>(9);
  EXPECT_TRUE(has_violation(validate(g), ViolationKind::kInvalidExpertKind));
}

TEST(FrontierTest, RootOnlyOnEmptyCommit) { EXPECT_EQ(ready_frontier(chain(2), {}), ids({"v1"})); }

TEST(FrontierTest, DiamondBranchesUnblock) {
  EXPECT_EQ(ready_frontier(diamond(), {id("v1")}), ids({"v2", "v3"}));
  EXPECT_EQ(ready_frontier(diamond(), {id("v1"), id("v2"), id("v3")}), ids({"v4"}));
}

TEST(FrontierTest, OrderedByRankThenId) {
  TaskGraph g = TaskGraph::from_vertices("q",
                                         {vx("b", ExpertKind::kRag), vx("a", ExpertKind::kLogic, {"b"}),
                                          vx("c", ExpertKind::kRag), vx("z", ExpertKind::kExpr, {"a", "c"})},
                                         id("z"));
  EXPECT_EQ(ready_frontier(g, {}), ids({"b", "c"}));
  EXPECT_EQ(topological_order(g), ids({"b", "c", "a", "z"}));
}

TEST(ClosureTest, Examples) {
  EXPECT_EQ(downstream_closure(chain(4), id("v2")), (std::set<NodeId>{id("v2"), id("v3"), id("v4")}));
  EXPECT_EQ(downstream_closure(chain(4), id("v4")), (std::set<NodeId>{id("v4")}));
  EXPECT_EQ(downstream_closure(diamond(), id("v1")), bfs_closure(diamond(), id("v1")));
  EXPECT_EQ(downstream_closure(diamond(), id("v1")).size(), 4u);
}

TEST(ClosureTest, UnknownRootThrows) {
  try {
    downstream_closure(chain(2), id("nope"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownNode);
  }
}

GraphDelta patch_delta(const TaskGraph& g, const std::string& failed, const std::string& patch) {
  GraphDelta d;
  d.kind = DeltaKind::kPatchInsert;
  d.anchor = id(failed);
  Vertex pv = g.vertex(id(failed));
  pv.id = id(patch);
  d.added.push_back(pv);
  for (const auto& child : g.children(id(failed))) d.rewired_edges.insert({id(patch), child});
  if (g.sink == id(failed)) d.new_sink = id(patch);
  return d;
}

TEST(ApplyDeltaTest, PatchInsertRewiresChildren) {
  TaskGraph g = test::two_branch();
  TaskGraph out = apply_delta(g, patch_delta(g, "v2", "v2_patch"));
  EXPECT_EQ(out.version, g.version + 1);
  EXPECT_TRUE(validate(out).empty());
  EXPECT_TRUE(out.is_failed(id("v2")));
  EXPECT_EQ(out.vertex(id("v2_patch")).parents, g.vertex(id("v2")).parents);
  EXPECT_EQ(out.vertex(id("v3")).parents, ids({"v1", "v2_patch"}));
  EXPECT_TRUE(out.edges.count({id("v2_patch"), id("v3")}));
  EXPECT_FALSE(out.edges.count({id("v2"), id("v3")}));
  EXPECT_EQ(ready_frontier(out, {id("v1")}), ids({"v2_patch"}));
}

TEST(ApplyDeltaTest, PatchOnNodeWithTwoChildren) {
  TaskGraph g = diamond();
  TaskGraph out = apply_delta(g, patch_delta(g, "v1", "v1_patch"));
  EXPECT_TRUE(validate(out).empty());
  EXPECT_EQ(out.children(id("v1_patch")).size(), 2u);
  EXPECT_TRUE(out.children(id("v1")).empty());
}

TEST(ApplyDeltaTest, PatchOfSinkMovesSink) {
  TaskGraph g = chain(3);
  TaskGraph out = apply_delta(g, patch_delta(g, "v3", "v3_patch"));
  EXPECT_EQ(out.sink, id("v3_patch"));
  EXPECT_TRUE(validate(out).empty());
}

TEST(ApplyDeltaTest, SubgraphReplaceRevalidates) {
  TaskGraph g = chain(4);
  GraphDelta d;
  d.kind = DeltaKind::kSubgraphReplace;
  d.anchor = id("v2");
  d.removed = {id("v2"), id("v3"), id("v4")};
  d.added = {vx("v2_r1", ExpertKind::kLogic, {"v1"}), vx("v4_r1", ExpertKind::kExpr, {"v2_r1"})};
  d.new_sink = id("v4_r1");
  TaskGraph out = apply_delta(g, d);
  EXPECT_EQ(out.version, 1u);
  EXPECT_TRUE(validate(out).empty());
  EXPECT_EQ(out.vertices.size(), 3u);
}

TEST(ApplyDeltaTest, EmptyDeltaOnlyBumpsVersion) {
  TaskGraph g = diamond();
  GraphDelta d;
  d.kind = DeltaKind::kSubgraphReplace;
  TaskGraph out = apply_delta(g, d);
  EXPECT_EQ(out.version, g.version + 1);
  out.version = g.version;
  EXPECT_EQ(out, g);
}

TEST(ApplyDeltaTest, CycleRejected) {
  TaskGraph g = chain(3);
  GraphDelta d;
  d.kind = DeltaKind::kSubgraphReplace;
  d.anchor = id("v3");
  d.removed = {id("v3")};
  // New sink feeds back into v2.
  d.added = {vx("v3_r1", ExpertKind::kExpr, {"v2"})};
  d.rewired_edges = {{id("v3_r1"), id("v2")}};
  d.new_sink = id("v3_r1");
  try {
    apply_delta(g, d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidDelta);
  }
}

TEST(ApplyDeltaTest, PatchMayNotRemove) {
  TaskGraph g = chain(3);
  GraphDelta d = patch_delta(g, "v2", "v2_patch");
  d.removed = {id("v3")};
  EXPECT_THROW(apply_delta(g, d), Error);
}

TEST(ApplyDeltaTest, ReplaceOutsideClosureRejected) {
  TaskGraph g = chain(3);
  GraphDelta d;
  d.kind = DeltaKind::kSubgraphReplace;
  d.anchor = id("v2");
  d.removed = {id("v1"), id("v2"), id("v3")};
  d.added = {vx("v3_r1", ExpertKind::kExpr)};
  d.new_sink = id("v3_r1");
  EXPECT_THROW(apply_delta(g, d), Error);
}

TEST(GraphHistoryTest, EarlierVersionsUntouched) {
  GraphHistory h(test::two_branch());
  const std::string before = graph_to_json(h.at(0)).dump();
  h.apply(patch_delta(h.current(), "v2", "v2_patch"));
  GraphDelta empty;
  empty.kind = DeltaKind::kSubgraphReplace;
  h.apply(empty);
  EXPECT_EQ(h.size(), 3u);
  EXPECT_EQ(graph_to_json(h.at(0)).dump(), before);
  EXPECT_EQ(h.current().version, 2u);
}

TEST(GraphIoTest, RoundTrip) {
  TaskGraph g = apply_delta(test::two_branch(), patch_delta(test::two_branch(), "v2", "v2_patch"));
  TaskGraph back = graph_from_json(nlohmann::json::parse(graph_to_json(g).dump()));
  EXPECT_EQ(back, g);
}

TEST(GraphIoTest, DuplicateIdsRejected) {
  auto j = nlohmann::json::parse(R"({"query":"q","sink":"a","vertices":[
    {"id":"a","expert_kind":"EXPR","instruction":"x","parents":[]},
    {"id":"a","expert_kind":"EXPR","instruction":"y","parents":[]}]})");
  EXPECT_THROW(graph_from_json(j), Error);
}

// ---------------------------------------------------------------------------
// Properties over random DAGs.
// ---------------------------------------------------------------------------

TEST(GraphPropertyTest, RandomDagsValidateAndOrderTopologically) {
  test::Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    TaskGraph g = test::random_dag(rng, 2 + rng.below(14));
    ASSERT_TRUE(validate(g).empty());
    const auto order = topological_order(g);
    ASSERT_EQ(order.size(), g.vertices.size());
    std::map<NodeId, std::size_t> pos;
    for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
    for (const auto& [from, to] : g.edges) ASSERT_LT(pos[from], pos[to]);
  }
}

TEST(GraphPropertyTest, ClosureContainsRootAndIsTransitive) {
  test::Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    TaskGraph g = test::random_dag(rng, 2 + rng.below(12));
    for (const auto& [root, v] : g.vertices) {
      const auto closure = downstream_closure(g, root);
      ASSERT_TRUE(closure.count(root));
      ASSERT_EQ(closure, bfs_closure(g, root));
      for (const auto& x : closure) {
        const auto inner = downstream_closure(g, x);
        ASSERT_TRUE(std::includes(closure.begin(), closure.end(), inner.begin(), inner.end()));
      }
    }
  }
}

TEST(GraphPropertyTest, FrontierMatchesBruteForceAndIsMonotone) {
  test::Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    TaskGraph g = test::random_dag(rng, 2 + rng.below(12));
    std::set<NodeId> committed;
    auto frontier = ready_frontier(g, committed);
    while (!frontier.empty()) {
      ASSERT_EQ(std::set<NodeId>(frontier.begin(), frontier.end()), brute_frontier(g, committed));
      // Commit a random ready node; every other ready node stays ready.
      const NodeId pick = frontier[rng.below(frontier.size())];
      committed.insert(pick);
      auto next = ready_frontier(g, committed);
      for (const auto& f : frontier) {
        if (f == pick) continue;
        ASSERT_NE(std::find(next.begin(), next.end(), f), next.end());
      }
      frontier = std::move(next);
    }
    ASSERT_EQ(committed.size(), g.vertices.size());
  }
}

TEST(GraphPropertyTest, RandomDeltasNeverYieldCycles) {
  test::Rng rng(14);
  int accepted = 0;
  for (int trial = 0; trial < 400; ++trial) {
    TaskGraph g = test::random_dag(rng, 3 + rng.below(10));
    const auto order = topological_order(g);
    const NodeId anchor = order[rng.below(order.size())];
    GraphDelta d;
    if (rng.coin(0.5)) {
      d = patch_delta(g, anchor.str(), anchor.name + "_patch");
    } else {
      d.kind = DeltaKind::kSubgraphReplace;
      d.anchor = anchor;
      d.removed = downstream_closure(g, anchor);
      std::vector<std::string> survivors;
      for (const auto& [vid, v] : g.vertices) {
        if (!d.removed.count(vid)) survivors.push_back(vid.str());
      }
      // Random parents among survivors, possibly plus a back edge into a
      // survivor, which must be rejected whenever it closes a cycle.
      std::vector<std::string> parents;
      for (const auto& s : survivors) {
        if (rng.coin(0.4)) parents.push_back(s);
      }
      Vertex nv = vx(anchor.name + "_r1", ExpertKind::kExpr, parents);
      d.added = {nv};
      d.new_sink = nv.id;
      if (!survivors.empty() && rng.coin(0.3)) {
        d.rewired_edges.insert({nv.id, id(survivors[rng.below(survivors.size())])});
      }
    }
    try {
      TaskGraph out = apply_delta(g, d);
      ++accepted;
      ASSERT_TRUE(validate(out).empty());
      ASSERT_EQ(out.version, g.version + 1);
      for (const auto& [vid, v] : out.vertices) ASSERT_FALSE(on_cycle(out, vid));
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::kInvalidDelta);
    }
  }
  EXPECT_GT(accepted, 100);
}

}  // namespace
}  // namespace healdag
