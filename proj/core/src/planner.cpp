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

#include "healdag/planner.hpp"

#include <fstream>

#include "healdag/error.hpp"
#include "healdag/graph_io.hpp"

namespace healdag {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void bad(const std::string& why) { throw Error(ErrorCode::kConfig, "graph file: " + why); }

PlannerCharge charge_from_json(const json& j, const char* what) {
  PlannerCharge c;
  if (j.is_number_unsigned()) {
    c.tokens_prompt = j.get<std::uint64_t>();
    return c;
  }
  if (!j.is_object()) bad(std::string("planner tokens.") + what + " must be an integer or object");
  for (const auto& [key, v] : j.items()) {
    if (key == "prompt" && v.is_number_unsigned()) {
      c.tokens_prompt = v.get<std::uint64_t>();
    } else if (key == "completion" && v.is_number_unsigned()) {
      c.tokens_completion = v.get<std::uint64_t>();
    } else if (key == "wall_time" && v.is_number() && v.get<double>() >= 0.0) {
      c.wall_time = v.get<double>();
    } else {
      bad(std::string("bad field '") + key + "' in planner tokens." + what);
    }
  }
  return c;
}

ordered_json charge_to_json(const PlannerCharge& c) {
  ordered_json j;
  j["prompt"] = c.tokens_prompt;
  j["completion"] = c.tokens_completion;
  j["wall_time"] = c.wall_time;
  return j;
}

void read_refusals(const json& j, const char* key, std::set<NodeId>& ids, bool& all) {
  if (!j.contains(key)) return;
  const auto& v = j[key];
  if (v.is_boolean()) {
    all = v.get<bool>();
    return;
  }
  if (!v.is_array()) bad(std::string("planner.") + key + " must be a boolean or a list of ids");
  for (const auto& id : v) ids.insert(NodeId::parse(id.get<std::string>()));
}

ordered_json refusals_to_json(const std::set<NodeId>& ids, bool all) {
  if (all) return true;
  ordered_json out = ordered_json::array();
  for (const auto& id : ids) out.push_back(id.str());
  return out;
}

Vertex patch_vertex_from_json(const json& j) {
  Vertex v;
  if (!j.is_object() || !j.contains("expert_kind") || !j["expert_kind"].is_string()) {
    bad("patch entries need an expert_kind");
  }
  auto kind = parse_expert_kind(j["expert_kind"].get<std::string>());
  if (!kind) bad("unknown expert kind in patch entry");
  v.kind = *kind;
  if (j.contains("instruction")) v.instruction = j["instruction"].get<std::string>();
  return v;
}

}  // namespace

GraphFile graph_file_from_json(const json& j) {
  GraphFile file;
  try {
    file.graph = graph_from_json(j);
  } catch (const Error& e) {
    bad(e.what());
  }
  if (!j.contains("planner")) return file;

  const json& p = j["planner"];
  if (!p.is_object()) bad("planner must be an object");
  PlannerScript& s = file.planner;
  for (const auto& [key, _] : p.items()) {
    if (key != "tokens" && key != "patches" && key != "subgraphs" && key != "refuse_patch" &&
        key != "refuse_subgraph") {
      bad("unknown planner field '" + key + "'");
    }
  }
  if (p.contains("tokens")) {
    const json& t = p["tokens"];
    if (t.contains("plan")) s.plan_charge = charge_from_json(t["plan"], "plan");
    if (t.contains("patch")) s.patch_charge = charge_from_json(t["patch"], "patch");
    if (t.contains("subgraph")) s.subgraph_charge = charge_from_json(t["subgraph"], "subgraph");
  }
  if (p.contains("patches")) {
    for (const auto& [id, v] : p["patches"].items()) s.patches[NodeId::parse(id)] = patch_vertex_from_json(v);
  }
  if (p.contains("subgraphs")) {
    for (const auto& [id, v] : p["subgraphs"].items()) {
      ScriptedSubgraph sub;
      try {
        for (const auto& vj : v.at("vertices")) sub.vertices.push_back(vertex_from_json(vj));
      } catch (const std::exception& e) {
        bad("subgraph for " + id + ": " + e.what());
      }
      if (v.contains("sink")) sub.sink = NodeId::parse(v["sink"].get<std::string>());
      if (v.contains("extra_edges")) {
        for (const auto& e : v["extra_edges"]) {
          sub.extra_edges.emplace(NodeId::parse(e.at(0).get<std::string>()), NodeId::parse(e.at(1).get<std::string>()));
        }
      }
      s.subgraphs[NodeId::parse(id)] = std::move(sub);
    }
  }
  read_refusals(p, "refuse_patch", s.refuse_patch, s.refuse_all_patches);
  read_refusals(p, "refuse_subgraph", s.refuse_subgraph, s.refuse_all_subgraphs);
  return file;
}

ordered_json graph_file_to_json(const GraphFile& file) {
  ordered_json j;
  j["query"] = file.graph.query;
  j["sink"] = file.graph.sink.str();
  j["vertices"] = ordered_json::array();
  for (const auto& [_, v] : file.graph.vertices) j["vertices"].push_back(vertex_to_json(v));
  j["assignments"] = ordered_json::object();
  for (const auto& [id, kind] : file.graph.assignments) j["assignments"][id.str()] = std::string(to_string(kind));

  const PlannerScript& s = file.planner;
  ordered_json p;
  p["tokens"]["plan"] = charge_to_json(s.plan_charge);
  p["tokens"]["patch"] = charge_to_json(s.patch_charge);
  p["tokens"]["subgraph"] = charge_to_json(s.subgraph_charge);
  p["patches"] = ordered_json::object();
  for (const auto& [id, v] : s.patches) {
    p["patches"][id.str()] = {{"expert_kind", std::string(to_string(v.kind))}, {"instruction", v.instruction}};
  }
  p["subgraphs"] = ordered_json::object();
  for (const auto& [id, sub] : s.subgraphs) {
    ordered_json sj;
    sj["vertices"] = ordered_json::array();
    for (const auto& v : sub.vertices) sj["vertices"].push_back(vertex_to_json(v));
    if (sub.sink) sj["sink"] = sub.sink->str();
    sj["extra_edges"] = ordered_json::array();
    for (const auto& [from, to] : sub.extra_edges) sj["extra_edges"].push_back({from.str(), to.str()});
    p["subgraphs"][id.str()] = std::move(sj);
  }
  p["refuse_patch"] = refusals_to_json(s.refuse_patch, s.refuse_all_patches);
  p["refuse_subgraph"] = refusals_to_json(s.refuse_subgraph, s.refuse_all_subgraphs);
  j["planner"] = std::move(p);
  return j;
}

GraphFile load_graph_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open graph file " + path.string());
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) bad(path.string() + " is not valid JSON");
  return graph_file_from_json(j);
}

PlanProposal ScriptedPlanner::initial_plan(const std::string& query) {
  PlanProposal out;
  out.graph = file_.graph;
  if (!query.empty()) out.graph->query = query;
  out.charge = file_.planner.plan_charge;
  return out;
}

PatchProposal ScriptedPlanner::propose_patch(const PatchRequest& request) {
  const PlannerScript& s = file_.planner;
  PatchProposal out;
  out.charge = s.patch_charge;
  const NodeId& id = request.failed.id;
  if (s.refuse_all_patches || s.refuse_patch.count(id)) return out;
  if (auto it = s.patches.find(id); it != s.patches.end()) {
    out.vertex = it->second;
    return out;
  }
  Vertex v;
  v.kind = request.failed.kind;
  v.instruction = "Re-derive: " + request.failed.instruction;
  out.vertex = v;
  return out;
}

ScriptedSubgraph clone_region(const TaskGraph& graph, const std::set<NodeId>& removed, IdAllocator& ids) {
  std::map<NodeId, NodeId> renamed;
  for (const auto& id : topological_order(graph)) {
    if (removed.count(id) && !graph.is_failed(id)) renamed.emplace(id, ids.next_rebuild(id.name));
  }
  ScriptedSubgraph sub;
  for (const auto& id : topological_order(graph)) {
    auto it = renamed.find(id);
    if (it == renamed.end()) continue;
    Vertex v = graph.vertex(id);
    v.id = it->second;
    for (auto& p : v.parents) {
      if (auto r = renamed.find(p); r != renamed.end()) p = r->second;
    }
    sub.vertices.push_back(std::move(v));
  }
  if (auto s = renamed.find(graph.sink); s != renamed.end()) sub.sink = s->second;
  return sub;
}

SubgraphProposal ScriptedPlanner::propose_subgraph(const SubgraphRequest& request, IdAllocator& ids) {
  const PlannerScript& s = file_.planner;
  SubgraphProposal out;
  out.charge = s.subgraph_charge;
  if (s.refuse_all_subgraphs || s.refuse_subgraph.count(request.root)) return out;
  ScriptedSubgraph sub;
  if (auto it = s.subgraphs.find(request.root); it != s.subgraphs.end()) {
    sub = it->second;
    for (const auto& v : sub.vertices) ids.observe(v.id);
  } else {
    sub = clone_region(request.graph, request.removed, ids);
  }
  out.vertices = std::move(sub.vertices);
  out.sink = sub.sink;
  out.extra_edges = std::move(sub.extra_edges);
  return out;
}

}  // namespace healdag
