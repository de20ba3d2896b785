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

#include "healdag/graph_io.hpp"

#include "healdag/error.hpp"

namespace healdag {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void bad(const std::string& why) { throw Error(ErrorCode::kInvalidArgument, why); }

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) bad(std::string("missing field '") + key + "'");
  return j[key];
}

std::string string_field(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_string()) bad(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

ExpertKind kind_field(const json& j, const char* key) {
  auto text = string_field(j, key);
  auto kind = parse_expert_kind(text);
  if (!kind) bad("unknown expert kind '" + text + "'");
  return *kind;
}

}  // namespace

ordered_json vertex_to_json(const Vertex& vertex) {
  ordered_json j;
  j["id"] = vertex.id.str();
  j["expert_kind"] = std::string(to_string(vertex.kind));
  j["instruction"] = vertex.instruction;
  j["parents"] = ordered_json::array();
  for (const auto& p : vertex.parents) j["parents"].push_back(p.str());
  return j;
}

Vertex vertex_from_json(const json& j) {
  Vertex v;
  v.id = NodeId::parse(string_field(j, "id"));
  v.kind = kind_field(j, "expert_kind");
  v.instruction = j.contains("instruction") ? string_field(j, "instruction") : std::string();
  if (j.contains("parents")) {
    if (!j["parents"].is_array()) bad("vertex " + v.id.str() + ": parents must be a list");
    for (const auto& p : j["parents"]) {
      if (!p.is_string()) bad("vertex " + v.id.str() + ": parent ids must be strings");
      v.parents.push_back(NodeId::parse(p.get<std::string>()));
    }
  }
  return v;
}

ordered_json graph_to_json(const TaskGraph& graph) {
  ordered_json j;
  j["version"] = graph.version;
  j["query"] = graph.query;
  j["sink"] = graph.sink.str();
  j["vertices"] = ordered_json::array();
  for (const auto& [_, v] : graph.vertices) j["vertices"].push_back(vertex_to_json(v));
  j["failed"] = ordered_json::array();
  for (const auto& f : graph.failed) j["failed"].push_back(f.str());
  j["assignments"] = ordered_json::object();
  for (const auto& [id, kind] : graph.assignments) j["assignments"][id.str()] = std::string(to_string(kind));
  return j;
}

TaskGraph graph_from_json(const json& j) {
  if (!j.is_object()) bad("graph must be an object");
  std::vector<Vertex> vertices;
  const json& vs = field(j, "vertices");
  if (!vs.is_array()) bad("vertices must be a list");
  for (const auto& v : vs) vertices.push_back(vertex_from_json(v));

  TaskGraph g = TaskGraph::from_vertices(j.contains("query") ? string_field(j, "query") : std::string(), vertices,
                                         NodeId::parse(string_field(j, "sink")));
  // from_vertices keeps the first of duplicate ids; surface them instead.
  if (g.vertices.size() != vertices.size()) bad("duplicate vertex id");
  if (j.contains("version")) {
    if (!j["version"].is_number_unsigned()) bad("version must be a non-negative integer");
    g.version = j["version"].get<std::uint64_t>();
  }
  if (j.contains("failed")) {
    for (const auto& f : j["failed"]) g.failed.insert(NodeId::parse(f.get<std::string>()));
  }
  if (j.contains("assignments")) {
    if (!j["assignments"].is_object()) bad("assignments must be an object");
    for (const auto& [id, kind] : j["assignments"].items()) {
      if (!kind.is_string()) bad("assignment for " + id + " must be a string");
      auto parsed = parse_expert_kind(kind.get<std::string>());
      if (!parsed) bad("unknown expert kind in assignment for " + id);
      g.assignments[NodeId::parse(id)] = *parsed;
    }
  }
  return g;
}

ordered_json cause_to_json(const SuspensionCause& cause) {
  ordered_json j;
  j["kind"] = std::string(to_string(cause.kind));
  j["offending_node"] = cause.offending_node ? ordered_json(cause.offending_node->str()) : ordered_json();
  j["observed_value"] = cause.observed_value;
  return j;
}

SuspensionCause cause_from_json(const json& j) {
  SuspensionCause c;
  auto kind = parse_cause_kind(string_field(j, "kind"));
  if (!kind) bad("unknown cause kind");
  c.kind = *kind;
  if (j.contains("offending_node") && j["offending_node"].is_string()) {
    c.offending_node = NodeId::parse(j["offending_node"].get<std::string>());
  }
  if (j.contains("observed_value")) c.observed_value = j["observed_value"].get<double>();
  return c;
}

}  // namespace healdag
