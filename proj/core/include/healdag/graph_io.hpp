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

#include <nlohmann/json.hpp>

#include "healdag/graph.hpp"

namespace healdag {

/// {id, expert_kind, instruction, parents}
nlohmann::ordered_json vertex_to_json(const Vertex& vertex);
/// Throws kInvalidArgument on missing or mistyped fields.
Vertex vertex_from_json(const nlohmann::json& j);

/// {version, query, sink, vertices, failed, assignments}. Vertices appear in
/// id order so the text is stable.
nlohmann::ordered_json graph_to_json(const TaskGraph& graph);

/// Accepts the full form above and the plan form {query, sink, vertices};
/// missing assignments default to the vertices' own kinds. The result is
/// not validated.
TaskGraph graph_from_json(const nlohmann::json& j);

nlohmann::ordered_json cause_to_json(const SuspensionCause& cause);
SuspensionCause cause_from_json(const nlohmann::json& j);

}  // namespace healdag
