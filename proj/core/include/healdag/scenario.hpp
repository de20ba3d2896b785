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
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "healdag/expert.hpp"

namespace healdag {

/// One scripted response. `raw_response` holds an unparsed model reply when
/// the fixture's `output` is a string; it is run through parse_response at
/// execution time so malformed replies exercise the real parsing path.
struct ScenarioRecord {
  NodeFeedback feedback;
  std::optional<std::string> raw_response;

  bool operator==(const ScenarioRecord&) const = default;
};

using ScenarioTable = std::map<NodeId, std::vector<ScenarioRecord>>;

/// Fixture format: a JSON object mapping node id to an ordered list of
/// records with fields output, exception, confidence, tokens_prompt,
/// tokens_completion and wall_time. Empty input yields an empty table.
/// Throws kScenarioParse with line or field diagnostics.
ScenarioTable parse_scripted_scenario(std::string_view text, std::string_view source = "<scenario>");
ScenarioTable load_scripted_scenario(const std::filesystem::path& path);
ScenarioTable scenario_from_json(const nlohmann::json& j, std::string_view source = "<scenario>");

/// Key whose records serve every node without its own entry.
NodeId wildcard_node_id();

/// Shared fixture state. A node consulted k times gets the k-th record; once
/// the list runs out the last record repeats. Nodes without an entry use the
/// `*` entry when present.
class ScriptedBackend {
 public:
  explicit ScriptedBackend(ScenarioTable table) : table_(std::move(table)) {}

  /// Throws kMissingFixture if the node has no records.
  NodeFeedback next(const Vertex& vertex);
  std::size_t calls(const NodeId& id) const;
  const ScenarioTable& table() const { return table_; }

 private:
  ScenarioTable table_;
  std::map<NodeId, std::size_t> consulted_;
};

class ScriptedExpert final : public Expert {
 public:
  ScriptedExpert(ExpertKind kind, std::shared_ptr<ScriptedBackend> backend)
      : kind_(kind), backend_(std::move(backend)) {}

  ExpertKind kind() const override { return kind_; }
  NodeFeedback execute(const ExpertCall& call) override;

 private:
  ExpertKind kind_;
  std::shared_ptr<ScriptedBackend> backend_;
};

/// Registers a scripted expert for every kind over one shared backend.
ExpertRegistry make_scripted_registry(std::shared_ptr<ScriptedBackend> backend);

}  // namespace healdag
