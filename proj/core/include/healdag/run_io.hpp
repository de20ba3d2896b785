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
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "healdag/config.hpp"
#include "healdag/orchestrator.hpp"
#include "healdag/planner.hpp"
#include "healdag/scenario.hpp"

namespace healdag {

/// Everything a run depends on. The scenario is kept as parsed JSON so the
/// run-output file can embed it verbatim.
struct RunInputs {
  GraphFile graph;
  nlohmann::json scenario;
  EngineConfig config = EngineConfig::defaults();
};

/// Missing scenario or config paths mean "empty scenario" / defaults.
RunInputs load_run_inputs(const std::filesystem::path& graph, const std::optional<std::filesystem::path>& scenario,
                          const std::optional<std::filesystem::path>& config);

/// Builds the registry the config's expert mode asks for.
ExpertRegistry make_registry(const RunInputs& inputs);

/// Runs with a ScriptedPlanner over the graph file.
RunResult execute(const RunInputs& inputs);

/// Stable key order; byte-identical for identical runs.
nlohmann::ordered_json run_to_json(const RunInputs& inputs, const RunResult& result);
std::string run_to_text(const RunInputs& inputs, const RunResult& result);

/// Throws kConfig on malformed documents.
RunResult run_from_json(const nlohmann::json& j);
RunInputs inputs_from_run_json(const nlohmann::json& j);
nlohmann::json read_run_file(const std::filesystem::path& path);

/// Re-executes a recorded run, optionally under another config, and
/// returns the fresh result. Throws kReplayMismatch naming the first
/// divergent event (or field) when it differs from the record.
RunResult replay(const nlohmann::json& recorded, const std::optional<EngineConfig>& config_override = std::nullopt);

}  // namespace healdag
