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
#include <string>
#include <string_view>
#include <vector>

#include "healdag/adapter.hpp"
#include "healdag/config.hpp"
#include "healdag/critic.hpp"
#include "healdag/expert.hpp"
#include "healdag/graph.hpp"
#include "healdag/metrics.hpp"
#include "healdag/reconstructor.hpp"
#include "healdag/repository.hpp"

namespace healdag {

enum class RunStatus { kCompleted, kDegraded, kFailed };

std::string_view to_string(RunStatus status) noexcept;
std::optional<RunStatus> parse_run_status(std::string_view text) noexcept;

enum class EventKind { kPlan, kExecute, kSuspend, kRepair, kFallback, kComplete, kFail };

std::string_view to_string(EventKind kind) noexcept;
std::optional<EventKind> parse_event_kind(std::string_view text) noexcept;

struct RunEvent {
  std::size_t step = 0;
  EventKind kind = EventKind::kPlan;
  std::optional<NodeId> node;
  std::string detail;
  bool operator==(const RunEvent&) const = default;
};

struct RepairRecord {
  std::size_t step = 0;
  SuspensionCause cause;
  RepairAction action = RepairAction::kPatch;
  // Meaningless for FALLBACK.
  ProposalOutcome outcome = ProposalOutcome::kOk;
  bool applied = false;
  std::vector<NodeId> removed;
  std::vector<NodeId> added;
  std::uint64_t graph_version = 0;
  std::uint32_t eta = 0;
  std::string diagnostic;
  bool operator==(const RepairRecord&) const = default;
};

struct PayloadTag {
  NodeId source;
  std::optional<Provenance> provenance;
  // Fingerprint of what the expert actually received.
  std::uint64_t delivered = 0;
  bool operator==(const PayloadTag&) const = default;
};

struct CallRecord {
  std::size_t step = 0;
  NodeId node;
  ExpertKind kind = ExpertKind::kLogic;
  // Repository entry this call produced.
  std::size_t entry_index = 0;
  std::vector<PayloadTag> payloads;
  std::optional<Provenance> repair_provenance;
  bool fallback = false;
  bool operator==(const CallRecord&) const = default;
};

struct RunResult {
  RunStatus status = RunStatus::kFailed;
  std::optional<std::string> answer;
  RunMetrics metrics;
  std::vector<RunEvent> events;
  std::vector<RepairRecord> repair_log;
  std::vector<CallRecord> calls;
  std::vector<RepositoryEntry> entries;
  // Every topology; a fallback run ends with the one-vertex fallback graph.
  std::vector<TaskGraph> graph_history;
  SwitchLog switch_log;
  bool fallback_used = false;
  std::string diagnostic;

  std::uint32_t reconstructions() const;
  std::uint32_t patches() const;
  bool operator==(const RunResult&) const = default;
};

/// Id of the synthetic node that answers after budget exhaustion.
NodeId fallback_node_id();

/// Plan, then repeatedly evaluate, repair or execute the first frontier
/// node until the sink commits or the budget runs out. One expert call is
/// in flight at a time.
///
/// Throws kInvalidPlan when the initial plan fails validation, kConfig when
/// the registry lacks a kind the plan uses, and lets kMissingFixture /
/// kExpertUnavailable from experts propagate.
RunResult run(const std::string& query, PlannerPort& planner, const ExpertRegistry& experts,
              const EngineConfig& config, LatencyMode latency_mode = LatencyMode::kSimulated);

/// True iff every payload and repair context handed to an expert carries a
/// provenance tag naming an earlier repository entry of the right node
/// whose output fingerprint matches what was delivered.
bool strict_isolation_check(const RunResult& result);

/// Critic view of a run. A fallback answer counts as one extra node on top
/// of the last planned topology.
Trajectory trajectory_of(const RunResult& result, const std::string& query, std::string id = {});

}  // namespace healdag
