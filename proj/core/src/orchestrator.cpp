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

#include "healdag/orchestrator.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "healdag/error.hpp"
#include "healdag/evaluator.hpp"
#include "healdag/log.hpp"

namespace healdag {

std::string_view to_string(RunStatus status) noexcept {
  switch (status) {
    case RunStatus::kCompleted: return "COMPLETED";
    case RunStatus::kDegraded: return "DEGRADED";
    case RunStatus::kFailed: return "FAILED";
  }
  return "?";
}

std::optional<RunStatus> parse_run_status(std::string_view text) noexcept {
  for (auto s : {RunStatus::kCompleted, RunStatus::kDegraded, RunStatus::kFailed}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

std::string_view to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::kPlan: return "PLAN";
    case EventKind::kExecute: return "EXECUTE";
    case EventKind::kSuspend: return "SUSPEND";
    case EventKind::kRepair: return "REPAIR";
    case EventKind::kFallback: return "FALLBACK";
    case EventKind::kComplete: return "COMPLETE";
    case EventKind::kFail: return "FAIL";
  }
  return "?";
}

std::optional<EventKind> parse_event_kind(std::string_view text) noexcept {
  for (auto k : {EventKind::kPlan, EventKind::kExecute, EventKind::kSuspend, EventKind::kRepair, EventKind::kFallback,
                 EventKind::kComplete, EventKind::kFail}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::uint32_t RunResult::reconstructions() const {
  return static_cast<std::uint32_t>(std::count_if(repair_log.begin(), repair_log.end(), [](const RepairRecord& r) {
    return r.action == RepairAction::kReconstruct;
  }));
}

std::uint32_t RunResult::patches() const {
  return static_cast<std::uint32_t>(std::count_if(repair_log.begin(), repair_log.end(), [](const RepairRecord& r) {
    return r.action == RepairAction::kPatch;
  }));
}

NodeId fallback_node_id() { return NodeId("__fallback"); }

namespace {

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

std::string describe(const SuspensionCause& c) {
  return std::string(to_string(c.kind)) + " observed=" + fmt(c.observed_value);
}

std::string describe(ProposalOutcome o) {
  switch (o) {
    case ProposalOutcome::kOk: return "applied";
    case ProposalOutcome::kRefused: return "refused";
    case ProposalOutcome::kInvalid: return "invalid";
  }
  return "?";
}

class RunLoop {
 public:
  RunLoop(const std::string& query, PlannerPort& planner, const ExpertRegistry& experts, const EngineConfig& config,
          LatencyMode latency_mode)
      : query_(query),
        planner_(planner),
        experts_(experts),
        config_(config),
        scheduler_(config.memory_model(), config.adapters.hot_load_seconds) {
    budget_.omega_max = config.budget.omega_max;
    result_.metrics.latency_mode = latency_mode;
  }

  RunResult run() {
    plan();
    if (!history_) return finish();
    while (true) {
      const TaskGraph& g = history_->current();
      const auto ranks = topological_ranks(g);

      std::vector<CommittedNode> evaluated;
      std::set<NodeId> committed;
      for (const auto& [id, _] : g.vertices) {
        if (g.is_failed(id)) continue;
        auto idx = repo_.latest_for(id);
        if (!idx) continue;
        const auto& e = repo_.entry(*idx);
        if (e.status != EntryStatus::kCommitted && e.status != EntryStatus::kFailed) continue;
        evaluated.push_back({id, e.feedback.exception, e.feedback.confidence, ranks.at(id)});
        if (e.status == EntryStatus::kCommitted) committed.insert(id);
      }

      const SuspensionCause cause = check_suspension(evaluated, config_.thresholds);
      if (cause.suspends()) {
        if (!repair(cause)) {
          fallback();
          return finish();
        }
        continue;
      }
      if (committed.count(g.sink)) {
        const auto& sink_entry = repo_.entry(*repo_.latest_for(g.sink));
        result_.status = RunStatus::kCompleted;
        result_.answer = render_answer(sink_entry.feedback.output);
        event(EventKind::kComplete, g.sink, "status=COMPLETED");
        return finish();
      }
      const auto frontier = ready_frontier(g, committed);
      if (frontier.empty()) {
        // Unreachable for valid graphs; kept so a broken planner cannot spin.
        result_.status = RunStatus::kFailed;
        result_.diagnostic = "no ready vertex and no suspension";
        event(EventKind::kFail, std::nullopt, result_.diagnostic);
        return finish();
      }
      execute(g, g.vertex(frontier.front()));
    }
  }

 private:
  void event(EventKind kind, std::optional<NodeId> node, std::string detail) {
    result_.events.push_back({step_, kind, std::move(node), std::move(detail)});
  }

  void switch_to(const std::string& module) {
    const double cost = scheduler_.switch_to(module, now_);
    now_ += cost;
    result_.metrics.switch_seconds += cost;
  }

  void charge_planner(const PlannerCharge& c) {
    result_.metrics.planner_calls += 1;
    result_.metrics.tokens_by_module[std::string(kPlanModule)] += c.tokens();
    result_.metrics.planner_seconds += c.wall_time;
    now_ += c.wall_time;
  }

  void plan() {
    ++step_;
    switch_to(std::string(kPlanModule));
    PlanProposal proposal = planner_.initial_plan(query_);
    charge_planner(proposal.charge);
    if (!proposal.graph) {
      result_.status = RunStatus::kFailed;
      result_.diagnostic = "PLANNER_REFUSAL: no initial plan";
      event(EventKind::kFail, std::nullopt, result_.diagnostic);
      return;
    }
    TaskGraph graph = std::move(*proposal.graph);
    auto report = validate(graph);
    if (!report.empty()) {
      std::ostringstream why;
      why << "initial plan fails validation:";
      for (const auto& v : report) why << ' ' << to_string(v.kind) << '(' << v.detail << ')';
      throw Error(ErrorCode::kInvalidPlan, why.str());
    }
    for (const auto& [id, v] : graph.vertices) {
      if (!experts_.has(v.kind)) {
        throw Error(ErrorCode::kConfig, "no expert registered for " + std::string(to_string(v.kind)));
      }
      ids_.observe(id);
    }
    repo_.add_topology(graph);
    event(EventKind::kPlan, graph.sink, "vertices=" + std::to_string(graph.vertices.size()));
    history_.emplace(std::move(graph));
  }

  /// Returns false when the run must fall back.
  bool repair(const SuspensionCause& cause) {
    ++step_;
    const NodeId& node = *cause.offending_node;
    event(EventKind::kSuspend, node, describe(cause));

    const bool patch_failed = node.patch || patch_attempted_.count(node) != 0;
    const RepairAction action = decide_repair(cause, patch_failed, budget_);

    RepairRecord record;
    record.step = step_;
    record.cause = cause;
    record.action = action;
    if (action == RepairAction::kFallback) {
      record.graph_version = history_->current().version;
      record.eta = budget_.eta;
      record.diagnostic = "budget exhausted";
      result_.repair_log.push_back(record);
      return false;
    }

    budget_.charge();
    switch_to(std::string(kPlanModule));
    const TaskGraph& g = history_->current();
    DeltaProposal proposal;
    if (action == RepairAction::kPatch) {
      patch_attempted_.insert(node);
      proposal = build_patch_delta(g, node, cause, planner_, repo_, ids_);
    } else {
      proposal = build_reconstruct_delta(g, node, cause, planner_, repo_, ids_, config_.budget.replacement_size_cap);
    }
    charge_planner(proposal.charge);
    record.outcome = proposal.outcome;
    record.diagnostic = proposal.diagnostic;

    bool fall_back = false;
    if (proposal.outcome == ProposalOutcome::kOk) {
      try {
        const TaskGraph& next = history_->apply(*proposal.delta);
        record.applied = true;
        repo_.add_topology(next);
        for (const auto& v : proposal.delta->added) {
          record.added.push_back(v.id);
          ids_.observe(v.id);
        }
        record.removed.assign(proposal.delta->removed.begin(), proposal.delta->removed.end());
        if (action == RepairAction::kPatch) {
          auto idx = repo_.latest_for(node);
          if (idx && repo_.entry(*idx).status == EntryStatus::kCommitted) {
            repo_.transition(*idx, EntryStatus::kSuperseded);
          }
          repair_contexts_[proposal.delta->added.front().id] = *proposal.repair_context;
        } else {
          for (const auto& e : repo_.entries()) {
            if (proposal.delta->removed.count(e.node) && e.status == EntryStatus::kCommitted) {
              repo_.transition(e.index, EntryStatus::kDiscarded);
            }
          }
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kInvalidDelta) throw;
        record.outcome = ProposalOutcome::kInvalid;
        record.diagnostic = e.what();
      }
    } else if (action == RepairAction::kReconstruct && proposal.outcome == ProposalOutcome::kRefused) {
      fall_back = true;
    }
    record.graph_version = history_->current().version;
    record.eta = budget_.eta;
    result_.repair_log.push_back(record);
    event(EventKind::kRepair, node,
          std::string(to_string(action)) + " " + describe(record.outcome) + " version=" +
              std::to_string(record.graph_version) + " eta=" + std::to_string(budget_.eta));
    if (!record.applied) log_warning("repair of " + node.str() + " not applied: " + record.diagnostic);
    return !fall_back;
  }

  NodeFeedback call_expert(const ExpertCall& call, CallRecord& record) {
    const std::string module = module_for(call.vertex.kind);
    switch_to(module);
    NodeFeedback fb = finalize_feedback(experts_.at(call.vertex.kind).execute(call), call.vertex.kind);
    now_ += fb.wall_time;
    result_.metrics.expert_seconds += fb.wall_time;
    result_.metrics.expert_calls += 1;
    result_.metrics.tokens_by_module[module] += fb.tokens();
    for (const auto& p : call.parent_payloads) record.payloads.push_back({p.source, p.provenance, fingerprint(p.output)});
    if (call.repair_context) record.repair_provenance = call.repair_context->provenance;
    record.step = step_;
    record.node = call.vertex.id;
    record.kind = call.vertex.kind;
    return fb;
  }

  void execute(const TaskGraph& g, const Vertex& vertex) {
    ++step_;
    ExpertCall call;
    call.vertex = vertex;
    for (const auto& p : vertex.parents) call.parent_payloads.push_back(repo_.materialize(*repo_.latest_for(p)));
    if (auto it = repair_contexts_.find(vertex.id); it != repair_contexts_.end()) call.repair_context = it->second;

    CallRecord record;
    NodeFeedback fb = call_expert(call, record);
    const double confidence = fb.confidence;
    record.entry_index = repo_.append(g.version, vertex.id, std::move(fb));
    const auto& entry = repo_.entry(record.entry_index);
    result_.calls.push_back(std::move(record));
    event(EventKind::kExecute, vertex.id,
          "entry=" + std::to_string(entry.index) + " status=" + std::string(to_string(entry.status)) +
              " confidence=" + fmt(confidence));
  }

  void fallback() {
    ++step_;
    result_.fallback_used = true;
    event(EventKind::kFallback, fallback_node_id(), "eta=" + std::to_string(budget_.eta));

    Vertex v;
    v.id = fallback_node_id();
    v.kind = ExpertKind::kExpr;
    v.instruction = history_->current().query;
    fallback_graph_ = TaskGraph::from_vertices(history_->current().query, {v}, v.id);
    fallback_graph_->version = history_->current().version + 1;
    repo_.add_topology(*fallback_graph_);

    ExpertCall call;
    call.vertex = v;
    for (const auto& e : repo_.entries()) {
      if (e.status == EntryStatus::kCommitted) call.parent_payloads.push_back(repo_.materialize(e.index));
    }
    CallRecord record;
    record.fallback = true;
    if (!experts_.has(ExpertKind::kExpr)) throw Error(ErrorCode::kConfig, "fallback needs an EXPR expert");
    NodeFeedback fb = call_expert(call, record);
    record.entry_index = repo_.append(fallback_graph_->version, v.id, std::move(fb));
    const auto& entry = repo_.entry(record.entry_index);
    result_.calls.push_back(std::move(record));

    if (entry.feedback.exception) {
      result_.status = RunStatus::kFailed;
      result_.diagnostic = "fallback expert raised an exception";
      if (!entry.feedback.diagnostic.empty()) result_.diagnostic += ": " + entry.feedback.diagnostic;
      event(EventKind::kFail, v.id, "status=FAILED");
    } else {
      result_.status = RunStatus::kDegraded;
      result_.answer = render_answer(entry.feedback.output);
      event(EventKind::kComplete, v.id, "status=DEGRADED");
    }
  }

  RunResult finish() {
    RunMetrics& m = result_.metrics;
    m.tokens_total = 0;
    for (const auto& [_, t] : m.tokens_by_module) m.tokens_total += t;
    m.tflops = tflops(m.tokens_total, config_.backbone);
    m.latency_seconds = m.expert_seconds + m.switch_seconds + m.planner_seconds;
    m.peak_memory_bytes = scheduler_.observed_peak();
    m.suspensions = budget_.eta;
    result_.entries = repo_.entries();
    if (history_) result_.graph_history = history_->snapshot();
    if (fallback_graph_) result_.graph_history.push_back(*fallback_graph_);
    result_.switch_log = scheduler_.log();
    return std::move(result_);
  }

  const std::string& query_;
  PlannerPort& planner_;
  const ExpertRegistry& experts_;
  const EngineConfig& config_;
  AdapterScheduler scheduler_;
  ArtifactRepository repo_;
  std::optional<GraphHistory> history_;
  std::optional<TaskGraph> fallback_graph_;
  IdAllocator ids_;
  RepairBudget budget_;
  std::set<NodeId> patch_attempted_;
  std::map<NodeId, RepairContext> repair_contexts_;
  RunResult result_;
  double now_ = 0.0;
  std::size_t step_ = 0;
};

}  // namespace

RunResult run(const std::string& query, PlannerPort& planner, const ExpertRegistry& experts,
              const EngineConfig& config, LatencyMode latency_mode) {
  config.check();
  return RunLoop(query, planner, experts, config, latency_mode).run();
}

bool strict_isolation_check(const RunResult& result) {
  const auto& entries = result.entries;
  if (result.calls.size() != entries.size()) return false;
  std::set<std::size_t> produced;
  auto tag_ok = [&](const std::optional<Provenance>& tag, std::size_t before, auto&& node_matches,
                    std::optional<std::uint64_t> delivered) {
    if (!tag || tag->entry_index >= before) return false;
    const auto& source = entries[tag->entry_index];
    if (!node_matches(source.node)) return false;
    const auto actual = fingerprint(source.feedback.output);
    if (actual != tag->fingerprint) return false;
    return !delivered || *delivered == actual;
  };

  for (const auto& call : result.calls) {
    if (call.entry_index >= entries.size() || entries[call.entry_index].node != call.node) return false;
    if (!produced.insert(call.entry_index).second) return false;
    for (const auto& p : call.payloads) {
      if (!tag_ok(p.provenance, call.entry_index, [&](const NodeId& n) { return n == p.source; }, p.delivered)) {
        return false;
      }
    }
    if (call.node.patch) {
      if (!tag_ok(call.repair_provenance, call.entry_index,
                  [&](const NodeId& n) { return n.name == call.node.name; }, std::nullopt)) {
        return false;
      }
    } else if (call.repair_provenance) {
      return false;
    }
  }
  return true;
}

Trajectory trajectory_of(const RunResult& result, const std::string& query, std::string id) {
  Trajectory t;
  t.id = std::move(id);
  t.query = query;
  t.graph_history = result.graph_history;
  t.reconstructions = result.metrics.suspensions;
  t.final_answer = result.answer;
  for (const auto& e : result.entries) {
    if (e.status != EntryStatus::kDiscarded) t.feedbacks.push_back(e.feedback);
  }
  const std::size_t planned = result.graph_history.size() - (result.fallback_used ? 1 : 0);
  if (planned == 0) {
    t.node_count = 1;
    t.per_node_legality = {true};
    return t;
  }
  const TaskGraph& final_graph = result.graph_history[planned - 1];
  t.per_node_legality = legality_vector(final_graph);
  if (result.fallback_used) t.per_node_legality.push_back(true);
  t.node_count = t.per_node_legality.size();
  return t;
}

}  // namespace healdag
