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

#include "healdag/reconstructor.hpp"

#include <sstream>

#include "healdag/error.hpp"

namespace healdag {

std::string_view to_string(RepairAction action) noexcept {
  switch (action) {
    case RepairAction::kPatch: return "PATCH";
    case RepairAction::kReconstruct: return "RECONSTRUCT";
    case RepairAction::kFallback: return "FALLBACK";
  }
  return "?";
}

std::optional<RepairAction> parse_repair_action(std::string_view text) noexcept {
  for (auto a : {RepairAction::kPatch, RepairAction::kReconstruct, RepairAction::kFallback}) {
    if (to_string(a) == text) return a;
  }
  return std::nullopt;
}

void RepairBudget::charge() {
  if (exhausted()) throw Error(ErrorCode::kInvalidArgument, "repair budget exhausted");
  ++eta;
}

RepairAction decide_repair(const SuspensionCause& cause, bool patch_already_failed, const RepairBudget& budget) {
  if (!cause.suspends()) throw Error(ErrorCode::kInvalidArgument, "no suspension to repair");
  if (budget.exhausted()) return RepairAction::kFallback;
  if (cause.kind == CauseKind::kGlobalUncertainty || patch_already_failed) return RepairAction::kReconstruct;
  return RepairAction::kPatch;
}

namespace {

DeltaProposal rejected(ProposalOutcome outcome, PlannerCharge charge, std::string why) {
  DeltaProposal p;
  p.outcome = outcome;
  p.charge = charge;
  p.diagnostic = std::move(why);
  return p;
}

std::string describe_failure(const NodeId& failed, const SuspensionCause& cause, const NodeFeedback* fb) {
  std::ostringstream out;
  out << "node " << failed << " suspended by " << to_string(cause.kind) << " (observed " << cause.observed_value
      << ")";
  if (fb) {
    if (!fb->diagnostic.empty()) out << "; diagnostic: " << fb->diagnostic;
    out << "; previous output: " << output_to_json(fb->output).dump();
  }
  return out.str();
}

}  // namespace

DeltaProposal build_patch_delta(const TaskGraph& graph, const NodeId& failed, const SuspensionCause& cause,
                                PlannerPort& planner, const ArtifactRepository& repo, IdAllocator& ids) {
  const Vertex& anchor = graph.vertex(failed);

  PatchRequest request{graph, anchor, cause, std::nullopt};
  std::optional<std::size_t> entry = repo.latest_for(failed);
  if (entry) request.failed_feedback = repo.entry(*entry).feedback;

  PatchProposal proposal = planner.propose_patch(request);
  if (!proposal.vertex) {
    return rejected(ProposalOutcome::kRefused, proposal.charge, "PLANNER_REFUSAL: no patch for " + failed.str());
  }
  const ExpertKind kind = proposal.vertex->kind;
  const bool rag_gap = cause.kind == CauseKind::kConfidenceFloor && kind == ExpertKind::kRag;
  if (!is_valid(kind) || (kind != anchor.kind && !rag_gap)) {
    return rejected(ProposalOutcome::kInvalid, proposal.charge,
                    "patch kind " + std::string(to_string(kind)) + " does not fit " + failed.str());
  }

  Vertex patch;
  patch.id = ids.next_patch(failed);
  patch.kind = kind;
  patch.instruction = proposal.vertex->instruction;
  patch.parents = anchor.parents;

  GraphDelta delta;
  delta.kind = DeltaKind::kPatchInsert;
  delta.anchor = failed;
  delta.added.push_back(patch);
  for (const auto& child : graph.children(failed)) delta.rewired_edges.emplace(patch.id, child);
  if (graph.sink == failed) delta.new_sink = patch.id;
  delta.trigger = cause;

  RepairContext context;
  context.text = describe_failure(failed, cause, request.failed_feedback ? &*request.failed_feedback : nullptr);
  if (entry) context.provenance = repo.provenance(*entry);

  DeltaProposal out;
  out.delta = std::move(delta);
  out.repair_context = std::move(context);
  out.charge = proposal.charge;
  return out;
}

DeltaProposal build_reconstruct_delta(const TaskGraph& graph, const NodeId& failed, const SuspensionCause& cause,
                                      PlannerPort& planner, const ArtifactRepository& repo, IdAllocator& ids,
                                      std::size_t size_slack) {
  SubgraphRequest request;
  request.graph = graph;
  request.root = failed;
  request.removed = downstream_closure(graph, failed);
  request.query = graph.query;
  request.cause = cause;

  std::set<NodeId> upstream;
  for (const auto& r : request.removed) {
    for (const auto& p : graph.vertex(r).parents) {
      if (!request.removed.count(p)) upstream.insert(p);
    }
  }
  for (const auto& p : upstream) {
    auto entry = repo.latest_for(p);
    if (entry && repo.entry(*entry).status == EntryStatus::kCommitted) request.upstream.push_back(repo.materialize(*entry));
  }

  SubgraphProposal proposal = planner.propose_subgraph(request, ids);
  if (!proposal.vertices || proposal.vertices->empty()) {
    return rejected(ProposalOutcome::kRefused, proposal.charge, "PLANNER_REFUSAL: no subgraph for " + failed.str());
  }
  if (proposal.vertices->size() > request.removed.size() + size_slack) {
    return rejected(ProposalOutcome::kInvalid, proposal.charge,
                    "replacement of " + std::to_string(proposal.vertices->size()) + " vertices exceeds cap " +
                        std::to_string(request.removed.size() + size_slack));
  }

  GraphDelta delta;
  delta.kind = DeltaKind::kSubgraphReplace;
  delta.anchor = failed;
  delta.removed = request.removed;
  delta.added = *proposal.vertices;
  delta.rewired_edges = proposal.extra_edges;
  delta.new_sink = proposal.sink;
  delta.trigger = cause;

  DeltaProposal out;
  out.delta = std::move(delta);
  out.charge = proposal.charge;
  return out;
}

}  // namespace healdag
