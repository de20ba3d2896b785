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

#include "healdag/repository.hpp"

#include <algorithm>

#include "healdag/error.hpp"

namespace healdag {

std::string_view to_string(EntryStatus status) noexcept {
  switch (status) {
    case EntryStatus::kCommitted: return "COMMITTED";
    case EntryStatus::kFailed: return "FAILED";
    case EntryStatus::kDiscarded: return "DISCARDED";
    case EntryStatus::kSuperseded: return "SUPERSEDED";
  }
  return "?";
}

std::optional<EntryStatus> parse_entry_status(std::string_view text) noexcept {
  for (auto s : {EntryStatus::kCommitted, EntryStatus::kFailed, EntryStatus::kDiscarded, EntryStatus::kSuperseded}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

std::size_t ArtifactRepository::append(std::uint64_t graph_version, const NodeId& node, NodeFeedback feedback) {
  const bool known = std::any_of(topologies_.begin(), topologies_.end(),
                                 [&](const TaskGraph& g) { return g.contains(node); });
  if (!known) throw Error(ErrorCode::kUnknownNode, "node " + node.str() + " is in no stored topology");
  RepositoryEntry e;
  e.index = entries_.size();
  e.graph_version = graph_version;
  e.node = node;
  e.status = feedback.exception ? EntryStatus::kFailed : EntryStatus::kCommitted;
  e.feedback = std::move(feedback);
  entries_.push_back(std::move(e));
  return entries_.size() - 1;
}

void ArtifactRepository::transition(std::size_t index, EntryStatus to) {
  auto& e = entries_.at(index);
  if (e.status == to) return;
  if (e.status != EntryStatus::kCommitted || to == EntryStatus::kCommitted || to == EntryStatus::kFailed) {
    throw Error(ErrorCode::kInvalidArgument, "entry " + std::to_string(index) + " cannot move from " +
                                                 std::string(to_string(e.status)) + " to " +
                                                 std::string(to_string(to)));
  }
  e.status = to;
}

const RepositoryEntry& ArtifactRepository::entry(std::size_t index) const {
  if (index >= entries_.size()) throw Error(ErrorCode::kInvalidArgument, "no entry " + std::to_string(index));
  return entries_[index];
}

std::optional<std::size_t> ArtifactRepository::latest_for(const NodeId& node) const {
  for (auto i = entries_.size(); i-- > 0;) {
    if (entries_[i].node == node) return i;
  }
  return std::nullopt;
}

void ArtifactRepository::add_topology(const TaskGraph& graph) { topologies_.push_back(graph); }

Provenance ArtifactRepository::provenance(std::size_t index) const {
  return {index, fingerprint(entry(index).feedback.output)};
}

ContextPayload ArtifactRepository::materialize(std::size_t index) const {
  const auto& e = entry(index);
  return {e.node, e.feedback.output, provenance(index)};
}

}  // namespace healdag
