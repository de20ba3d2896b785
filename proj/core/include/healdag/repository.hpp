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

#include "healdag/expert.hpp"
#include "healdag/graph.hpp"

namespace healdag {

enum class EntryStatus { kCommitted, kFailed, kDiscarded, kSuperseded };

std::string_view to_string(EntryStatus status) noexcept;
std::optional<EntryStatus> parse_entry_status(std::string_view text) noexcept;

struct RepositoryEntry {
  std::size_t index = 0;
  std::uint64_t graph_version = 0;
  NodeId node;
  NodeFeedback feedback;
  EntryStatus status = EntryStatus::kCommitted;

  bool operator==(const RepositoryEntry&) const = default;
};

/// The run's global state: every expert result and every topology, in
/// order. Feedback is never edited; statuses only move COMMITTED ->
/// SUPERSEDED or COMMITTED -> DISCARDED.
class ArtifactRepository {
 public:
  /// Stores FAILED when the feedback carries the exception flag, COMMITTED
  /// otherwise. Throws kUnknownNode if no stored topology has the node.
  std::size_t append(std::uint64_t graph_version, const NodeId& node, NodeFeedback feedback);

  /// Throws kInvalidArgument for a move outside the lattice.
  void transition(std::size_t index, EntryStatus to);

  const std::vector<RepositoryEntry>& entries() const { return entries_; }
  const RepositoryEntry& entry(std::size_t index) const;
  std::optional<std::size_t> latest_for(const NodeId& node) const;

  void add_topology(const TaskGraph& graph);
  const std::vector<TaskGraph>& topologies() const { return topologies_; }

  Provenance provenance(std::size_t index) const;
  /// The only way payloads reach an expert: copies the entry's output and
  /// tags it with its provenance.
  ContextPayload materialize(std::size_t index) const;

  std::optional<std::string> final_answer;

 private:
  std::vector<RepositoryEntry> entries_;
  std::vector<TaskGraph> topologies_;
};

}  // namespace healdag
