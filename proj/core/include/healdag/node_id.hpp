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

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>

namespace healdag {

/// The fixed expert pool: factual retrieval, logical deduction, expression.
enum class ExpertKind : std::uint8_t { kRag = 0, kLogic = 1, kExpr = 2 };

inline constexpr ExpertKind kAllExpertKinds[] = {ExpertKind::kRag, ExpertKind::kLogic,
                                                 ExpertKind::kExpr};

std::string_view to_string(ExpertKind kind) noexcept;
std::optional<ExpertKind> parse_expert_kind(std::string_view text) noexcept;
bool is_valid(ExpertKind kind) noexcept;

/// Identifies a vertex. Descendants created by repair keep the failed
/// node's `name` and get a fresh `generation`; patch descendants also carry
/// the `patch` marker.
///
/// Rendering is `name` for generation 0, `name_patch` / `name_patchN` for
/// patch nodes and `name_rN` for regenerated nodes. `parse` inverts it.
struct NodeId {
  std::string name;
  std::uint32_t generation = 0;
  bool patch = false;

  NodeId() = default;
  explicit NodeId(std::string base, std::uint32_t gen = 0, bool is_patch = false)
      : name(std::move(base)), generation(gen), patch(is_patch) {}

  static NodeId parse(std::string_view rendered);
  std::string str() const;

  auto operator<=>(const NodeId&) const = default;
  bool operator==(const NodeId&) const = default;
};

std::ostream& operator<<(std::ostream& os, const NodeId& id);

/// Hands out descendant ids that never collide with anything already seen in
/// a run's graph history.
class IdAllocator {
 public:
  void observe(const NodeId& id);
  NodeId next_patch(const NodeId& failed);
  NodeId next_rebuild(std::string_view name);

 private:
  std::uint32_t bump(const std::string& name);

  std::map<std::string, std::uint32_t, std::less<>> max_generation_;
};

}  // namespace healdag
