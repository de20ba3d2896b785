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

#include <optional>
#include <string_view>

#include "healdag/node_id.hpp"

namespace healdag {

/// Which row of the suspension rule fired. Declared in priority order.
enum class CauseKind { kNone, kExceptionFlag, kConfidenceFloor, kGlobalUncertainty };

std::string_view to_string(CauseKind kind) noexcept;
std::optional<CauseKind> parse_cause_kind(std::string_view text) noexcept;

struct SuspensionCause {
  CauseKind kind = CauseKind::kNone;
  // Present iff kind != kNone.
  std::optional<NodeId> offending_node;
  double observed_value = 0.0;

  bool suspends() const noexcept { return kind != CauseKind::kNone; }
  bool operator==(const SuspensionCause&) const = default;
};

}  // namespace healdag
