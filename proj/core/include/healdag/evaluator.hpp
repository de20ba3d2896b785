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

#include <cstddef>
#include <vector>

#include "healdag/expert.hpp"
#include "healdag/suspension.hpp"

namespace healdag {

struct EvalThresholds {
  double tau_c = 0.35;  // single-node confidence floor
  double tau_u = 0.45;  // global uncertainty tolerance

  /// Throws kConfig unless both lie strictly inside (0, 1).
  void check() const;
  bool operator==(const EvalThresholds&) const = default;
};

/// One member of the evaluated set. `rank` is the node's topological rank
/// in the current graph version and drives the offending-node tie-break.
struct CommittedNode {
  NodeId id;
  bool exception = false;
  double confidence = 0.0;
  std::size_t rank = 0;
};

/// 1 - mean confidence, summed in index order. Throws kEmptySet.
double global_uncertainty(const std::vector<double>& confidences);
double global_uncertainty(const std::vector<CommittedNode>& committed);

/// First matching cause in priority order EXCEPTION_FLAG, CONFIDENCE_FLOOR,
/// GLOBAL_UNCERTAINTY. The floor is strict (c < tau_c), the tolerance
/// inclusive (U >= tau_u).
///
/// Offending node: among violators, lowest (rank, id). For
/// GLOBAL_UNCERTAINTY every node contributes, so the least confident one is
/// named (ties again by rank, id). observed_value is the node's confidence
/// for the first two causes and U for the third.
SuspensionCause check_suspension(const std::vector<CommittedNode>& committed, const EvalThresholds& thresholds);

}  // namespace healdag
