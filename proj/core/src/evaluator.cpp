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

#include "healdag/evaluator.hpp"

#include <tuple>

#include "healdag/error.hpp"

namespace healdag {

void EvalThresholds::check() const {
  if (!(tau_c > 0.0 && tau_c < 1.0)) throw Error(ErrorCode::kConfig, "tau_c must lie in (0,1)");
  if (!(tau_u > 0.0 && tau_u < 1.0)) throw Error(ErrorCode::kConfig, "tau_u must lie in (0,1)");
}

double global_uncertainty(const std::vector<double>& confidences) {
  if (confidences.empty()) throw Error(ErrorCode::kEmptySet, "global uncertainty of an empty committed set");
  double sum = 0.0;
  for (double c : confidences) sum += c;
  return 1.0 - sum / static_cast<double>(confidences.size());
}

double global_uncertainty(const std::vector<CommittedNode>& committed) {
  std::vector<double> confidences;
  confidences.reserve(committed.size());
  for (const auto& n : committed) confidences.push_back(n.confidence);
  return global_uncertainty(confidences);
}

namespace {

bool earlier(const CommittedNode& a, const CommittedNode& b) {
  return std::tie(a.rank, a.id) < std::tie(b.rank, b.id);
}

}  // namespace

SuspensionCause check_suspension(const std::vector<CommittedNode>& committed, const EvalThresholds& thresholds) {
  if (committed.empty()) return {};

  const CommittedNode* flagged = nullptr;
  const CommittedNode* floored = nullptr;
  const CommittedNode* weakest = nullptr;
  for (const auto& n : committed) {
    if (n.exception && (!flagged || earlier(n, *flagged))) flagged = &n;
    if (n.confidence < thresholds.tau_c && (!floored || earlier(n, *floored))) floored = &n;
    if (!weakest || n.confidence < weakest->confidence ||
        (n.confidence == weakest->confidence && earlier(n, *weakest))) {
      weakest = &n;
    }
  }

  if (flagged) return {CauseKind::kExceptionFlag, flagged->id, flagged->confidence};
  if (floored) return {CauseKind::kConfidenceFloor, floored->id, floored->confidence};
  const double u = global_uncertainty(committed);
  if (u >= thresholds.tau_u) return {CauseKind::kGlobalUncertainty, weakest->id, u};
  return {};
}

}  // namespace healdag
