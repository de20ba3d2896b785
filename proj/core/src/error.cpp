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

#include "healdag/error.hpp"

namespace healdag {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::kUnknownNode: return "UNKNOWN_NODE";
    case ErrorCode::kInvalidDelta: return "INVALID_DELTA";
    case ErrorCode::kExpertUnavailable: return "EXPERT_UNAVAILABLE";
    case ErrorCode::kMissingFixture: return "MISSING_FIXTURE";
    case ErrorCode::kScenarioParse: return "SCENARIO_PARSE_ERROR";
    case ErrorCode::kUnknownModule: return "UNKNOWN_MODULE";
    case ErrorCode::kEmptySet: return "EMPTY_SET";
    case ErrorCode::kEmptyBatch: return "EMPTY_BATCH";
    case ErrorCode::kDivergence: return "DIVERGENCE";
    case ErrorCode::kPlannerRefusal: return "PLANNER_REFUSAL";
    case ErrorCode::kInvalidPlan: return "INVALID_PLAN";
    case ErrorCode::kConfig: return "CONFIG_ERROR";
    case ErrorCode::kReplayMismatch: return "REPLAY_MISMATCH";
    case ErrorCode::kIo: return "IO_ERROR";
  }
  return "UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace healdag
