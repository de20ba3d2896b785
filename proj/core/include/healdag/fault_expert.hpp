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
#include <memory>
#include <optional>
#include <string_view>

#include "healdag/expert.hpp"

namespace healdag {

enum class FaultMode {
  kException,      // exception flag, confidence 0
  kLowConfidence,  // clean output, confidence below any sane floor
  kMalformed,      // unparseable reply, goes through parse_response
};

std::string_view to_string(FaultMode mode) noexcept;
std::optional<FaultMode> parse_fault_mode(std::string_view text) noexcept;

struct FaultProfile {
  double failure_rate = 0.0;
  FaultMode mode = FaultMode::kException;
  std::uint64_t seed = 0;
  double low_confidence = 0.1;
  // Charged on injected faults (the inner expert is not consulted).
  std::uint64_t tokens_prompt = 16;
  std::uint64_t tokens_completion = 8;
  double wall_time = 0.5;
  // Used when there is no inner expert and no fault fires.
  double healthy_confidence = 0.9;

  bool operator==(const FaultProfile&) const = default;
};

/// Wraps an expert and fails a seeded fraction of its calls. The draw for a
/// call depends only on the seed and the number of prior calls, so runs are
/// replayable.
class FaultInjectingExpert final : public Expert {
 public:
  FaultInjectingExpert(ExpertKind kind, FaultProfile profile, std::shared_ptr<Expert> inner = nullptr);

  ExpertKind kind() const override { return kind_; }
  NodeFeedback execute(const ExpertCall& call) override;
  std::uint64_t injected() const { return injected_; }

 private:
  double next_uniform();

  ExpertKind kind_;
  FaultProfile profile_;
  std::shared_ptr<Expert> inner_;
  std::uint64_t state_;
  std::uint64_t injected_ = 0;
};

}  // namespace healdag
