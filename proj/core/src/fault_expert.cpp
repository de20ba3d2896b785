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

#include "healdag/fault_expert.hpp"

#include "healdag/error.hpp"

namespace healdag {

std::string_view to_string(FaultMode mode) noexcept {
  switch (mode) {
    case FaultMode::kException: return "exception";
    case FaultMode::kLowConfidence: return "low_confidence";
    case FaultMode::kMalformed: return "malformed";
  }
  return "?";
}

std::optional<FaultMode> parse_fault_mode(std::string_view text) noexcept {
  if (text == "exception") return FaultMode::kException;
  if (text == "low_confidence") return FaultMode::kLowConfidence;
  if (text == "malformed") return FaultMode::kMalformed;
  return std::nullopt;
}

FaultInjectingExpert::FaultInjectingExpert(ExpertKind kind, FaultProfile profile, std::shared_ptr<Expert> inner)
    : kind_(kind),
      profile_(profile),
      inner_(std::move(inner)),
      state_(profile.seed ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(kind) + 1))) {
  if (!(profile_.failure_rate >= 0.0 && profile_.failure_rate <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "failure rate must lie in [0,1]");
  }
  if (inner_ && inner_->kind() != kind_) throw Error(ErrorCode::kInvalidArgument, "inner expert kind mismatch");
}

// splitmix64; fixed across standard libraries, unlike <random> distributions.
double FaultInjectingExpert::next_uniform() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-53;
}

namespace {

ExpertOutput echo_output(ExpertKind kind, const std::string& instruction) {
  switch (kind) {
    case ExpertKind::kRag:
      return RagOutput{{instruction}, {Evidence{"synthetic", instruction}}, {Citation{0, 0}}};
    case ExpertKind::kLogic:
      return LogicOutput{{instruction}, {true}};
    case ExpertKind::kExpr:
      return ExprOutput{instruction, {}};
  }
  return LogicOutput{};
}

}  // namespace

NodeFeedback FaultInjectingExpert::execute(const ExpertCall& call) {
  const bool fault = next_uniform() < profile_.failure_rate;
  if (!fault) {
    if (inner_) return inner_->execute(call);
    NodeFeedback fb;
    fb.output = echo_output(kind_, call.vertex.instruction);
    fb.confidence = profile_.healthy_confidence;
    fb.tokens_prompt = profile_.tokens_prompt;
    fb.tokens_completion = profile_.tokens_completion;
    fb.wall_time = profile_.wall_time;
    return finalize_feedback(std::move(fb), call.vertex.kind);
  }

  ++injected_;
  NodeFeedback fb;
  switch (profile_.mode) {
    case FaultMode::kException:
      fb.output = empty_output(call.vertex.kind);
      fb.exception = true;
      fb.confidence = 0.0;
      fb.diagnostic = "injected fault";
      break;
    case FaultMode::kLowConfidence:
      fb.output = echo_output(call.vertex.kind, call.vertex.instruction);
      fb.confidence = profile_.low_confidence;
      break;
    case FaultMode::kMalformed:
      fb = parse_response(call.vertex.kind, "<<garbled reply>>");
      break;
  }
  fb.tokens_prompt = profile_.tokens_prompt;
  fb.tokens_completion = profile_.tokens_completion;
  fb.wall_time = profile_.wall_time;
  return finalize_feedback(std::move(fb), call.vertex.kind);
}

}  // namespace healdag
