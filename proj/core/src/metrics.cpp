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

#include "healdag/metrics.hpp"

#include "healdag/error.hpp"

namespace healdag {

void BackboneSpec::check() const {
  if (parameter_count == 0) throw Error(ErrorCode::kConfig, "backbone parameter_count must be positive");
}

double tflops(std::uint64_t tokens_total, const BackboneSpec& backbone) {
  return 2.0 * static_cast<double>(backbone.parameter_count) * static_cast<double>(tokens_total) / 1e12;
}

std::string_view to_string(LatencyMode mode) noexcept {
  return mode == LatencyMode::kSimulated ? "simulated" : "measured";
}

std::optional<LatencyMode> parse_latency_mode(std::string_view text) noexcept {
  if (text == "simulated") return LatencyMode::kSimulated;
  if (text == "measured") return LatencyMode::kMeasured;
  return std::nullopt;
}

}  // namespace healdag
