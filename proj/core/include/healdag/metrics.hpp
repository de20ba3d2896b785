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
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace healdag {

struct BackboneSpec {
  std::string name = "llama-3.1-8b";
  std::uint64_t parameter_count = 8'000'000'000ULL;

  /// Throws kConfig when parameter_count is zero.
  void check() const;
  bool operator==(const BackboneSpec&) const = default;
};

/// 2 * parameters * tokens, in teraFLOPs.
double tflops(std::uint64_t tokens_total, const BackboneSpec& backbone);

enum class LatencyMode { kSimulated, kMeasured };

std::string_view to_string(LatencyMode mode) noexcept;
std::optional<LatencyMode> parse_latency_mode(std::string_view text) noexcept;

struct RunMetrics {
  std::uint64_t tokens_total = 0;
  double tflops = 0.0;
  double latency_seconds = 0.0;
  std::uint64_t peak_memory_bytes = 0;
  std::uint32_t suspensions = 0;
  // Expert executions, the fallback call included.
  std::uint32_t expert_calls = 0;
  std::uint32_t planner_calls = 0;
  // Per adapter module; PLAN holds the planner's share.
  std::map<std::string, std::uint64_t> tokens_by_module;
  // Breakdown of latency_seconds.
  double expert_seconds = 0.0;
  double planner_seconds = 0.0;
  double switch_seconds = 0.0;
  LatencyMode latency_mode = LatencyMode::kSimulated;

  bool operator==(const RunMetrics&) const = default;
};

}  // namespace healdag
