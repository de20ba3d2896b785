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
#include <vector>

#include "healdag/node_id.hpp"

namespace healdag {

inline constexpr std::string_view kPlanModule = "PLAN";

/// Adapter module serving an expert kind: "RAG", "LOGIC" or "EXPR".
std::string module_for(ExpertKind kind);

struct LayerDims {
  std::uint64_t d = 0;
  std::uint64_t k = 0;
  bool operator==(const LayerDims&) const = default;
};

/// Low-rank adapter description. Only rank, dims and bytes_per_param enter
/// the memory arithmetic; alpha and dropout are carried for the record.
struct AdapterSpec {
  std::string module;
  std::uint32_t rank = 8;
  double alpha = 16.0;
  double dropout = 0.05;
  std::vector<LayerDims> dims;
  std::uint32_t bytes_per_param = 4;
  // Overrides the scheduler-wide hot-load cost for this module.
  std::optional<double> hot_load_seconds;

  bool operator==(const AdapterSpec&) const = default;
};

/// Throws kInvalidArgument unless rank > 0, bytes_per_param > 0, dims are
/// non-empty and rank <= min(d, k) / 8 on every layer.
void check_adapter_spec(const AdapterSpec& spec);

/// Sum over layers of rank * (d + k) * bytes_per_param.
std::uint64_t adapter_bytes(const AdapterSpec& spec);

/// q, k, v, o, gate, up and down projections for `layers` decoder layers.
std::vector<LayerDims> decoder_layer_dims(std::uint32_t layers = 32, std::uint64_t hidden = 4096,
                                          std::uint64_t kv = 1024, std::uint64_t ffn = 14336);

/// Rank-8 / alpha-16 adapter over decoder_layer_dims() at fp32.
AdapterSpec default_adapter_spec(std::string module);

struct SwitchEvent {
  double timestamp = 0.0;
  std::optional<std::string> from;
  std::string to;
  double cost = 0.0;
  // Resident bytes once the switch completes.
  std::uint64_t footprint_bytes = 0;

  bool operator==(const SwitchEvent&) const = default;
};

struct SwitchLog {
  std::vector<SwitchEvent> events;

  double total_cost() const;
  bool operator==(const SwitchLog&) const = default;
};

/// Backbone plus at most one resident adapter.
class MemoryModel {
 public:
  explicit MemoryModel(std::uint64_t backbone_bytes = 0) : backbone_bytes_(backbone_bytes) {}

  /// Replaces any earlier spec for the same module.
  void register_adapter(const AdapterSpec& spec);
  bool has(std::string_view module) const;
  const AdapterSpec& spec(std::string_view module) const;
  std::uint64_t adapter_bytes(std::string_view module) const;
  std::size_t size() const { return specs_.size(); }

  std::uint64_t backbone_bytes() const { return backbone_bytes_; }
  const std::optional<std::string>& loaded() const { return loaded_; }
  std::uint64_t footprint() const;
  /// backbone + the largest registered adapter.
  std::uint64_t peak_bound() const;

 private:
  friend class AdapterScheduler;

  std::uint64_t backbone_bytes_;
  std::map<std::string, AdapterSpec, std::less<>> specs_;
  std::map<std::string, std::uint64_t, std::less<>> bytes_;
  std::optional<std::string> loaded_;
};

/// Time-division multiplexing of adapters over the shared backbone.
class AdapterScheduler {
 public:
  AdapterScheduler(MemoryModel model, double hot_load_seconds = 0.8);

  /// Loads `module`, unloading whatever was resident. Returns the charged
  /// cost; a switch to the resident module is free and logs nothing.
  /// Throws kUnknownModule, or kInvalidArgument if `now` does not advance
  /// past the previous event.
  double switch_to(std::string_view module, double now);

  const MemoryModel& model() const { return model_; }
  const SwitchLog& log() const { return log_; }
  double hot_load_seconds() const { return hot_load_seconds_; }
  /// Largest footprint seen so far (the backbone alone before any switch).
  std::uint64_t observed_peak() const { return observed_peak_; }

 private:
  MemoryModel model_;
  double hot_load_seconds_;
  SwitchLog log_;
  std::uint64_t observed_peak_;
};

/// Bound on the footprint of any trace over `model`.
std::uint64_t peak_memory(const MemoryModel& model);

/// Largest footprint recorded in `log`, or the backbone if it is empty.
std::uint64_t observed_peak(const MemoryModel& model, const SwitchLog& log);

/// Rows `timestamp,loaded_module,footprint_bytes`, one per event.
std::string memory_trace_csv(const SwitchLog& log);

}  // namespace healdag
