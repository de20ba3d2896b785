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

#include "healdag/adapter.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "healdag/error.hpp"

namespace healdag {

std::string module_for(ExpertKind kind) { return std::string(to_string(kind)); }

void check_adapter_spec(const AdapterSpec& spec) {
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::kInvalidArgument, "adapter '" + spec.module + "': " + why);
  };
  if (spec.module.empty()) fail("module name is empty");
  if (spec.rank == 0) fail("rank must be positive");
  if (spec.bytes_per_param == 0) fail("bytes_per_param must be positive");
  if (!(spec.alpha > 0.0)) fail("alpha must be positive");
  if (!(spec.dropout >= 0.0 && spec.dropout < 1.0)) fail("dropout must lie in [0,1)");
  if (spec.dims.empty()) fail("no adapted layers");
  if (spec.hot_load_seconds && !(*spec.hot_load_seconds > 0.0)) fail("hot_load_seconds must be positive");
  for (const auto& [d, k] : spec.dims) {
    if (static_cast<std::uint64_t>(spec.rank) * 8 > std::min(d, k)) {
      fail("rank " + std::to_string(spec.rank) + " is not low-rank for layer " + std::to_string(d) + "x" +
           std::to_string(k));
    }
  }
}

std::uint64_t adapter_bytes(const AdapterSpec& spec) {
  std::uint64_t params = 0;
  for (const auto& [d, k] : spec.dims) params += static_cast<std::uint64_t>(spec.rank) * (d + k);
  return params * spec.bytes_per_param;
}

std::vector<LayerDims> decoder_layer_dims(std::uint32_t layers, std::uint64_t hidden, std::uint64_t kv,
                                          std::uint64_t ffn) {
  std::vector<LayerDims> dims;
  dims.reserve(static_cast<std::size_t>(layers) * 7);
  for (std::uint32_t i = 0; i < layers; ++i) {
    dims.push_back({hidden, hidden});  // q
    dims.push_back({hidden, kv});      // k
    dims.push_back({hidden, kv});      // v
    dims.push_back({hidden, hidden});  // o
    dims.push_back({hidden, ffn});     // gate
    dims.push_back({hidden, ffn});     // up
    dims.push_back({ffn, hidden});     // down
  }
  return dims;
}

AdapterSpec default_adapter_spec(std::string module) {
  AdapterSpec spec;
  spec.module = std::move(module);
  spec.dims = decoder_layer_dims();
  return spec;
}

double SwitchLog::total_cost() const {
  double total = 0.0;
  for (const auto& e : events) total += e.cost;
  return total;
}

void MemoryModel::register_adapter(const AdapterSpec& spec) {
  check_adapter_spec(spec);
  bytes_[spec.module] = healdag::adapter_bytes(spec);
  specs_[spec.module] = spec;
}

bool MemoryModel::has(std::string_view module) const { return specs_.find(module) != specs_.end(); }

const AdapterSpec& MemoryModel::spec(std::string_view module) const {
  auto it = specs_.find(module);
  if (it == specs_.end()) throw Error(ErrorCode::kUnknownModule, "no adapter registered for " + std::string(module));
  return it->second;
}

std::uint64_t MemoryModel::adapter_bytes(std::string_view module) const {
  auto it = bytes_.find(module);
  if (it == bytes_.end()) throw Error(ErrorCode::kUnknownModule, "no adapter registered for " + std::string(module));
  return it->second;
}

std::uint64_t MemoryModel::footprint() const {
  return backbone_bytes_ + (loaded_ ? adapter_bytes(*loaded_) : 0);
}

std::uint64_t MemoryModel::peak_bound() const {
  std::uint64_t largest = 0;
  for (const auto& [_, bytes] : bytes_) largest = std::max(largest, bytes);
  return backbone_bytes_ + largest;
}

AdapterScheduler::AdapterScheduler(MemoryModel model, double hot_load_seconds)
    : model_(std::move(model)), hot_load_seconds_(hot_load_seconds), observed_peak_(model_.footprint()) {
  if (!(hot_load_seconds_ > 0.0) || !std::isfinite(hot_load_seconds_)) {
    throw Error(ErrorCode::kConfig, "hot_load_seconds must be positive");
  }
}

double AdapterScheduler::switch_to(std::string_view module, double now) {
  if (!model_.has(module)) throw Error(ErrorCode::kUnknownModule, "no adapter registered for " + std::string(module));
  if (model_.loaded_ && *model_.loaded_ == module) return 0.0;
  if (!log_.events.empty() && !(now > log_.events.back().timestamp)) {
    throw Error(ErrorCode::kInvalidArgument, "switch timestamps must increase");
  }

  SwitchEvent event;
  event.timestamp = now;
  event.from = model_.loaded_;
  event.to = std::string(module);
  event.cost = model_.spec(module).hot_load_seconds.value_or(hot_load_seconds_);
  model_.loaded_ = event.to;
  event.footprint_bytes = model_.footprint();
  observed_peak_ = std::max(observed_peak_, event.footprint_bytes);
  log_.events.push_back(event);
  return event.cost;
}

std::uint64_t peak_memory(const MemoryModel& model) { return model.peak_bound(); }

std::uint64_t observed_peak(const MemoryModel& model, const SwitchLog& log) {
  std::uint64_t peak = model.backbone_bytes();
  for (const auto& e : log.events) peak = std::max(peak, e.footprint_bytes);
  return peak;
}

std::string memory_trace_csv(const SwitchLog& log) {
  std::ostringstream out;
  out.precision(17);
  out << "timestamp,loaded_module,footprint_bytes\n";
  for (const auto& e : log.events) out << e.timestamp << ',' << e.to << ',' << e.footprint_bytes << '\n';
  return out.str();
}

}  // namespace healdag
