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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "healdag/adapter.hpp"
#include "healdag/critic.hpp"
#include "healdag/dpo.hpp"
#include "healdag/evaluator.hpp"
#include "healdag/fault_expert.hpp"
#include "healdag/metrics.hpp"

namespace healdag {

struct BudgetConfig {
  std::uint32_t omega_max = 3;
  // Extra vertices a replacement subgraph may hold beyond the removed
  // closure.
  std::uint32_t replacement_size_cap = 2;
  bool operator==(const BudgetConfig&) const = default;
};

/// Compact form of decoder_layer_dims().
struct DecoderShape {
  std::uint32_t layers = 32;
  std::uint64_t hidden = 4096;
  std::uint64_t kv = 1024;
  std::uint64_t ffn = 14336;
  bool operator==(const DecoderShape&) const = default;
};

struct AdapterModuleConfig {
  AdapterSpec spec;
  // When set, spec.dims was expanded from it and it is what gets written.
  std::optional<DecoderShape> shape;
  bool operator==(const AdapterModuleConfig&) const = default;
};

struct AdaptersConfig {
  std::uint64_t backbone_bytes = 16'500'000'000ULL;
  double hot_load_seconds = 0.8;
  std::vector<AdapterModuleConfig> modules;
  bool operator==(const AdaptersConfig&) const = default;
};

enum class ExpertMode { kScripted, kFault, kRemote };

std::string_view to_string(ExpertMode mode) noexcept;

struct RemoteConfig {
  std::string url = "http://127.0.0.1:8080";
  std::string path = "/execute";
  double timeout_seconds = 30.0;
  std::uint32_t retries = 2;
  bool operator==(const RemoteConfig&) const = default;
};

struct ExpertsConfig {
  ExpertMode mode = ExpertMode::kScripted;
  // Fault mode wraps scripted experts when a scenario is given, synthetic
  // ones otherwise.
  FaultProfile fault;
  RemoteConfig remote;
  bool operator==(const ExpertsConfig&) const = default;
};

struct EngineConfig {
  EvalThresholds thresholds;
  BudgetConfig budget;
  AdaptersConfig adapters;
  BackboneSpec backbone;
  ExpertsConfig experts;
  std::uint64_t scenario_seed = 0;
  CriticConfig critic;
  DpoConfig dpo;

  /// Defaults, with PLAN, RAG, LOGIC and EXPR adapters.
  static EngineConfig defaults();

  /// Throws kConfig.
  void check() const;
  MemoryModel memory_model() const;
  bool operator==(const EngineConfig&) const = default;
};

/// Sections thresholds, budget, adapters, backbone, experts, scenario,
/// critic and dpo; all optional, unknown keys rejected. Throws kConfig.
EngineConfig config_from_json(const nlohmann::json& j);
nlohmann::ordered_json config_to_json(const EngineConfig& config);

/// Relative answer_key_path values resolve against the file's directory.
EngineConfig load_config(const std::filesystem::path& path);

}  // namespace healdag
