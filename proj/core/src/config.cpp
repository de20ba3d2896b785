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

#include "healdag/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "healdag/error.hpp"

namespace healdag {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(ExpertMode mode) noexcept {
  switch (mode) {
    case ExpertMode::kScripted: return "scripted";
    case ExpertMode::kFault: return "fault";
    case ExpertMode::kRemote: return "remote";
  }
  return "?";
}

namespace {

[[noreturn]] void bad(const std::string& why) { throw Error(ErrorCode::kConfig, why); }

void only_keys(const json& j, const std::string& section, std::initializer_list<const char*> keys) {
  if (!j.is_object()) bad(section + " must be an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) bad("unknown key '" + key + "' in " + section);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& section) {
  if (!j.contains(key)) return;
  try {
    const auto& v = j[key];
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) bad(section + "." + key + " must be a boolean");
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) bad(section + "." + key + " must be a non-negative integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) bad(section + "." + key + " must be a number");
    } else {
      if (!v.is_string()) bad(section + "." + key + " must be a string");
    }
    out = v.get<T>();
  } catch (const json::exception& e) {
    bad(section + "." + key + ": " + e.what());
  }
}

AdapterModuleConfig module_from_json(const std::string& name, const json& j) {
  const std::string section = "adapters.modules." + name;
  only_keys(j, section, {"rank", "alpha", "dropout", "bytes_per_param", "dims", "hot_load_seconds"});
  AdapterModuleConfig m;
  m.spec.module = name;
  read(j, "rank", m.spec.rank, section);
  read(j, "alpha", m.spec.alpha, section);
  read(j, "dropout", m.spec.dropout, section);
  read(j, "bytes_per_param", m.spec.bytes_per_param, section);
  if (j.contains("hot_load_seconds")) {
    double h = 0.0;
    read(j, "hot_load_seconds", h, section);
    m.spec.hot_load_seconds = h;
  }
  if (!j.contains("dims") || j["dims"].is_object()) {
    DecoderShape shape;
    if (j.contains("dims")) {
      const auto& d = j["dims"];
      only_keys(d, section + ".dims", {"layers", "hidden", "kv", "ffn"});
      read(d, "layers", shape.layers, section + ".dims");
      read(d, "hidden", shape.hidden, section + ".dims");
      read(d, "kv", shape.kv, section + ".dims");
      read(d, "ffn", shape.ffn, section + ".dims");
    }
    m.shape = shape;
    m.spec.dims = decoder_layer_dims(shape.layers, shape.hidden, shape.kv, shape.ffn);
  } else if (j["dims"].is_array()) {
    for (const auto& pair : j["dims"]) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_unsigned() || !pair[1].is_number_unsigned()) {
        bad(section + ".dims entries must be [d, k] pairs");
      }
      m.spec.dims.push_back({pair[0].get<std::uint64_t>(), pair[1].get<std::uint64_t>()});
    }
  } else {
    bad(section + ".dims must be a shape object or a list of [d, k] pairs");
  }
  return m;
}

ordered_json module_to_json(const AdapterModuleConfig& m) {
  ordered_json j;
  j["rank"] = m.spec.rank;
  j["alpha"] = m.spec.alpha;
  j["dropout"] = m.spec.dropout;
  j["bytes_per_param"] = m.spec.bytes_per_param;
  if (m.shape) {
    j["dims"] = {{"layers", m.shape->layers}, {"hidden", m.shape->hidden}, {"kv", m.shape->kv}, {"ffn", m.shape->ffn}};
  } else {
    j["dims"] = ordered_json::array();
    for (const auto& [d, k] : m.spec.dims) j["dims"].push_back({d, k});
  }
  if (m.spec.hot_load_seconds) j["hot_load_seconds"] = *m.spec.hot_load_seconds;
  return j;
}

AdapterModuleConfig default_module(std::string name) {
  AdapterModuleConfig m;
  m.spec = default_adapter_spec(std::move(name));
  m.shape = DecoderShape{};
  return m;
}

}  // namespace

EngineConfig EngineConfig::defaults() {
  EngineConfig c;
  c.adapters.modules.push_back(default_module(std::string(kPlanModule)));
  for (auto kind : kAllExpertKinds) c.adapters.modules.push_back(default_module(module_for(kind)));
  // Same order a parsed `modules` object yields, so configs round-trip.
  std::sort(c.adapters.modules.begin(), c.adapters.modules.end(),
            [](const auto& a, const auto& b) { return a.spec.module < b.spec.module; });
  return c;
}

void EngineConfig::check() const {
  try {
    thresholds.check();
    backbone.check();
    critic.check();
    dpo.check();
  } catch (const Error& e) {
    bad(e.what());
  }
  if (budget.omega_max == 0) bad("budget.omega_max must be positive");
  if (!(adapters.hot_load_seconds > 0.0)) bad("adapters.hot_load_seconds must be positive");
  std::set<std::string> names;
  for (const auto& m : adapters.modules) {
    try {
      check_adapter_spec(m.spec);
    } catch (const Error& e) {
      bad(e.what());
    }
    if (!names.insert(m.spec.module).second) bad("duplicate adapter module " + m.spec.module);
  }
  if (!names.count(std::string(kPlanModule))) bad("adapters.modules lacks PLAN");
  for (auto kind : kAllExpertKinds) {
    if (!names.count(module_for(kind))) bad("adapters.modules lacks " + module_for(kind));
  }
  const auto& f = experts.fault;
  if (!(f.failure_rate >= 0.0 && f.failure_rate <= 1.0)) bad("experts.fault.failure_rate must lie in [0,1]");
  if (!(f.low_confidence >= 0.0 && f.low_confidence <= 1.0)) bad("experts.fault.low_confidence must lie in [0,1]");
  if (!(f.healthy_confidence >= 0.0 && f.healthy_confidence <= 1.0)) {
    bad("experts.fault.healthy_confidence must lie in [0,1]");
  }
  if (!(f.wall_time >= 0.0)) bad("experts.fault.wall_time must be >= 0");
  if (!(experts.remote.timeout_seconds > 0.0)) bad("experts.remote.timeout_seconds must be positive");
}

MemoryModel EngineConfig::memory_model() const {
  MemoryModel model(adapters.backbone_bytes);
  for (const auto& m : adapters.modules) model.register_adapter(m.spec);
  return model;
}

EngineConfig config_from_json(const json& j) {
  EngineConfig c = EngineConfig::defaults();
  if (j.is_null()) return c;
  only_keys(j, "config", {"thresholds", "budget", "adapters", "backbone", "experts", "scenario", "critic", "dpo"});

  if (j.contains("thresholds")) {
    const auto& t = j["thresholds"];
    only_keys(t, "thresholds", {"tau_c", "tau_u"});
    read(t, "tau_c", c.thresholds.tau_c, "thresholds");
    read(t, "tau_u", c.thresholds.tau_u, "thresholds");
  }
  if (j.contains("budget")) {
    const auto& b = j["budget"];
    only_keys(b, "budget", {"omega_max", "replacement_size_cap"});
    read(b, "omega_max", c.budget.omega_max, "budget");
    read(b, "replacement_size_cap", c.budget.replacement_size_cap, "budget");
  }
  if (j.contains("adapters")) {
    const auto& a = j["adapters"];
    only_keys(a, "adapters", {"backbone_bytes", "hot_load_seconds", "modules"});
    read(a, "backbone_bytes", c.adapters.backbone_bytes, "adapters");
    read(a, "hot_load_seconds", c.adapters.hot_load_seconds, "adapters");
    if (a.contains("modules")) {
      if (!a["modules"].is_object()) bad("adapters.modules must map module name to adapter");
      c.adapters.modules.clear();
      for (const auto& [name, m] : a["modules"].items()) c.adapters.modules.push_back(module_from_json(name, m));
    }
  }
  if (j.contains("backbone")) {
    const auto& b = j["backbone"];
    only_keys(b, "backbone", {"name", "parameter_count"});
    read(b, "name", c.backbone.name, "backbone");
    read(b, "parameter_count", c.backbone.parameter_count, "backbone");
  }
  if (j.contains("experts")) {
    const auto& e = j["experts"];
    only_keys(e, "experts", {"mode", "fault", "remote"});
    if (e.contains("mode")) {
      std::string mode;
      read(e, "mode", mode, "experts");
      if (mode == "scripted") c.experts.mode = ExpertMode::kScripted;
      else if (mode == "fault") c.experts.mode = ExpertMode::kFault;
      else if (mode == "remote") c.experts.mode = ExpertMode::kRemote;
      else bad("experts.mode must be scripted, fault or remote");
    }
    if (e.contains("fault")) {
      const auto& f = e["fault"];
      const std::string s = "experts.fault";
      only_keys(f, s, {"failure_rate", "mode", "seed", "low_confidence", "tokens_prompt", "tokens_completion",
                       "wall_time", "healthy_confidence"});
      auto& p = c.experts.fault;
      read(f, "failure_rate", p.failure_rate, s);
      if (f.contains("mode")) {
        std::string mode;
        read(f, "mode", mode, s);
        auto parsed = parse_fault_mode(mode);
        if (!parsed) bad("experts.fault.mode must be exception, low_confidence or malformed");
        p.mode = *parsed;
      }
      read(f, "seed", p.seed, s);
      read(f, "low_confidence", p.low_confidence, s);
      read(f, "tokens_prompt", p.tokens_prompt, s);
      read(f, "tokens_completion", p.tokens_completion, s);
      read(f, "wall_time", p.wall_time, s);
      read(f, "healthy_confidence", p.healthy_confidence, s);
    }
    if (e.contains("remote")) {
      const auto& r = e["remote"];
      only_keys(r, "experts.remote", {"url", "path", "timeout_seconds", "retries"});
      read(r, "url", c.experts.remote.url, "experts.remote");
      read(r, "path", c.experts.remote.path, "experts.remote");
      read(r, "timeout_seconds", c.experts.remote.timeout_seconds, "experts.remote");
      read(r, "retries", c.experts.remote.retries, "experts.remote");
    }
  }
  if (j.contains("scenario")) {
    only_keys(j["scenario"], "scenario", {"seed"});
    read(j["scenario"], "seed", c.scenario_seed, "scenario");
  }
  if (j.contains("critic")) {
    const auto& k = j["critic"];
    only_keys(k, "critic", {"lambda", "gamma", "hallucination_penalty", "grader"});
    read(k, "lambda", c.critic.lambda, "critic");
    read(k, "gamma", c.critic.gamma, "critic");
    read(k, "hallucination_penalty", c.critic.hallucination_penalty, "critic");
    if (k.contains("grader")) {
      const auto& g = k["grader"];
      only_keys(g, "critic.grader", {"kind", "answer_key_path"});
      read(g, "kind", c.critic.grader, "critic.grader");
      read(g, "answer_key_path", c.critic.answer_key_path, "critic.grader");
    }
  }
  if (j.contains("dpo")) {
    try {
      c.dpo = dpo_config_from_json(j["dpo"]);
    } catch (const Error& e) {
      bad(e.what());
    }
  }
  c.check();
  return c;
}

ordered_json config_to_json(const EngineConfig& c) {
  ordered_json j;
  j["thresholds"] = {{"tau_c", c.thresholds.tau_c}, {"tau_u", c.thresholds.tau_u}};
  j["budget"] = {{"omega_max", c.budget.omega_max}, {"replacement_size_cap", c.budget.replacement_size_cap}};
  ordered_json a;
  a["backbone_bytes"] = c.adapters.backbone_bytes;
  a["hot_load_seconds"] = c.adapters.hot_load_seconds;
  a["modules"] = ordered_json::object();
  for (const auto& m : c.adapters.modules) a["modules"][m.spec.module] = module_to_json(m);
  j["adapters"] = std::move(a);
  j["backbone"] = {{"name", c.backbone.name}, {"parameter_count", c.backbone.parameter_count}};

  ordered_json e;
  e["mode"] = std::string(to_string(c.experts.mode));
  const auto& f = c.experts.fault;
  e["fault"] = {{"failure_rate", f.failure_rate},
                {"mode", std::string(to_string(f.mode))},
                {"seed", f.seed},
                {"low_confidence", f.low_confidence},
                {"tokens_prompt", f.tokens_prompt},
                {"tokens_completion", f.tokens_completion},
                {"wall_time", f.wall_time},
                {"healthy_confidence", f.healthy_confidence}};
  const auto& r = c.experts.remote;
  e["remote"] = {{"url", r.url}, {"path", r.path}, {"timeout_seconds", r.timeout_seconds}, {"retries", r.retries}};
  j["experts"] = std::move(e);
  j["scenario"] = {{"seed", c.scenario_seed}};
  j["critic"] = {{"lambda", c.critic.lambda},
                 {"gamma", c.critic.gamma},
                 {"hallucination_penalty", c.critic.hallucination_penalty},
                 {"grader", {{"kind", c.critic.grader}, {"answer_key_path", c.critic.answer_key_path}}}};
  j["dpo"] = dpo_config_to_json(c.dpo);
  return j;
}

EngineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open config " + path.string());
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) bad(path.string() + " is not valid JSON");
  EngineConfig c = config_from_json(j);
  if (!c.critic.answer_key_path.empty()) {
    std::filesystem::path key(c.critic.answer_key_path);
    if (key.is_relative()) c.critic.answer_key_path = (path.parent_path() / key).lexically_normal().string();
  }
  return c;
}

}  // namespace healdag
