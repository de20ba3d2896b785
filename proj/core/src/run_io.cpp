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

#include "healdag/run_io.hpp"

#include <fstream>
#include <sstream>

#include "healdag/error.hpp"
#include "healdag/fault_expert.hpp"
#include "healdag/graph_io.hpp"
#include "healdag/remote_expert.hpp"

namespace healdag {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr const char* kFormat = "healdag-run/1";

json read_json(const std::filesystem::path& path, ErrorCode code) {
  std::ifstream in(path);
  if (!in) throw Error(code, "cannot open " + path.string());
  json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw Error(code, path.string() + " is not valid JSON");
  return j;
}

ordered_json optional_id(const std::optional<NodeId>& id) { return id ? ordered_json(id->str()) : ordered_json(); }

std::optional<NodeId> optional_id_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return NodeId::parse(j.get<std::string>());
}

ordered_json provenance_json(const std::optional<Provenance>& p) {
  if (!p) return nullptr;
  return {{"entry", p->entry_index}, {"fingerprint", p->fingerprint}};
}

std::optional<Provenance> provenance_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return Provenance{j.at("entry").get<std::size_t>(), j.at("fingerprint").get<std::uint64_t>()};
}

ordered_json ids_json(const std::vector<NodeId>& ids) {
  ordered_json out = ordered_json::array();
  for (const auto& id : ids) out.push_back(id.str());
  return out;
}

std::vector<NodeId> ids_from(const json& j) {
  std::vector<NodeId> out;
  for (const auto& id : j) out.push_back(NodeId::parse(id.get<std::string>()));
  return out;
}

std::string_view outcome_name(ProposalOutcome o) {
  switch (o) {
    case ProposalOutcome::kOk: return "OK";
    case ProposalOutcome::kRefused: return "REFUSED";
    case ProposalOutcome::kInvalid: return "INVALID";
  }
  return "?";
}

ProposalOutcome outcome_from(const std::string& s) {
  if (s == "OK") return ProposalOutcome::kOk;
  if (s == "REFUSED") return ProposalOutcome::kRefused;
  if (s == "INVALID") return ProposalOutcome::kInvalid;
  throw Error(ErrorCode::kConfig, "unknown repair outcome " + s);
}

ordered_json metrics_json(const RunMetrics& m) {
  ordered_json j;
  j["tokens_total"] = m.tokens_total;
  j["tflops"] = m.tflops;
  j["latency_seconds"] = m.latency_seconds;
  j["latency_mode"] = std::string(to_string(m.latency_mode));
  j["peak_memory_bytes"] = m.peak_memory_bytes;
  j["suspensions"] = m.suspensions;
  j["expert_calls"] = m.expert_calls;
  j["planner_calls"] = m.planner_calls;
  j["tokens_by_module"] = ordered_json::object();
  for (const auto& [k, v] : m.tokens_by_module) j["tokens_by_module"][k] = v;
  j["latency_breakdown"] = {
      {"expert_seconds", m.expert_seconds}, {"planner_seconds", m.planner_seconds}, {"switch_seconds", m.switch_seconds}};
  return j;
}

RunMetrics metrics_from(const json& j) {
  RunMetrics m;
  m.tokens_total = j.at("tokens_total").get<std::uint64_t>();
  m.tflops = j.at("tflops").get<double>();
  m.latency_seconds = j.at("latency_seconds").get<double>();
  auto mode = parse_latency_mode(j.at("latency_mode").get<std::string>());
  if (!mode) throw Error(ErrorCode::kConfig, "unknown latency mode");
  m.latency_mode = *mode;
  m.peak_memory_bytes = j.at("peak_memory_bytes").get<std::uint64_t>();
  m.suspensions = j.at("suspensions").get<std::uint32_t>();
  m.expert_calls = j.at("expert_calls").get<std::uint32_t>();
  m.planner_calls = j.at("planner_calls").get<std::uint32_t>();
  for (const auto& [k, v] : j.at("tokens_by_module").items()) m.tokens_by_module[k] = v.get<std::uint64_t>();
  const auto& b = j.at("latency_breakdown");
  m.expert_seconds = b.at("expert_seconds").get<double>();
  m.planner_seconds = b.at("planner_seconds").get<double>();
  m.switch_seconds = b.at("switch_seconds").get<double>();
  return m;
}

ordered_json result_json(const RunResult& r) {
  ordered_json j;
  j["status"] = std::string(to_string(r.status));
  j["answer"] = r.answer ? ordered_json(*r.answer) : ordered_json();
  j["diagnostic"] = r.diagnostic;
  j["fallback_used"] = r.fallback_used;
  j["strict_isolation"] = strict_isolation_check(r);
  j["metrics"] = metrics_json(r.metrics);

  j["repair_log"] = ordered_json::array();
  for (const auto& rec : r.repair_log) {
    ordered_json x;
    x["step"] = rec.step;
    x["cause"] = cause_to_json(rec.cause);
    x["action"] = std::string(to_string(rec.action));
    x["outcome"] = std::string(outcome_name(rec.outcome));
    x["applied"] = rec.applied;
    x["removed"] = ids_json(rec.removed);
    x["added"] = ids_json(rec.added);
    x["graph_version"] = rec.graph_version;
    x["eta"] = rec.eta;
    x["diagnostic"] = rec.diagnostic;
    j["repair_log"].push_back(std::move(x));
  }

  j["events"] = ordered_json::array();
  for (const auto& e : r.events) {
    j["events"].push_back(
        {{"step", e.step}, {"kind", std::string(to_string(e.kind))}, {"node", optional_id(e.node)}, {"detail", e.detail}});
  }

  j["calls"] = ordered_json::array();
  for (const auto& c : r.calls) {
    ordered_json x;
    x["step"] = c.step;
    x["node"] = c.node.str();
    x["kind"] = std::string(to_string(c.kind));
    x["entry"] = c.entry_index;
    x["payloads"] = ordered_json::array();
    for (const auto& p : c.payloads) {
      x["payloads"].push_back(
          {{"source", p.source.str()}, {"provenance", provenance_json(p.provenance)}, {"delivered", p.delivered}});
    }
    x["repair_provenance"] = provenance_json(c.repair_provenance);
    x["fallback"] = c.fallback;
    j["calls"].push_back(std::move(x));
  }

  j["entries"] = ordered_json::array();
  for (const auto& e : r.entries) {
    ordered_json x;
    x["index"] = e.index;
    x["graph_version"] = e.graph_version;
    x["node"] = e.node.str();
    x["status"] = std::string(to_string(e.status));
    x["feedback"] = feedback_to_json(e.feedback);
    j["entries"].push_back(std::move(x));
  }

  j["switch_log"] = ordered_json::array();
  for (const auto& e : r.switch_log.events) {
    j["switch_log"].push_back({{"timestamp", e.timestamp},
                               {"from", e.from ? ordered_json(*e.from) : ordered_json()},
                               {"to", e.to},
                               {"cost", e.cost},
                               {"footprint_bytes", e.footprint_bytes}});
  }

  j["graph_history"] = ordered_json::array();
  for (const auto& g : r.graph_history) j["graph_history"].push_back(graph_to_json(g));
  return j;
}

ExpertKind kind_from(const json& j) {
  auto k = parse_expert_kind(j.get<std::string>());
  if (!k) throw Error(ErrorCode::kConfig, "unknown expert kind");
  return *k;
}

}  // namespace

RunInputs load_run_inputs(const std::filesystem::path& graph, const std::optional<std::filesystem::path>& scenario,
                          const std::optional<std::filesystem::path>& config) {
  RunInputs in;
  in.graph = load_graph_file(graph);
  if (scenario) {
    std::ifstream s(*scenario, std::ios::binary);
    if (!s) throw Error(ErrorCode::kIo, "cannot open scenario " + scenario->string());
    std::ostringstream buf;
    buf << s.rdbuf();
    // Parse once through the strict reader for diagnostics, then keep JSON.
    parse_scripted_scenario(buf.str(), scenario->string());
    const auto text = buf.str();
    in.scenario = text.find_first_not_of(" \t\r\n") == std::string::npos ? json() : json::parse(text);
  }
  if (config) in.config = load_config(*config);
  return in;
}

ExpertRegistry make_registry(const RunInputs& inputs) {
  const auto& experts = inputs.config.experts;
  if (experts.mode == ExpertMode::kRemote) {
    RemoteEndpoint endpoint{experts.remote.url, experts.remote.path, experts.remote.timeout_seconds,
                            experts.remote.retries};
    return make_remote_registry(endpoint);
  }
  auto backend = std::make_shared<ScriptedBackend>(scenario_from_json(inputs.scenario));
  if (experts.mode == ExpertMode::kScripted) return make_scripted_registry(backend);

  const bool scripted_inner = !backend->table().empty();
  ExpertRegistry registry;
  for (auto kind : kAllExpertKinds) {
    std::shared_ptr<Expert> inner;
    if (scripted_inner) inner = std::make_shared<ScriptedExpert>(kind, backend);
    registry.add(std::make_shared<FaultInjectingExpert>(kind, experts.fault, inner));
  }
  return registry;
}

RunResult execute(const RunInputs& inputs) {
  ScriptedPlanner planner(inputs.graph);
  const ExpertRegistry registry = make_registry(inputs);
  const auto mode =
      inputs.config.experts.mode == ExpertMode::kRemote ? LatencyMode::kMeasured : LatencyMode::kSimulated;
  return run(inputs.graph.graph.query, planner, registry, inputs.config, mode);
}

ordered_json run_to_json(const RunInputs& inputs, const RunResult& result) {
  ordered_json j;
  j["format"] = kFormat;
  j["query"] = inputs.graph.graph.query;
  const ordered_json body = result_json(result);
  for (const auto& [k, v] : body.items()) j[k] = v;
  ordered_json in;
  in["graph"] = graph_file_to_json(inputs.graph);
  in["scenario"] = inputs.scenario;
  in["config"] = config_to_json(inputs.config);
  j["inputs"] = std::move(in);
  return j;
}

std::string run_to_text(const RunInputs& inputs, const RunResult& result) {
  return run_to_json(inputs, result).dump(2) + "\n";
}

RunResult run_from_json(const json& j) {
  RunResult r;
  try {
    if (j.at("format") != kFormat) throw Error(ErrorCode::kConfig, "not a run-output document");
    auto status = parse_run_status(j.at("status").get<std::string>());
    if (!status) throw Error(ErrorCode::kConfig, "unknown run status");
    r.status = *status;
    if (!j.at("answer").is_null()) r.answer = j["answer"].get<std::string>();
    r.diagnostic = j.at("diagnostic").get<std::string>();
    r.fallback_used = j.at("fallback_used").get<bool>();
    r.metrics = metrics_from(j.at("metrics"));

    for (const auto& x : j.at("repair_log")) {
      RepairRecord rec;
      rec.step = x.at("step").get<std::size_t>();
      rec.cause = cause_from_json(x.at("cause"));
      auto action = parse_repair_action(x.at("action").get<std::string>());
      if (!action) throw Error(ErrorCode::kConfig, "unknown repair action");
      rec.action = *action;
      rec.outcome = outcome_from(x.at("outcome").get<std::string>());
      rec.applied = x.at("applied").get<bool>();
      rec.removed = ids_from(x.at("removed"));
      rec.added = ids_from(x.at("added"));
      rec.graph_version = x.at("graph_version").get<std::uint64_t>();
      rec.eta = x.at("eta").get<std::uint32_t>();
      rec.diagnostic = x.at("diagnostic").get<std::string>();
      r.repair_log.push_back(std::move(rec));
    }
    for (const auto& x : j.at("events")) {
      RunEvent e;
      e.step = x.at("step").get<std::size_t>();
      auto kind = parse_event_kind(x.at("kind").get<std::string>());
      if (!kind) throw Error(ErrorCode::kConfig, "unknown event kind");
      e.kind = *kind;
      e.node = optional_id_from(x.at("node"));
      e.detail = x.at("detail").get<std::string>();
      r.events.push_back(std::move(e));
    }
    for (const auto& x : j.at("calls")) {
      CallRecord c;
      c.step = x.at("step").get<std::size_t>();
      c.node = NodeId::parse(x.at("node").get<std::string>());
      c.kind = kind_from(x.at("kind"));
      c.entry_index = x.at("entry").get<std::size_t>();
      for (const auto& p : x.at("payloads")) {
        c.payloads.push_back({NodeId::parse(p.at("source").get<std::string>()), provenance_from(p.at("provenance")),
                              p.at("delivered").get<std::uint64_t>()});
      }
      c.repair_provenance = provenance_from(x.at("repair_provenance"));
      c.fallback = x.at("fallback").get<bool>();
      r.calls.push_back(std::move(c));
    }
    for (const auto& x : j.at("entries")) {
      RepositoryEntry e;
      e.index = x.at("index").get<std::size_t>();
      e.graph_version = x.at("graph_version").get<std::uint64_t>();
      e.node = NodeId::parse(x.at("node").get<std::string>());
      auto status = parse_entry_status(x.at("status").get<std::string>());
      if (!status) throw Error(ErrorCode::kConfig, "unknown entry status");
      e.status = *status;
      e.feedback = feedback_from_json(x.at("feedback"));
      r.entries.push_back(std::move(e));
    }
    for (const auto& x : j.at("switch_log")) {
      SwitchEvent e;
      e.timestamp = x.at("timestamp").get<double>();
      if (!x.at("from").is_null()) e.from = x["from"].get<std::string>();
      e.to = x.at("to").get<std::string>();
      e.cost = x.at("cost").get<double>();
      e.footprint_bytes = x.at("footprint_bytes").get<std::uint64_t>();
      r.switch_log.events.push_back(std::move(e));
    }
    for (const auto& g : j.at("graph_history")) r.graph_history.push_back(graph_from_json(g));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("run-output document: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfig) throw;
    throw Error(ErrorCode::kConfig, std::string("run-output document: ") + e.what());
  }
  return r;
}

RunInputs inputs_from_run_json(const json& j) {
  try {
    const auto& in = j.at("inputs");
    RunInputs inputs;
    inputs.graph = graph_file_from_json(in.at("graph"));
    inputs.scenario = in.at("scenario");
    inputs.config = config_from_json(in.at("config"));
    return inputs;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("run-output inputs: ") + e.what());
  }
}

json read_run_file(const std::filesystem::path& path) { return read_json(path, ErrorCode::kIo); }

RunResult replay(const json& recorded, const std::optional<EngineConfig>& config_override) {
  RunInputs inputs = inputs_from_run_json(recorded);
  if (config_override) inputs.config = *config_override;
  if (inputs.config.experts.mode == ExpertMode::kRemote) {
    throw Error(ErrorCode::kConfig, "remote runs are not replayable");
  }
  RunResult fresh;
  try {
    fresh = execute(inputs);
  } catch (const Error& e) {
    // The re-execution asked for a response the recording never had.
    if (e.code() != ErrorCode::kMissingFixture) throw;
    throw Error(ErrorCode::kReplayMismatch, std::string("replay left the recorded fixtures: ") + e.what());
  }
  const json again = json::parse(run_to_json(inputs, fresh).dump());

  const auto& old_events = recorded.at("events");
  const auto& new_events = again.at("events");
  const std::size_t n = std::min(old_events.size(), new_events.size());
  for (std::size_t i = 0; i <= n; ++i) {
    const bool old_end = i == old_events.size();
    const bool new_end = i == new_events.size();
    if (old_end && new_end) break;
    if (old_end || new_end || old_events[i] != new_events[i]) {
      throw Error(ErrorCode::kReplayMismatch,
                  "first divergent event #" + std::to_string(i) + ": recorded " +
                      (old_end ? std::string("<end>") : old_events[i].dump()) + ", replayed " +
                      (new_end ? std::string("<end>") : new_events[i].dump()));
    }
  }
  for (const auto& [key, value] : recorded.items()) {
    if (key == "inputs") continue;
    if (!again.contains(key) || again[key] != value) {
      throw Error(ErrorCode::kReplayMismatch, "replay differs in field '" + key + "'");
    }
  }
  return fresh;
}

}  // namespace healdag
