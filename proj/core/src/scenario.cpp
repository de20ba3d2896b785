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

#include "healdag/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "healdag/error.hpp"

namespace healdag {

using nlohmann::json;

namespace {

[[noreturn]] void scenario_error(std::string_view source, const std::string& why) {
  throw Error(ErrorCode::kScenarioParse, std::string(source) + ": " + why);
}

std::size_t line_of(std::string_view text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Line of the `occurrence`-th (0-based) appearance of "key" followed by ':'.
std::size_t line_of_key(std::string_view text, const std::string& key, std::size_t occurrence) {
  const std::string needle = "\"" + key + "\"";
  std::size_t pos = 0;
  std::size_t seen = 0;
  while ((pos = text.find(needle, pos)) != std::string_view::npos) {
    auto after = pos + needle.size();
    while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
    if (after < text.size() && text[after] == ':') {
      if (seen++ == occurrence) return line_of(text, pos);
    }
    pos += needle.size();
  }
  return 0;
}

const std::set<std::string, std::less<>> kRecordFields = {"output",        "exception",         "confidence",
                                                          "tokens_prompt", "tokens_completion", "wall_time"};

ScenarioRecord parse_record(const json& r, std::string_view source, const std::string& where) {
  if (!r.is_object()) scenario_error(source, where + ": record must be an object");
  for (const auto& [key, _] : r.items()) {
    if (!kRecordFields.count(key)) scenario_error(source, where + ": unknown field '" + key + "'");
  }

  ScenarioRecord rec;
  NodeFeedback& fb = rec.feedback;

  auto count_field = [&](const char* key, std::uint64_t& out) {
    if (!r.contains(key)) return;
    if (!r[key].is_number_unsigned()) scenario_error(source, where + " field '" + key + "': expected non-negative integer");
    out = r[key].get<std::uint64_t>();
  };
  count_field("tokens_prompt", fb.tokens_prompt);
  count_field("tokens_completion", fb.tokens_completion);
  if (r.contains("wall_time")) {
    if (!r["wall_time"].is_number() || r["wall_time"].get<double>() < 0.0) {
      scenario_error(source, where + " field 'wall_time': expected seconds >= 0");
    }
    fb.wall_time = r["wall_time"].get<double>();
  }
  if (r.contains("exception")) {
    if (!r["exception"].is_boolean()) scenario_error(source, where + " field 'exception': expected boolean");
    fb.exception = r["exception"].get<bool>();
  }

  // From here on, problems are in-protocol parse failures of the scripted
  // expert reply, not errors in the fixture file.
  if (!r.contains("output")) {
    fb.parse_failure = true;
    fb.diagnostic = "record has no output";
  } else if (r["output"].is_string()) {
    rec.raw_response = r["output"].get<std::string>();
  } else {
    try {
      fb.output = output_from_json(r["output"]);
    } catch (const Error& e) {
      fb.parse_failure = true;
      fb.diagnostic = e.what();
    }
  }
  if (!rec.raw_response && !fb.parse_failure) {
    if (!r.contains("confidence")) {
      fb.parse_failure = true;
      fb.diagnostic = "record has no confidence";
    } else if (r["confidence"].is_number()) {
      fb.confidence = r["confidence"].get<double>();
    } else if (r["confidence"].is_string()) {
      auto reading = parse_confidence(r["confidence"].get<std::string>());
      fb.parse_failure = reading.parse_failure;
      fb.confidence = reading.value;
      if (reading.parse_failure) fb.diagnostic = "unreadable confidence field";
    } else {
      fb.parse_failure = true;
      fb.diagnostic = "confidence must be a decimal";
    }
  }
  return rec;
}

}  // namespace

ScenarioTable scenario_from_json(const json& j, std::string_view source) {
  ScenarioTable table;
  if (j.is_null()) return table;
  if (!j.is_object()) scenario_error(source, "top level must be an object mapping node id to records");
  for (const auto& [key, records] : j.items()) {
    NodeId id = NodeId::parse(key);
    if (table.count(id)) scenario_error(source, "duplicate node id '" + key + "'");
    if (!records.is_array()) scenario_error(source, "node '" + key + "': expected a list of records");
    auto& list = table[id];
    for (std::size_t i = 0; i < records.size(); ++i) {
      list.push_back(parse_record(records[i], source, "node '" + key + "' record " + std::to_string(i)));
    }
  }
  return table;
}

ScenarioTable parse_scripted_scenario(std::string_view text, std::string_view source) {
  if (std::all_of(text.begin(), text.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); })) {
    return {};
  }

  // nlohmann keeps the last of duplicate keys silently; catch them here.
  std::vector<std::set<std::string>> open_objects;
  std::optional<std::string> duplicate;
  auto callback = [&](int depth, json::parse_event_t event, json& parsed) {
    switch (event) {
      case json::parse_event_t::object_start:
        open_objects.emplace_back();
        break;
      case json::parse_event_t::object_end:
        if (!open_objects.empty()) open_objects.pop_back();
        break;
      case json::parse_event_t::key:
        if (depth == 1 && !open_objects.empty() && !duplicate) {
          auto key = parsed.get<std::string>();
          if (!open_objects.back().insert(key).second) duplicate = key;
        }
        break;
      default:
        break;
    }
    return true;
  };

  json j;
  try {
    j = json::parse(text.begin(), text.end(), callback);
  } catch (const json::parse_error& e) {
    scenario_error(source, "line " + std::to_string(line_of(text, e.byte > 0 ? e.byte - 1 : 0)) + ": " + e.what());
  }
  if (duplicate) {
    scenario_error(source, "line " + std::to_string(line_of_key(text, *duplicate, 1)) + ": duplicate node id '" +
                               *duplicate + "'");
  }
  return scenario_from_json(j, source);
}

ScenarioTable load_scripted_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open scenario " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scripted_scenario(buf.str(), path.string());
}

NodeId wildcard_node_id() { return NodeId("*"); }

NodeFeedback ScriptedBackend::next(const Vertex& vertex) {
  auto it = table_.find(vertex.id);
  if (it == table_.end()) it = table_.find(wildcard_node_id());
  if (it == table_.end() || it->second.empty()) {
    throw Error(ErrorCode::kMissingFixture, "no scripted feedback for node " + vertex.id.str());
  }
  auto& count = consulted_[vertex.id];
  const auto& records = it->second;
  const ScenarioRecord& rec = records[std::min(count, records.size() - 1)];
  ++count;
  if (rec.raw_response) {
    NodeFeedback fb = parse_response(vertex.kind, *rec.raw_response);
    fb.tokens_prompt = rec.feedback.tokens_prompt;
    fb.tokens_completion = rec.feedback.tokens_completion;
    fb.wall_time = rec.feedback.wall_time;
    return fb;
  }
  return finalize_feedback(rec.feedback, vertex.kind);
}

std::size_t ScriptedBackend::calls(const NodeId& id) const {
  auto it = consulted_.find(id);
  return it == consulted_.end() ? 0 : it->second;
}

NodeFeedback ScriptedExpert::execute(const ExpertCall& call) {
  if (call.vertex.kind != kind_) {
    throw Error(ErrorCode::kInvalidArgument, "vertex " + call.vertex.id.str() + " routed to the wrong expert");
  }
  return backend_->next(call.vertex);
}

ExpertRegistry make_scripted_registry(std::shared_ptr<ScriptedBackend> backend) {
  ExpertRegistry registry;
  for (auto kind : kAllExpertKinds) registry.add(std::make_shared<ScriptedExpert>(kind, backend));
  return registry;
}

}  // namespace healdag
