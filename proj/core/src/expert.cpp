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

#include "healdag/expert.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <regex>
#include <sstream>

#include "healdag/error.hpp"
#include "healdag/log.hpp"

namespace healdag {

using nlohmann::json;
using nlohmann::ordered_json;

ExpertKind kind_of(const ExpertOutput& output) noexcept {
  return static_cast<ExpertKind>(output.index());
}

ExpertOutput empty_output(ExpertKind kind) {
  switch (kind) {
    case ExpertKind::kRag: return RagOutput{};
    case ExpertKind::kLogic: return LogicOutput{};
    case ExpertKind::kExpr: return ExprOutput{};
  }
  throw Error(ErrorCode::kInvalidArgument, "invalid expert kind");
}

std::string normalize_text(std::string_view text) {
  std::string out;
  bool space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::optional<std::string> schema_violation(const ExpertOutput& output) {
  if (const auto* rag = std::get_if<RagOutput>(&output)) {
    for (std::size_t i = 0; i < rag->citations.size(); ++i) {
      const auto& c = rag->citations[i];
      if (c.assertion >= rag->assertions.size() || c.evidence >= rag->evidence.size()) {
        return "citation " + std::to_string(i) + " indexes outside assertions/evidence";
      }
    }
    return std::nullopt;
  }
  if (const auto* logic = std::get_if<LogicOutput>(&output)) {
    if (logic->history.size() != logic->verifications.size()) {
      return "history has " + std::to_string(logic->history.size()) + " steps but " +
             std::to_string(logic->verifications.size()) + " verifications";
    }
    return std::nullopt;
  }
  const auto& expr = std::get<ExprOutput>(output);
  const auto draft = normalize_text(expr.draft);
  for (const auto& u : expr.unsupported) {
    if (u.external) continue;
    if (draft.find(normalize_text(u.text)) == std::string::npos) {
      return "unsupported statement '" + u.text + "' is not a span of the draft";
    }
  }
  return std::nullopt;
}

std::optional<std::string> self_reported_anomaly(const ExpertOutput& output) {
  if (const auto* logic = std::get_if<LogicOutput>(&output)) {
    for (std::size_t i = 0; i < logic->verifications.size(); ++i) {
      if (!logic->verifications[i]) return "verification failed at step " + std::to_string(i);
    }
    return std::nullopt;
  }
  if (const auto* rag = std::get_if<RagOutput>(&output)) {
    if (!rag->assertions.empty() && rag->evidence.empty()) return "retrieval returned no evidence";
    for (std::size_t a = 0; a < rag->assertions.size(); ++a) {
      bool cited = std::any_of(rag->citations.begin(), rag->citations.end(),
                               [&](const Citation& c) { return c.assertion == a; });
      if (!cited) return "assertion " + std::to_string(a) + " has no supporting evidence";
    }
  }
  return std::nullopt;
}

ordered_json output_to_json(const ExpertOutput& output) {
  ordered_json j;
  if (const auto* rag = std::get_if<RagOutput>(&output)) {
    j["assertions"] = rag->assertions;
    j["evidence"] = ordered_json::array();
    for (const auto& e : rag->evidence) {
      j["evidence"].push_back(ordered_json{{"source", e.source_id}, {"text", e.text}});
    }
    j["citations"] = ordered_json::array();
    for (const auto& c : rag->citations) j["citations"].push_back(ordered_json::array({c.assertion, c.evidence}));
  } else if (const auto* logic = std::get_if<LogicOutput>(&output)) {
    j["history"] = logic->history;
    j["verifications"] = ordered_json::array();
    for (bool v : logic->verifications) j["verifications"].push_back(v);
  } else {
    const auto& expr = std::get<ExprOutput>(output);
    j["draft"] = expr.draft;
    j["unsupported"] = ordered_json::array();
    for (const auto& u : expr.unsupported) {
      if (u.external) {
        j["unsupported"].push_back(ordered_json{{"text", u.text}, {"external", true}});
      } else {
        j["unsupported"].push_back(u.text);
      }
    }
  }
  return j;
}

namespace {

[[noreturn]] void bad_output(const std::string& why) { throw Error(ErrorCode::kInvalidArgument, why); }

std::vector<std::string> string_list(const json& j, const char* key) {
  if (!j.contains(key)) return {};
  const auto& arr = j.at(key);
  if (!arr.is_array()) bad_output(std::string("'") + key + "' must be an array");
  std::vector<std::string> out;
  for (const auto& s : arr) {
    if (!s.is_string()) bad_output(std::string("'") + key + "' entries must be strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

std::size_t index_value(const json& j) {
  if (!j.is_number_unsigned()) bad_output("citation indices must be non-negative integers");
  return j.get<std::size_t>();
}

}  // namespace

ExpertOutput output_from_json(const json& j) {
  if (!j.is_object()) bad_output("output must be an object");
  std::optional<ExpertKind> kind;
  if (j.contains("kind")) {
    if (!j["kind"].is_string()) bad_output("'kind' must be a string");
    kind = parse_expert_kind(j["kind"].get<std::string>());
    if (!kind) bad_output("unknown output kind");
  } else if (j.contains("assertions")) {
    kind = ExpertKind::kRag;
  } else if (j.contains("history")) {
    kind = ExpertKind::kLogic;
  } else if (j.contains("draft")) {
    kind = ExpertKind::kExpr;
  } else {
    bad_output("output matches no expert schema");
  }

  switch (*kind) {
    case ExpertKind::kRag: {
      RagOutput rag;
      rag.assertions = string_list(j, "assertions");
      if (j.contains("evidence")) {
        if (!j["evidence"].is_array()) bad_output("'evidence' must be an array");
        for (const auto& e : j["evidence"]) {
          if (e.is_string()) {
            rag.evidence.push_back(Evidence{"", e.get<std::string>()});
          } else if (e.is_object() && e.contains("text") && e["text"].is_string()) {
            std::string source = e.contains("source") && e["source"].is_string() ? e["source"].get<std::string>() : "";
            rag.evidence.push_back(Evidence{source, e["text"].get<std::string>()});
          } else {
            bad_output("evidence entries need a 'text' string");
          }
        }
      }
      if (j.contains("citations")) {
        if (!j["citations"].is_array()) bad_output("'citations' must be an array");
        for (const auto& c : j["citations"]) {
          if (!c.is_array() || c.size() != 2) bad_output("citations are [assertion, evidence] pairs");
          rag.citations.push_back(Citation{index_value(c[0]), index_value(c[1])});
        }
      }
      return rag;
    }
    case ExpertKind::kLogic: {
      LogicOutput logic;
      logic.history = string_list(j, "history");
      if (j.contains("verifications")) {
        if (!j["verifications"].is_array()) bad_output("'verifications' must be an array");
        for (const auto& v : j["verifications"]) {
          if (!v.is_boolean()) bad_output("verifications must be booleans");
          logic.verifications.push_back(v.get<bool>());
        }
      }
      return logic;
    }
    case ExpertKind::kExpr: {
      ExprOutput expr;
      if (!j.contains("draft") || !j["draft"].is_string()) bad_output("'draft' must be a string");
      expr.draft = j["draft"].get<std::string>();
      if (j.contains("unsupported")) {
        if (!j["unsupported"].is_array()) bad_output("'unsupported' must be an array");
        for (const auto& u : j["unsupported"]) {
          if (u.is_string()) {
            expr.unsupported.push_back(UnsupportedStatement{u.get<std::string>(), false});
          } else if (u.is_object() && u.contains("text") && u["text"].is_string()) {
            bool external = u.contains("external") && u["external"].is_boolean() && u["external"].get<bool>();
            expr.unsupported.push_back(UnsupportedStatement{u["text"].get<std::string>(), external});
          } else {
            bad_output("unsupported entries are strings or {text, external}");
          }
        }
      }
      return expr;
    }
  }
  bad_output("unreachable");
}

std::string render_answer(const ExpertOutput& output) {
  if (const auto* expr = std::get_if<ExprOutput>(&output)) return expr->draft;
  if (const auto* rag = std::get_if<RagOutput>(&output)) {
    std::string joined;
    for (const auto& a : rag->assertions) {
      if (!joined.empty()) joined.push_back(' ');
      joined += a;
    }
    return joined;
  }
  const auto& logic = std::get<LogicOutput>(output);
  for (std::size_t i = logic.history.size(); i-- > 0;) {
    if (i < logic.verifications.size() && logic.verifications[i]) return logic.history[i];
  }
  return {};
}

std::uint64_t fingerprint(const ExpertOutput& output) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : output_to_json(output).dump()) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

ordered_json feedback_to_json(const NodeFeedback& feedback) {
  ordered_json j;
  j["output"] = output_to_json(feedback.output);
  j["exception"] = feedback.exception;
  j["confidence"] = feedback.confidence;
  j["tokens_prompt"] = feedback.tokens_prompt;
  j["tokens_completion"] = feedback.tokens_completion;
  j["wall_time"] = feedback.wall_time;
  if (feedback.parse_failure) j["parse_failure"] = true;
  if (!feedback.diagnostic.empty()) j["diagnostic"] = feedback.diagnostic;
  return j;
}

NodeFeedback feedback_from_json(const json& j) {
  NodeFeedback fb;
  fb.output = output_from_json(j.at("output"));
  fb.exception = j.at("exception").get<bool>();
  fb.confidence = j.at("confidence").get<double>();
  fb.tokens_prompt = j.at("tokens_prompt").get<std::uint64_t>();
  fb.tokens_completion = j.at("tokens_completion").get<std::uint64_t>();
  fb.wall_time = j.at("wall_time").get<double>();
  fb.parse_failure = j.value("parse_failure", false);
  fb.diagnostic = j.value("diagnostic", std::string{});
  return fb;
}

void ExpertRegistry::add(std::shared_ptr<Expert> expert) {
  if (!expert) throw Error(ErrorCode::kInvalidArgument, "null expert");
  const auto kind = expert->kind();
  experts_[kind] = std::move(expert);
}

Expert& ExpertRegistry::at(ExpertKind kind) const {
  auto it = experts_.find(kind);
  if (it == experts_.end()) {
    throw Error(ErrorCode::kConfig, "no expert registered for kind " + std::string(to_string(kind)));
  }
  return *it->second;
}

namespace {

double clamp_confidence(double value, bool& clamped) {
  clamped = value < 0.0 || value > 1.0;
  if (clamped) {
    log_warning("confidence " + std::to_string(value) + " outside [0,1]; clamped");
  }
  return std::clamp(value, 0.0, 1.0);
}

bool is_decimal(std::string_view s) {
  static const std::regex kDecimal(R"([-+]?(\d+(\.\d*)?|\.\d+))");
  return std::regex_match(s.begin(), s.end(), kDecimal);
}

}  // namespace

ConfidenceReading parse_confidence(std::string_view raw) {
  static const std::regex kField(R"re("?confidence"?\s*[:=]\s*)re", std::regex::icase);
  ConfidenceReading reading;
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(raw.begin(), raw.end(), m, kField)) {
    reading.parse_failure = true;
    return reading;
  }
  auto pos = static_cast<std::size_t>(m.position(0) + m.length(0));
  bool quoted = pos < raw.size() && raw[pos] == '"';
  if (quoted) ++pos;
  auto end = pos;
  while (end < raw.size() && !std::isspace(static_cast<unsigned char>(raw[end])) && raw[end] != ',' &&
         raw[end] != '}' && raw[end] != '"' && raw[end] != ';') {
    ++end;
  }
  auto token = raw.substr(pos, end - pos);
  if (!is_decimal(token)) {
    reading.parse_failure = true;
    return reading;
  }
  double value = 0.0;
  std::string owned(token.front() == '+' ? token.substr(1) : token);
  auto [ptr, ec] = std::from_chars(owned.data(), owned.data() + owned.size(), value);
  if (ec != std::errc{} || ptr != owned.data() + owned.size()) {
    reading.parse_failure = true;
    return reading;
  }
  reading.value = clamp_confidence(value, reading.clamped);
  return reading;
}

namespace {

NodeFeedback parse_failure_feedback(ExpertKind kind, std::string why) {
  NodeFeedback fb;
  fb.output = empty_output(kind);
  fb.exception = true;
  fb.confidence = 0.0;
  fb.parse_failure = true;
  fb.diagnostic = std::move(why);
  return fb;
}

}  // namespace

NodeFeedback parse_response(ExpertKind kind, std::string_view raw) {
  json j = json::parse(raw.begin(), raw.end(), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded() || !j.is_object()) return parse_failure_feedback(kind, "response is not a JSON object");

  NodeFeedback fb;
  try {
    if (!j.contains("output")) return parse_failure_feedback(kind, "response has no 'output'");
    fb.output = output_from_json(j["output"]);
  } catch (const Error& e) {
    return parse_failure_feedback(kind, e.what());
  }

  if (!j.contains("confidence")) return parse_failure_feedback(kind, "response has no 'confidence'");
  const auto& c = j["confidence"];
  if (c.is_number()) {
    bool clamped = false;
    fb.confidence = clamp_confidence(c.get<double>(), clamped);
  } else if (c.is_string()) {
    auto reading = parse_confidence(c.get<std::string>());
    if (reading.parse_failure) return parse_failure_feedback(kind, "unreadable confidence field");
    fb.confidence = reading.value;
  } else {
    return parse_failure_feedback(kind, "confidence is neither a number nor a field string");
  }

  if (j.contains("exception")) {
    if (!j["exception"].is_boolean()) return parse_failure_feedback(kind, "'exception' must be boolean");
    fb.exception = j["exception"].get<bool>();
  }
  auto read_count = [&](const char* key, std::uint64_t& out) {
    if (j.contains(key) && j[key].is_number_unsigned()) out = j[key].get<std::uint64_t>();
  };
  read_count("tokens_prompt", fb.tokens_prompt);
  read_count("tokens_completion", fb.tokens_completion);
  return finalize_feedback(std::move(fb), kind);
}

NodeFeedback finalize_feedback(NodeFeedback feedback, ExpertKind expected) {
  if (feedback.parse_failure && kind_of(feedback.output) != expected) {
    feedback.output = empty_output(expected);
  }
  if (!feedback.parse_failure && std::isnan(feedback.confidence)) {
    feedback.parse_failure = true;
    feedback.diagnostic = "confidence is NaN";
  }
  if (!feedback.parse_failure && kind_of(feedback.output) != expected) {
    feedback.parse_failure = true;
    feedback.diagnostic = "output schema " + std::string(to_string(kind_of(feedback.output))) +
                          " does not match vertex kind " + std::string(to_string(expected));
    feedback.output = empty_output(expected);
  }
  if (!feedback.parse_failure) {
    if (auto why = schema_violation(feedback.output)) {
      feedback.parse_failure = true;
      feedback.diagnostic = *why;
    }
  }
  if (feedback.parse_failure) {
    feedback.exception = true;
    feedback.confidence = 0.0;
    return feedback;
  }
  bool clamped = false;
  feedback.confidence = clamp_confidence(feedback.confidence, clamped);
  if (auto why = self_reported_anomaly(feedback.output)) {
    feedback.exception = true;
    if (feedback.diagnostic.empty()) feedback.diagnostic = *why;
  }
  return feedback;
}

std::uint64_t estimate_tokens(std::string_view text) {
  std::uint64_t count = 0;
  bool in_token = false;
  for (char c : text) {
    bool space = std::isspace(static_cast<unsigned char>(c));
    if (!space && !in_token) ++count;
    in_token = !space;
  }
  return count;
}

}  // namespace healdag
