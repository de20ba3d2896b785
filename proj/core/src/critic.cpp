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

#include "healdag/critic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "healdag/error.hpp"

namespace healdag {

void Trajectory::check() const {
  if (node_count == 0) throw Error(ErrorCode::kInvalidArgument, "trajectory without nodes");
  if (per_node_legality.size() != node_count) {
    throw Error(ErrorCode::kInvalidArgument, "legality vector length differs from node count");
  }
}

namespace {

std::string answer_form(std::string_view text) {
  std::string s = normalize_text(text);
  while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?')) s.pop_back();
  return s;
}

}  // namespace

double ExactMatchGrader::grade(const Trajectory& trajectory) const {
  if (!trajectory.final_answer) return 0.0;
  auto it = key_.find(trajectory.query);
  if (it == key_.end()) return 0.0;
  return answer_form(*trajectory.final_answer) == answer_form(it->second) ? 1.0 : 0.0;
}

double SupportedRatioGrader::grade(const Trajectory& trajectory) const {
  if (!trajectory.final_answer) return 0.0;
  std::vector<Evidence> evidence;
  const ExprOutput* draft = nullptr;
  for (const auto& fb : trajectory.feedbacks) {
    if (fb.exception) continue;
    if (const auto* rag = std::get_if<RagOutput>(&fb.output)) {
      evidence.insert(evidence.end(), rag->evidence.begin(), rag->evidence.end());
    } else if (const auto* expr = std::get_if<ExprOutput>(&fb.output)) {
      draft = expr;
    }
  }
  if (!draft) return 0.0;
  return grade_supported_ratio(*draft, evidence, penalty_);
}

void CriticConfig::check() const {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::kConfig, "critic lambda must be >= 0");
  if (!(gamma >= 0.0)) throw Error(ErrorCode::kConfig, "critic gamma must be >= 0");
  if (!(hallucination_penalty >= 0.0)) throw Error(ErrorCode::kConfig, "hallucination_penalty must be >= 0");
  if (grader != "exact_match" && grader != "supported_ratio") {
    throw Error(ErrorCode::kConfig, "unknown grader '" + grader + "'");
  }
}

std::unique_ptr<TaskGrader> make_grader(const CriticConfig& config) {
  config.check();
  if (config.grader == "supported_ratio") return std::make_unique<SupportedRatioGrader>(config.hallucination_penalty);
  std::map<std::string, std::string> key;
  if (!config.answer_key_path.empty()) {
    std::ifstream in(config.answer_key_path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open answer key " + config.answer_key_path);
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (!j.is_object()) throw Error(ErrorCode::kConfig, "answer key must map query to answer");
    for (const auto& [q, a] : j.items()) {
      if (!a.is_string()) throw Error(ErrorCode::kConfig, "answer for '" + q + "' must be a string");
      key[q] = a.get<std::string>();
    }
  }
  return std::make_unique<ExactMatchGrader>(std::move(key));
}

bool legality(const Vertex& vertex, const TaskGraph& graph) {
  if (graph.contains(vertex.id) && on_cycle(graph, vertex.id)) return false;
  auto it = graph.assignments.find(vertex.id);
  return it == graph.assignments.end() || it->second == vertex.kind;
}

std::vector<bool> legality_vector(const TaskGraph& graph) {
  std::vector<bool> out;
  out.reserve(graph.vertices.size());
  for (const auto& [_, v] : graph.vertices) out.push_back(legality(v, graph));
  return out;
}

double reward(bool all_legal, double phi, std::size_t node_count, std::uint32_t eta, double lambda, double gamma) {
  const double gate = all_legal ? 1.0 : 0.0;
  return gate * phi - lambda * std::log(1.0 + static_cast<double>(node_count) + gamma * static_cast<double>(eta));
}

double reward(const Trajectory& trajectory, const CriticConfig& config, const TaskGrader& grader) {
  return score(trajectory, config, grader).reward;
}

ScoreRow score(const Trajectory& trajectory, const CriticConfig& config, const TaskGrader& grader) {
  trajectory.check();
  ScoreRow row;
  row.id = trajectory.id;
  row.legal = std::all_of(trajectory.per_node_legality.begin(), trajectory.per_node_legality.end(),
                          [](bool b) { return b; });
  row.phi = std::clamp(grader.grade(trajectory), 0.0, 1.0);
  row.node_count = trajectory.node_count;
  row.eta = trajectory.reconstructions;
  row.reward = reward(row.legal, row.phi, row.node_count, row.eta, config.lambda, config.gamma);
  return row;
}

std::vector<std::string> split_propositions(const std::string& draft) {
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    auto first = current.find_first_not_of(" \t\r\n");
    if (first != std::string::npos) {
      auto last = current.find_last_not_of(" \t\r\n");
      out.push_back(current.substr(first, last - first + 1));
    }
    current.clear();
  };
  for (std::size_t i = 0; i < draft.size(); ++i) {
    current.push_back(draft[i]);
    const char c = draft[i];
    if ((c == '.' || c == '!' || c == '?') &&
        (i + 1 == draft.size() || std::isspace(static_cast<unsigned char>(draft[i + 1])))) {
      flush();
    }
  }
  flush();
  return out;
}

double grade_supported_ratio(const ExprOutput& draft, const std::vector<Evidence>& evidence,
                             double hallucination_penalty) {
  const auto propositions = split_propositions(draft.draft);
  if (propositions.empty()) return 0.0;

  std::set<std::string> sources;
  for (const auto& e : evidence) sources.insert(e.source_id);
  std::vector<std::string> unsupported;
  for (const auto& u : draft.unsupported) unsupported.push_back(normalize_text(u.text));

  std::size_t supported = 0;
  for (const auto& p : propositions) {
    bool cited = false;
    for (auto open = p.find('['); open != std::string::npos; open = p.find('[', open + 1)) {
      auto close = p.find(']', open);
      if (close == std::string::npos) break;
      if (sources.count(p.substr(open + 1, close - open - 1))) cited = true;
    }
    const auto norm = normalize_text(p);
    const bool flagged = std::any_of(unsupported.begin(), unsupported.end(), [&](const std::string& u) {
      return !u.empty() && norm.find(u) != std::string::npos;
    });
    if (cited && !flagged) ++supported;
  }
  const double ratio = static_cast<double>(supported) / static_cast<double>(propositions.size());
  return std::max(0.0, ratio - hallucination_penalty * static_cast<double>(draft.unsupported.size()));
}

std::string score_report_csv(const std::vector<ScoreRow>& rows) {
  std::ostringstream out;
  out.precision(10);
  out << "id,phi,legality,node_count,eta,reward\n";
  for (const auto& r : rows) {
    out << r.id << ',' << r.phi << ',' << (r.legal ? 1 : 0) << ',' << r.node_count << ',' << r.eta << ','
        << r.reward << '\n';
  }
  return out.str();
}

}  // namespace healdag
