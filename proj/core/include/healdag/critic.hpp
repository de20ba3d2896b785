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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "healdag/expert.hpp"
#include "healdag/graph.hpp"

namespace healdag {

/// A finished run as the critic sees it. node_count counts the final
/// topology, patch nodes and retained failed nodes included, removed nodes
/// excluded.
struct Trajectory {
  std::string id;
  std::string query;
  std::vector<TaskGraph> graph_history;
  std::size_t node_count = 1;
  std::uint32_t reconstructions = 0;
  std::optional<std::string> final_answer;
  std::vector<bool> per_node_legality;
  std::vector<NodeFeedback> feedbacks;

  /// Throws kInvalidArgument when node_count is zero or legality has the
  /// wrong length.
  void check() const;
};

class TaskGrader {
 public:
  virtual ~TaskGrader() = default;
  /// In [0, 1]; deterministic.
  virtual double grade(const Trajectory& trajectory) const = 0;
};

/// 1 when the normalized final answer equals the key for the query.
class ExactMatchGrader final : public TaskGrader {
 public:
  explicit ExactMatchGrader(std::map<std::string, std::string> answer_key) : key_(std::move(answer_key)) {}
  double grade(const Trajectory& trajectory) const override;

 private:
  std::map<std::string, std::string> key_;
};

/// Scores the last EXPR draft against all evidence retrieved in the run.
class SupportedRatioGrader final : public TaskGrader {
 public:
  explicit SupportedRatioGrader(double hallucination_penalty = 0.1) : penalty_(hallucination_penalty) {}
  double grade(const Trajectory& trajectory) const override;

 private:
  double penalty_;
};

struct CriticConfig {
  double lambda = 0.05;
  double gamma = 1.0;
  double hallucination_penalty = 0.1;
  // "exact_match" or "supported_ratio".
  std::string grader = "exact_match";
  // JSON object mapping query to answer; relative to the config file.
  std::string answer_key_path;

  /// Throws kConfig on negative weights or an unknown grader.
  void check() const;
  bool operator==(const CriticConfig&) const = default;
};

/// Loads the answer key if needed. Throws kConfig / kIo.
std::unique_ptr<TaskGrader> make_grader(const CriticConfig& config);

/// False iff the vertex lies on a cycle of `graph` or its kind differs from
/// the graph's assignment table.
bool legality(const Vertex& vertex, const TaskGraph& graph);

/// Legality of every vertex in `graph`, in id order.
std::vector<bool> legality_vector(const TaskGraph& graph);

/// gate * phi - lambda * ln(1 + node_count + gamma * eta).
double reward(bool all_legal, double phi, std::size_t node_count, std::uint32_t eta, double lambda, double gamma);
double reward(const Trajectory& trajectory, const CriticConfig& config, const TaskGrader& grader);

/// Sentences of `draft`, split after '.', '!' or '?' followed by whitespace
/// or the end of text.
std::vector<std::string> split_propositions(const std::string& draft);

/// A proposition is supported when it carries a `[source_id]` marker naming
/// provided evidence and matches no statement in U. Returns
/// supported / total - penalty * |U|, floored at 0; 0 for an empty draft.
double grade_supported_ratio(const ExprOutput& draft, const std::vector<Evidence>& evidence,
                             double hallucination_penalty = 0.1);

struct ScoreRow {
  std::string id;
  double phi = 0.0;
  bool legal = true;
  std::size_t node_count = 0;
  std::uint32_t eta = 0;
  double reward = 0.0;
};

ScoreRow score(const Trajectory& trajectory, const CriticConfig& config, const TaskGrader& grader);

/// `id,phi,legality,node_count,eta,reward`
std::string score_report_csv(const std::vector<ScoreRow>& rows);

}  // namespace healdag
