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
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "healdag/graph.hpp"

namespace healdag {

// ---------------------------------------------------------------------------
// Output schemas, one per expert kind.
// ---------------------------------------------------------------------------

struct Evidence {
  std::string source_id;
  std::string text;
  bool operator==(const Evidence&) const = default;
};

struct Citation {
  std::size_t assertion = 0;
  std::size_t evidence = 0;
  bool operator==(const Citation&) const = default;
};

/// Assertions A, evidence K and citation provenance C.
struct RagOutput {
  std::vector<std::string> assertions;
  std::vector<Evidence> evidence;
  std::vector<Citation> citations;
  bool operator==(const RagOutput&) const = default;
};

/// Reasoning history H with one verification bit per step.
struct LogicOutput {
  std::vector<std::string> history;
  std::vector<bool> verifications;
  bool operator==(const LogicOutput&) const = default;
};

struct UnsupportedStatement {
  std::string text;
  // Statement does not appear in the draft (e.g. an implied claim).
  bool external = false;
  bool operator==(const UnsupportedStatement&) const = default;
};

/// Draft D plus the self-reported unsupported statements U.
struct ExprOutput {
  std::string draft;
  std::vector<UnsupportedStatement> unsupported;
  bool operator==(const ExprOutput&) const = default;
};

using ExpertOutput = std::variant<RagOutput, LogicOutput, ExprOutput>;

ExpertKind kind_of(const ExpertOutput& output) noexcept;
ExpertOutput empty_output(ExpertKind kind);

/// Lower-cased, with whitespace runs collapsed to one space and trimmed.
std::string normalize_text(std::string_view text);

/// Structural problems only (index bounds, parallel lengths, spans).
std::optional<std::string> schema_violation(const ExpertOutput& output);

/// In-protocol anomalies that force the exception flag: a failed
/// verification step, or RAG assertions left without evidence.
std::optional<std::string> self_reported_anomaly(const ExpertOutput& output);

nlohmann::ordered_json output_to_json(const ExpertOutput& output);
/// Infers the kind from the keys (`assertions` / `history` / `draft`) unless
/// an explicit `kind` field is present. Throws kInvalidArgument on mismatch.
ExpertOutput output_from_json(const nlohmann::json& j);

/// Final-answer text: EXPR draft; RAG assertions joined by a space; LOGIC
/// last verified history entry.
std::string render_answer(const ExpertOutput& output);

/// FNV-1a over the canonical JSON text; used for payload provenance checks.
std::uint64_t fingerprint(const ExpertOutput& output);

// ---------------------------------------------------------------------------
// Feedback tuple and calls.
// ---------------------------------------------------------------------------

struct NodeFeedback {
  ExpertOutput output = LogicOutput{};
  bool exception = false;
  double confidence = 0.0;
  std::uint64_t tokens_prompt = 0;
  std::uint64_t tokens_completion = 0;
  double wall_time = 0.0;
  // Set when the response could not be read structurally; implies exception.
  bool parse_failure = false;
  std::string diagnostic;

  std::uint64_t tokens() const { return tokens_prompt + tokens_completion; }
  bool operator==(const NodeFeedback&) const = default;
};

nlohmann::ordered_json feedback_to_json(const NodeFeedback& feedback);
NodeFeedback feedback_from_json(const nlohmann::json& j);

/// Links a payload back to the repository entry it was materialized from.
struct Provenance {
  std::size_t entry_index = 0;
  std::uint64_t fingerprint = 0;
  bool operator==(const Provenance&) const = default;
};

struct ContextPayload {
  NodeId source;
  ExpertOutput output;
  std::optional<Provenance> provenance;
};

struct RepairContext {
  std::string text;
  std::optional<Provenance> provenance;
};

struct ExpertCall {
  Vertex vertex;
  // Same order as vertex.parents.
  std::vector<ContextPayload> parent_payloads;
  // Only for patch nodes.
  std::optional<RepairContext> repair_context;
};

class Expert {
 public:
  virtual ~Expert() = default;
  virtual ExpertKind kind() const = 0;
  virtual NodeFeedback execute(const ExpertCall& call) = 0;
};

class ExpertRegistry {
 public:
  void add(std::shared_ptr<Expert> expert);
  bool has(ExpertKind kind) const { return experts_.count(kind) != 0; }
  Expert& at(ExpertKind kind) const;

 private:
  std::map<ExpertKind, std::shared_ptr<Expert>> experts_;
};

// ---------------------------------------------------------------------------
// Response parsing.
// ---------------------------------------------------------------------------

struct ConfidenceReading {
  double value = 0.0;
  bool parse_failure = false;
  bool clamped = false;
};

/// Reads the mandatory `confidence: <decimal>` field (`=` and a quoted JSON
/// key are accepted too). Out-of-range values are clamped into [0, 1] with a
/// warning; a missing or non-decimal field reads as 0 with parse_failure.
ConfidenceReading parse_confidence(std::string_view raw);

/// Parses a raw JSON response `{output, confidence, exception, ...}` for an
/// expert of `kind`. Never throws: unreadable input becomes a parse-failure
/// feedback.
NodeFeedback parse_response(ExpertKind kind, std::string_view raw);

/// Normalizes whatever an expert produced for a vertex of `expected`:
/// clamps confidence, checks the schema and kind, applies the self-check.
/// Any parse failure or anomaly sets exception; parse failure also zeroes
/// the confidence.
NodeFeedback finalize_feedback(NodeFeedback feedback, ExpertKind expected);

/// Whitespace token count; fallback accounting for backends that report none.
std::uint64_t estimate_tokens(std::string_view text);

}  // namespace healdag
