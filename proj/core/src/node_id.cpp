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

#include "healdag/node_id.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace healdag {

std::string_view to_string(ExpertKind kind) noexcept {
  switch (kind) {
    case ExpertKind::kRag: return "RAG";
    case ExpertKind::kLogic: return "LOGIC";
    case ExpertKind::kExpr: return "EXPR";
  }
  return "INVALID";
}

std::optional<ExpertKind> parse_expert_kind(std::string_view text) noexcept {
  if (text == "RAG") return ExpertKind::kRag;
  if (text == "LOGIC") return ExpertKind::kLogic;
  if (text == "EXPR") return ExpertKind::kExpr;
  return std::nullopt;
}

bool is_valid(ExpertKind kind) noexcept { return static_cast<std::uint8_t>(kind) <= 2; }

namespace {

std::optional<std::uint32_t> parse_generation(std::string_view digits) {
  if (digits.empty() || !std::all_of(digits.begin(), digits.end(),
                                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    return std::nullopt;
  }
  std::uint32_t value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || value == 0) return std::nullopt;
  return value;
}

}  // namespace

NodeId NodeId::parse(std::string_view rendered) {
  constexpr std::string_view kPatch = "_patch";
  if (auto pos = rendered.rfind(kPatch); pos != std::string_view::npos && pos > 0) {
    auto tail = rendered.substr(pos + kPatch.size());
    if (tail.empty()) return NodeId(std::string(rendered.substr(0, pos)), 1, true);
    if (auto gen = parse_generation(tail); gen && *gen > 1) {
      return NodeId(std::string(rendered.substr(0, pos)), *gen, true);
    }
  }
  if (auto pos = rendered.rfind("_r"); pos != std::string_view::npos && pos > 0) {
    if (auto gen = parse_generation(rendered.substr(pos + 2))) {
      return NodeId(std::string(rendered.substr(0, pos)), *gen, false);
    }
  }
  return NodeId(std::string(rendered));
}

std::string NodeId::str() const {
  if (generation == 0 && !patch) return name;
  if (patch) return generation <= 1 ? name + "_patch" : name + "_patch" + std::to_string(generation);
  return name + "_r" + std::to_string(generation);
}

std::ostream& operator<<(std::ostream& os, const NodeId& id) { return os << id.str(); }

void IdAllocator::observe(const NodeId& id) {
  auto& slot = max_generation_[id.name];
  slot = std::max(slot, id.generation);
}

std::uint32_t IdAllocator::bump(const std::string& name) {
  auto& slot = max_generation_[name];
  return ++slot;
}

NodeId IdAllocator::next_patch(const NodeId& failed) {
  return NodeId(failed.name, bump(failed.name), true);
}

NodeId IdAllocator::next_rebuild(std::string_view name) {
  std::string key(name);
  return NodeId(key, bump(key), false);
}

}  // namespace healdag
