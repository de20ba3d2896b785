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
#include <string>

#include <nlohmann/json.hpp>

#include "healdag/expert.hpp"

namespace healdag {

struct RemoteEndpoint {
  // scheme://host:port
  std::string url = "http://127.0.0.1:8080";
  std::string path = "/execute";
  double timeout_seconds = 30.0;
  std::uint32_t retries = 2;
};

/// Request body: {node, kind, instruction, parent_payloads: [{source,
/// output}], repair_context}.
nlohmann::ordered_json remote_request(const ExpertCall& call);

/// One POST per node. The response must carry {output, confidence,
/// exception}; token counts are read when present and estimated from the
/// exchanged text otherwise. wall_time is measured. Throws
/// kExpertUnavailable once every attempt failed to get a 200 reply.
class RemoteExpert final : public Expert {
 public:
  RemoteExpert(ExpertKind kind, RemoteEndpoint endpoint) : kind_(kind), endpoint_(std::move(endpoint)) {}

  ExpertKind kind() const override { return kind_; }
  NodeFeedback execute(const ExpertCall& call) override;

 private:
  ExpertKind kind_;
  RemoteEndpoint endpoint_;
};

ExpertRegistry make_remote_registry(const RemoteEndpoint& endpoint);

}  // namespace healdag
