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

#include "healdag/remote_expert.hpp"

#include <chrono>
#include <cmath>

#include <httplib.h>

#include "healdag/error.hpp"
#include "healdag/log.hpp"

namespace healdag {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json remote_request(const ExpertCall& call) {
  ordered_json j;
  j["node"] = call.vertex.id.str();
  j["kind"] = std::string(to_string(call.vertex.kind));
  j["instruction"] = call.vertex.instruction;
  j["parent_payloads"] = ordered_json::array();
  for (const auto& p : call.parent_payloads) {
    j["parent_payloads"].push_back({{"source", p.source.str()}, {"output", output_to_json(p.output)}});
  }
  j["repair_context"] = call.repair_context ? ordered_json(call.repair_context->text) : ordered_json();
  return j;
}

NodeFeedback RemoteExpert::execute(const ExpertCall& call) {
  if (call.vertex.kind != kind_) {
    throw Error(ErrorCode::kInvalidArgument, "vertex " + call.vertex.id.str() + " routed to the wrong expert");
  }
  const std::string body = remote_request(call).dump();

  httplib::Client client(endpoint_.url);
  const auto timeout = std::chrono::duration<double>(endpoint_.timeout_seconds);
  const auto sec = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout - sec);
  client.set_connection_timeout(sec.count(), usec.count());
  client.set_read_timeout(sec.count(), usec.count());
  client.set_write_timeout(sec.count(), usec.count());

  std::string last_error;
  for (std::uint32_t attempt = 0; attempt <= endpoint_.retries; ++attempt) {
    const auto start = std::chrono::steady_clock::now();
    auto res = client.Post(endpoint_.path, body, "application/json");
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    NodeFeedback fb = parse_response(kind_, res->body);
    fb.wall_time = elapsed;
    json raw = json::parse(res->body, nullptr, false);
    const bool reported = raw.is_object() && (raw.contains("tokens_prompt") || raw.contains("tokens_completion"));
    if (!reported) {
      fb.tokens_prompt = estimate_tokens(body);
      fb.tokens_completion = estimate_tokens(res->body);
    }
    return fb;
  }
  throw Error(ErrorCode::kExpertUnavailable, endpoint_.url + endpoint_.path + " unreachable after " +
                                                 std::to_string(endpoint_.retries + 1) + " attempts: " + last_error);
}

ExpertRegistry make_remote_registry(const RemoteEndpoint& endpoint) {
  ExpertRegistry registry;
  for (auto kind : kAllExpertKinds) registry.add(std::make_shared<RemoteExpert>(kind, endpoint));
  return registry;
}

}  // namespace healdag
