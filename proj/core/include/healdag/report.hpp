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
#include <optional>
#include <string>
#include <vector>

#include "healdag/orchestrator.hpp"

namespace healdag {

/// A run plus the label and grader score it is reported under.
struct LabeledRun {
  std::string name;
  RunResult result;
  std::optional<double> acc_proxy;
};

struct ReportRow {
  std::string run;
  std::string mode;
  std::optional<double> acc_proxy;
  std::uint64_t tokens = 0;
  double tflops = 0.0;
  double latency_seconds = 0.0;
  std::uint64_t peak_memory_bytes = 0;
  std::uint32_t eta = 0;
  std::string status;
};

struct ReportTable {
  std::vector<ReportRow> rows;
  // Sums for additive columns, max peak memory and mean accuracy proxy.
  // Absent when there are no rows.
  std::optional<ReportRow> totals;
};

/// Rows keep input order.
ReportTable aggregate(const std::vector<LabeledRun>& runs);

/// `run,mode,acc_proxy,tokens,tflops,latency_s,peak_mem_gb,eta,status`
std::string report_csv(const ReportTable& table);
/// Same columns, space-aligned.
std::string report_text(const ReportTable& table);

/// `run,module,tokens`, modules in name order.
std::string token_breakdown_csv(const std::vector<LabeledRun>& runs);
std::string token_breakdown_svg(const std::vector<LabeledRun>& runs);
/// Step chart of resident footprint over simulated time.
std::string memory_trace_svg(const SwitchLog& log, const std::string& title);

}  // namespace healdag
