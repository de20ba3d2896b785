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

#include "healdag/report.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace healdag {

namespace {

std::string fmt(const char* spec, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, value);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

constexpr std::array<const char*, 9> kColumns = {"run",    "mode",        "acc_proxy", "tokens", "tflops",
                                                  "latency_s", "peak_mem_gb", "eta",       "status"};

std::vector<std::string> cells(const ReportRow& r) {
  return {r.run,
          r.mode,
          r.acc_proxy ? fmt("%.4f", *r.acc_proxy) : std::string(),
          std::to_string(r.tokens),
          fmt("%.4f", r.tflops),
          fmt("%.3f", r.latency_seconds),
          fmt("%.6f", static_cast<double>(r.peak_memory_bytes) / 1e9),
          std::to_string(r.eta),
          r.status};
}

std::vector<std::vector<std::string>> all_cells(const ReportTable& table) {
  std::vector<std::vector<std::string>> out;
  out.emplace_back(kColumns.begin(), kColumns.end());
  for (const auto& r : table.rows) out.push_back(cells(r));
  if (table.totals) out.push_back(cells(*table.totals));
  return out;
}

}  // namespace

ReportTable aggregate(const std::vector<LabeledRun>& runs) {
  ReportTable table;
  if (runs.empty()) return table;
  ReportRow total;
  total.run = "TOTAL";
  double acc_sum = 0.0;
  std::size_t acc_n = 0;
  for (const auto& lr : runs) {
    const RunMetrics& m = lr.result.metrics;
    ReportRow row;
    row.run = lr.name;
    row.mode = std::string(to_string(m.latency_mode));
    row.acc_proxy = lr.acc_proxy;
    row.tokens = m.tokens_total;
    row.tflops = m.tflops;
    row.latency_seconds = m.latency_seconds;
    row.peak_memory_bytes = m.peak_memory_bytes;
    row.eta = m.suspensions;
    row.status = std::string(to_string(lr.result.status));

    total.tokens += row.tokens;
    total.tflops += row.tflops;
    total.latency_seconds += row.latency_seconds;
    total.peak_memory_bytes = std::max(total.peak_memory_bytes, row.peak_memory_bytes);
    total.eta += row.eta;
    if (row.acc_proxy) {
      acc_sum += *row.acc_proxy;
      ++acc_n;
    }
    table.rows.push_back(std::move(row));
  }
  if (acc_n > 0) total.acc_proxy = acc_sum / static_cast<double>(acc_n);
  table.totals = std::move(total);
  return table;
}

std::string report_csv(const ReportTable& table) {
  std::ostringstream os;
  for (const auto& row : all_cells(table)) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_field(row[i]);
    os << "\n";
  }
  return os.str();
}

std::string report_text(const ReportTable& table) {
  const auto rows = all_cells(table);
  std::vector<std::size_t> width(kColumns.size(), 0);
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  }
  std::ostringstream os;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) line += "  ";
      // Text columns left-aligned, numbers right-aligned.
      const bool text = i == 0 || i == 1 || i == row.size() - 1;
      const std::string pad(width[i] - row[i].size(), ' ');
      line += text ? row[i] + pad : pad + row[i];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    os << line << "\n";
  }
  return os.str();
}

std::string token_breakdown_csv(const std::vector<LabeledRun>& runs) {
  std::ostringstream os;
  os << "run,module,tokens\n";
  for (const auto& lr : runs) {
    for (const auto& [module, tokens] : lr.result.metrics.tokens_by_module) {
      os << csv_field(lr.name) << "," << csv_field(module) << "," << tokens << "\n";
    }
  }
  return os.str();
}

std::string token_breakdown_svg(const std::vector<LabeledRun>& runs) {
  constexpr double kWidth = 640, kHeight = 360, kLeft = 60, kBottom = 40, kTop = 30;
  static const std::map<std::string, const char*> kPalette = {
      {"EXPR", "#4e79a7"}, {"LOGIC", "#f28e2b"}, {"PLAN", "#59a14f"}, {"RAG", "#e15759"}};

  std::uint64_t max_total = 1;
  std::set<std::string> modules;
  for (const auto& lr : runs) {
    std::uint64_t sum = 0;
    for (const auto& [m, t] : lr.result.metrics.tokens_by_module) {
      sum += t;
      modules.insert(m);
    }
    max_total = std::max(max_total, sum);
  }
  const double plot_h = kHeight - kBottom - kTop;
  const double slot = runs.empty() ? 0.0 : (kWidth - kLeft - 20) / static_cast<double>(runs.size());

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
  os << "<text x=\"" << kLeft << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">tokens by module</text>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - 10 << "\" y2=\""
     << kHeight - kBottom << "\" stroke=\"black\"/>\n";
  os << "<text x=\"4\" y=\"" << kTop + 10 << "\" font-family=\"sans-serif\" font-size=\"10\">" << max_total
     << "</text>\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    double y = kHeight - kBottom;
    const double x = kLeft + slot * static_cast<double>(i) + slot * 0.15;
    for (const auto& [module, tokens] : runs[i].result.metrics.tokens_by_module) {
      const double h = plot_h * static_cast<double>(tokens) / static_cast<double>(max_total);
      y -= h;
      auto colour = kPalette.find(module);
      os << "<rect x=\"" << fmt("%.2f", x) << "\" y=\"" << fmt("%.2f", y) << "\" width=\"" << fmt("%.2f", slot * 0.7)
         << "\" height=\"" << fmt("%.2f", h) << "\" fill=\"" << (colour != kPalette.end() ? colour->second : "#999")
         << "\"><title>" << xml_escape(runs[i].name + " " + module + " " + std::to_string(tokens))
         << "</title></rect>\n";
    }
    os << "<text x=\"" << fmt("%.2f", x) << "\" y=\"" << kHeight - kBottom + 14
       << "\" font-family=\"sans-serif\" font-size=\"10\">" << xml_escape(runs[i].name) << "</text>\n";
  }
  double lx = kLeft;
  for (const auto& m : modules) {
    auto colour = kPalette.find(m);
    os << "<rect x=\"" << lx << "\" y=\"" << kHeight - 14 << "\" width=\"10\" height=\"10\" fill=\""
       << (colour != kPalette.end() ? colour->second : "#999") << "\"/>";
    os << "<text x=\"" << lx + 14 << "\" y=\"" << kHeight - 5 << "\" font-family=\"sans-serif\" font-size=\"10\">"
       << xml_escape(m) << "</text>\n";
    lx += 70;
  }
  os << "</svg>\n";
  return os.str();
}

std::string memory_trace_svg(const SwitchLog& log, const std::string& title) {
  constexpr double kWidth = 640, kHeight = 300, kLeft = 70, kBottom = 30, kTop = 30, kRight = 20;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
  os << "<text x=\"" << kLeft << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">" << xml_escape(title)
     << "</text>\n";
  os << "<line x1=\"" << kLeft << "\" y1=\"" << kHeight - kBottom << "\" x2=\"" << kWidth - kRight << "\" y2=\""
     << kHeight - kBottom << "\" stroke=\"black\"/>\n";
  if (!log.events.empty()) {
    std::uint64_t lo = log.events.front().footprint_bytes, hi = lo;
    for (const auto& e : log.events) {
      lo = std::min(lo, e.footprint_bytes);
      hi = std::max(hi, e.footprint_bytes);
    }
    const double t0 = log.events.front().timestamp;
    const double t1 = log.events.back().timestamp + log.events.back().cost;
    const double span_t = t1 > t0 ? t1 - t0 : 1.0;
    // Anchor the axis a little below the smallest footprint so steps show.
    const double base = static_cast<double>(lo) * 0.999;
    const double span_b = std::max(static_cast<double>(hi) - base, 1.0);
    auto px = [&](double t) { return kLeft + (kWidth - kLeft - kRight) * (t - t0) / span_t; };
    auto py = [&](double b) { return kHeight - kBottom - (kHeight - kBottom - kTop) * (b - base) / span_b; };

    os << "<polyline fill=\"none\" stroke=\"#4e79a7\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < log.events.size(); ++i) {
      const auto& e = log.events[i];
      const double next = i + 1 < log.events.size() ? log.events[i + 1].timestamp : t1;
      const double y = py(static_cast<double>(e.footprint_bytes));
      os << fmt("%.2f", px(e.timestamp)) << "," << fmt("%.2f", y) << " " << fmt("%.2f", px(next)) << ","
         << fmt("%.2f", y) << " ";
    }
    os << "\"/>\n";
    for (const auto& e : log.events) {
      os << "<text x=\"" << fmt("%.2f", px(e.timestamp)) << "\" y=\""
         << fmt("%.2f", py(static_cast<double>(e.footprint_bytes)) - 4)
         << "\" font-family=\"sans-serif\" font-size=\"9\">" << xml_escape(e.to) << "</text>\n";
    }
    os << "<text x=\"4\" y=\"" << fmt("%.2f", py(static_cast<double>(hi)) + 4)
       << "\" font-family=\"sans-serif\" font-size=\"10\">" << fmt("%.4f GB", static_cast<double>(hi) / 1e9)
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace healdag
