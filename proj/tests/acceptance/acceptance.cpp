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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances and runtime limits are pinned below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "healdag/adapter.hpp"
#include "healdag/critic.hpp"
#include "healdag/dpo.hpp"
#include "healdag/evaluator.hpp"
#include "healdag/metrics.hpp"
#include "healdag/orchestrator.hpp"
#include "healdag/run_io.hpp"

namespace healdag {
namespace {

using nlohmann::json;

constexpr double kCriticTolerance = 1e-12;
constexpr double kLn2Tolerance = 1e-12;
constexpr double kGradTolerance = 1e-4;
constexpr double kTflopsTolerance = 0.05;
constexpr double kLossReduction = 0.5;
// Criterion 6c learning rate and beta. The default beta = 0.1 with a 0.05
// step does not reach a 50% reduction in 500 steps on this dataset.
constexpr double kTrainBeta = 0.5;
constexpr double kTrainLearningRate = 0.5;
constexpr std::size_t kCorpusMinimum = 20;

const std::filesystem::path kSourceDir = HEALDAG_SOURCE_DIR;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Outcome memory_bound() {
  const std::uint64_t backbone = 16'500'000'000ULL;
  const std::uint64_t adapter = adapter_bytes(default_adapter_spec("M0"));
  std::vector<std::uint64_t> peaks;
  bool traces_ok = true;
  for (std::size_t n : {1, 4, 16, 64}) {
    MemoryModel m(backbone);
    for (std::size_t i = 0; i < n; ++i) m.register_adapter(default_adapter_spec("M" + std::to_string(i)));
    peaks.push_back(peak_memory(m));
    AdapterScheduler s(m);
    double now = 0.0;
    for (std::size_t step = 0; step < 4 * n; ++step) now += s.switch_to("M" + std::to_string((step * 7) % n), now) + 0.1;
    traces_ok = traces_ok && observed_peak(m, s.log()) <= peaks.back();
  }
  const bool equal = std::all_of(peaks.begin(), peaks.end(), [&](std::uint64_t p) { return p == backbone + adapter; });
  return {equal && traces_ok, "peak=" + std::to_string(peaks[0]) + " bytes for pools 1/4/16/64"};
}

Outcome suspension_oracle() {
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t mismatches = 0, floor_edges = 0, global_edges = 0;
  for (int trial = 0; trial < 10'000; ++trial) {
    const double tau_c = 0.05 + 0.9 * unit(rng);
    double tau_u = 0.05 + 0.9 * unit(rng);
    const std::size_t n = 1 + rng() % 8;
    std::vector<CommittedNode> set;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = trial % 10 == 0 && i == 0 ? tau_c : unit(rng);
      set.push_back({NodeId("n" + std::to_string(i)), unit(rng) < 0.05, c, rng() % 4});
    }
    double sum = 0.0;
    for (const auto& node : set) sum += node.confidence;
    const double u = 1.0 - sum / static_cast<double>(n);
    // Every tenth trial also pins the global threshold to the observed U.
    if (trial % 10 == 5) tau_u = std::clamp(u, 1e-9, 1.0 - 1e-9);

    bool exception = false, floor = false;
    for (const auto& node : set) {
      exception = exception || node.exception;
      floor = floor || node.confidence < tau_c;
      floor_edges += node.confidence == tau_c;
    }
    const bool global = u >= tau_u;
    global_edges += u == tau_u;
    CauseKind expected = CauseKind::kNone;
    if (exception) expected = CauseKind::kExceptionFlag;
    else if (floor) expected = CauseKind::kConfidenceFloor;
    else if (global) expected = CauseKind::kGlobalUncertainty;
    if (check_suspension(set, {tau_c, tau_u}).kind != expected) ++mismatches;
  }
  return {mismatches == 0 && floor_edges > 0 && global_edges > 0,
          "mismatches=" + std::to_string(mismatches) + " c=tau_c cases=" + std::to_string(floor_edges) +
              " U=tau_u cases=" + std::to_string(global_edges)};
}

RunInputs abs_equation() {
  const auto dir = kSourceDir / "scenarios/abs_equation";
  return load_run_inputs(dir / "graph.json", dir / "scenario.json", dir / "config.json");
}

Outcome budget_termination() {
  std::string detail;
  bool pass = true;
  for (std::uint32_t omega : {1u, 3u, 5u}) {
    const auto start = std::chrono::steady_clock::now();
    RunInputs in = abs_equation();
    in.scenario = json::parse(R"({"*": [{"output": "no structure here", "confidence": 0.9}]})");
    in.config.budget.omega_max = omega;
    const RunResult r = execute(in);
    const std::size_t v0 = r.graph_history.front().vertices.size();
    std::size_t max_replacement = 0;
    bool within_cap = true;
    for (const auto& rec : r.repair_log) {
      max_replacement = std::max(max_replacement, rec.added.size());
      if (rec.action == RepairAction::kReconstruct && rec.applied) {
        within_cap = within_cap && rec.added.size() <= rec.removed.size() + in.config.budget.replacement_size_cap;
      }
    }
    const std::size_t bound = v0 + omega * max_replacement + 1;
    const bool ok = r.metrics.suspensions == omega && r.metrics.expert_calls <= bound && within_cap &&
                    (r.status == RunStatus::kDegraded || r.status == RunStatus::kFailed) &&
                    seconds_since(start) < 5.0;
    pass = pass && ok;
    detail += "omega=" + std::to_string(omega) + ":" + std::string(to_string(r.status)) +
              " eta=" + std::to_string(r.metrics.suspensions) + " calls=" + std::to_string(r.metrics.expert_calls) +
              "<=" + std::to_string(bound) + " ";
  }
  detail.pop_back();
  return {pass, detail};
}

Outcome scenario_replay() {
  const RunInputs in = abs_equation();
  const RunResult a = execute(in);
  const RunResult b = execute(in);
  const bool identical = run_to_text(in, a) == run_to_text(in, b);
  std::size_t patch_events = 0;
  bool patch_at_v2 = false;
  for (const auto& e : a.events) {
    if (e.kind == EventKind::kRepair) {
      ++patch_events;
      patch_at_v2 = e.node && *e.node == NodeId("v2");
    }
  }
  const bool patch_record = a.patches() == 1 && a.repair_log.size() == 1;
  const bool has_patch_node = a.graph_history.back().contains(NodeId::parse("v2_patch"));
  const bool pass = a.status == RunStatus::kCompleted && patch_events == 1 && patch_at_v2 && patch_record &&
                    has_patch_node && a.reconstructions() == 0 && identical;
  return {pass, std::string(to_string(a.status)) + " patches=" + std::to_string(a.patches()) +
                    " reconstructions=" + std::to_string(a.reconstructions()) +
                    " byte_identical=" + (identical ? "true" : "false")};
}

class FixedGrader final : public TaskGrader {
 public:
  explicit FixedGrader(double phi) : phi_(phi) {}
  double grade(const Trajectory&) const override { return phi_; }

 private:
  double phi_;
};

Outcome critic_veto() {
  CriticConfig cfg;
  cfg.lambda = 0.1;
  cfg.gamma = 2.0;
  Trajectory t;
  t.node_count = 5;
  t.reconstructions = 2;
  t.per_node_legality = {true, true, false, true, true};
  t.final_answer = "x";
  const double expected = -0.1 * std::log(1.0 + 5.0 + 2.0 * 2.0);
  std::vector<double> rewards;
  for (int i = 0; i <= 10; ++i) rewards.push_back(reward(t, cfg, FixedGrader(i / 10.0)));
  double mean = 0.0, var = 0.0, max_err = 0.0;
  for (double r : rewards) mean += r / static_cast<double>(rewards.size());
  for (double r : rewards) {
    var += (r - mean) * (r - mean);
    max_err = std::max(max_err, std::abs(r - expected));
  }
  bool sublinear = true;
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t n = 1; n <= 1000; ++n) {
    const double p = cfg.lambda * std::log(1.0 + static_cast<double>(n + 1)) -
                     cfg.lambda * std::log(1.0 + static_cast<double>(n));
    const double observed = reward(true, 1.0, n, 0, cfg.lambda, cfg.gamma) - reward(true, 1.0, n + 1, 0, cfg.lambda, cfg.gamma);
    sublinear = sublinear && observed > 0.0 && observed < previous && std::abs(observed - p) < kCriticTolerance;
    previous = observed;
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "max_err=%.3g variance=%.3g sublinear=%s", max_err, var, sublinear ? "true" : "false");
  return {max_err <= kCriticTolerance && var == 0.0 && sublinear, buf};
}

Outcome dpo_correctness() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> w(-1.0, 1.0);
  double ln2_err = 0.0;
  std::size_t grad_fail = 0, grad_checked = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto data = make_random_dataset(seed, 4, 4);
    if (data.pairs.empty()) continue;
    PolicyParams p = PolicyParams::zeros(data.dim);
    for (auto& x : p.reference_weights) x = w(rng);
    p.weights = p.reference_weights;
    ln2_err = std::max(ln2_err, std::abs(dpo_loss(p, data, 0.1) - std::log(2.0)));
    for (auto& x : p.weights) x = w(rng);
    ++grad_checked;
    if (!gradient_check(p, data, 0.5, 1e-5, kGradTolerance).passed) ++grad_fail;
  }

  DpoConfig cfg;
  cfg.beta = kTrainBeta;
  cfg.learning_rate = kTrainLearningRate;
  cfg.steps = 500;
  const auto data = make_fewer_nodes_dataset(1, 32, 4, cfg.epsilon);
  const auto trained = train(cfg, data, PolicyParams::zeros(data.dim));
  const double node_weight = trained.params.weights[static_cast<std::size_t>(Feature::kNodeCount)];
  const double reduction = 1.0 - trained.loss_curve.back() / trained.initial_loss;

  const bool a = ln2_err <= kLn2Tolerance;
  const bool b = grad_checked == 100 && grad_fail == 0;
  const bool c = node_weight < 0.0 && reduction >= kLossReduction;
  char buf[256];
  std::snprintf(buf, sizeof buf, "(a) ln2_err=%.3g (b) grad_fail=%zu/%zu (c) w_nodes=%.4f reduction=%.1f%%", ln2_err,
                grad_fail, grad_checked, node_weight, 100.0 * reduction);
  return {a && b && c && seconds_since(start) < 30.0, buf};
}

Outcome metric_anchors() {
  const double a = tflops(1220, {"8b", 8'000'000'000ULL});
  const double b = tflops(800, {"72b", 72'000'000'000ULL});
  char buf[96];
  std::snprintf(buf, sizeof buf, "tflops(1220, 8e9)=%.4f tflops(800, 72e9)=%.4f", a, b);
  return {std::abs(a - 19.52) <= kTflopsTolerance && std::abs(b - 115.2) <= kTflopsTolerance, buf};
}

// Fault-injection corpus: graph shapes x fault modes x rates x seeds.
std::vector<RunInputs> fault_corpus() {
  const json shapes = json::parse(R"([
    {"query": "chain", "sink": "c", "vertices": [
      {"id": "a", "expert_kind": "RAG", "instruction": "find", "parents": []},
      {"id": "b", "expert_kind": "LOGIC", "instruction": "think", "parents": ["a"]},
      {"id": "c", "expert_kind": "EXPR", "instruction": "say", "parents": ["b"]}]},
    {"query": "diamond", "sink": "d", "vertices": [
      {"id": "a", "expert_kind": "RAG", "instruction": "find", "parents": []},
      {"id": "b", "expert_kind": "LOGIC", "instruction": "left", "parents": ["a"]},
      {"id": "c", "expert_kind": "LOGIC", "instruction": "right", "parents": ["a"]},
      {"id": "d", "expert_kind": "EXPR", "instruction": "say", "parents": ["b", "c"]}]},
    {"query": "wide", "sink": "e", "vertices": [
      {"id": "a", "expert_kind": "RAG", "instruction": "one", "parents": []},
      {"id": "b", "expert_kind": "RAG", "instruction": "two", "parents": []},
      {"id": "c", "expert_kind": "RAG", "instruction": "three", "parents": []},
      {"id": "d", "expert_kind": "LOGIC", "instruction": "merge", "parents": ["a", "b", "c"]},
      {"id": "e", "expert_kind": "EXPR", "instruction": "say", "parents": ["d"]}]}
  ])");
  std::vector<RunInputs> corpus;
  const std::vector<FaultMode> modes = {FaultMode::kException, FaultMode::kLowConfidence, FaultMode::kMalformed};
  std::uint64_t seed = 1;
  for (const auto& shape : shapes) {
    for (FaultMode mode : modes) {
      for (double rate : {0.2, 0.6}) {
        RunInputs in;
        in.graph = graph_file_from_json(shape);
        in.config.experts.mode = ExpertMode::kFault;
        in.config.experts.fault.mode = mode;
        in.config.experts.fault.failure_rate = rate;
        in.config.experts.fault.seed = seed++;
        corpus.push_back(std::move(in));
      }
    }
  }
  // The scripted scenario under injected faults.
  for (double rate : {0.3, 0.7}) {
    RunInputs in = abs_equation();
    // Rebuilt nodes have no fixture of their own.
    in.scenario["*"] = in.scenario["v3"];
    in.config.experts.mode = ExpertMode::kFault;
    in.config.experts.fault.failure_rate = rate;
    in.config.experts.fault.seed = seed++;
    corpus.push_back(std::move(in));
  }
  return corpus;
}

Outcome fault_corpus_check() {
  const auto corpus = fault_corpus();
  std::size_t completed = 0, degraded = 0, failed = 0, bad = 0;
  std::string first_bad;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    try {
      const RunResult r = execute(corpus[i]);
      const json recorded = json::parse(run_to_json(corpus[i], r).dump());
      replay(recorded);
      if (!strict_isolation_check(r)) throw std::runtime_error("isolation check failed");
      completed += r.status == RunStatus::kCompleted;
      degraded += r.status == RunStatus::kDegraded;
      failed += r.status == RunStatus::kFailed;
    } catch (const std::exception& e) {
      if (bad++ == 0) first_bad = "scenario " + std::to_string(i) + ": " + e.what();
    }
  }
  std::string detail = std::to_string(corpus.size()) + " scenarios: completed=" + std::to_string(completed) +
                       " degraded=" + std::to_string(degraded) + " failed=" + std::to_string(failed);
  if (bad) detail += " errors=" + std::to_string(bad) + " (" + first_bad + ")";
  return {corpus.size() >= kCorpusMinimum && bad == 0, detail};
}

}  // namespace
}  // namespace healdag

int main() {
  using namespace healdag;
  struct Criterion {
    std::string name;
    std::function<Outcome()> check;
    double max_seconds;
  };
  const std::vector<Criterion> criteria = {
      {"memory bound", memory_bound, 1.0},
      {"suspension oracle", suspension_oracle, 5.0},
      {"budget termination", budget_termination, 15.0},
      {"scripted repair replay", scenario_replay, 1.0},
      {"critic veto and penalty", critic_veto, 1.0},
      {"dpo correctness", dpo_correctness, 30.0},
      {"metric anchors", metric_anchors, 1.0},
      {"fault-injection corpus", fault_corpus_check, 60.0},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double elapsed = seconds_since(start);
    if (elapsed > criteria[i].max_seconds) {
      o.pass = false;
      o.detail += " (over the " + std::to_string(criteria[i].max_seconds) + "s limit)";
    }
    failures += !o.pass;
    std::printf("%s criterion %zu (%s): %s [%.3fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name.c_str(),
                o.detail.c_str(), elapsed);
  }
  return failures == 0 ? 0 : 1;
}
