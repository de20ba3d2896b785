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

// healdag command-line tool.
//
// Exit codes: 0 completed (or command succeeded), 1 runtime error,
// 2 degraded run, 3 failed run, 4 replay mismatch or failed check,
// 64 bad usage or unreadable input.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "healdag/candidates.hpp"
#include "healdag/config.hpp"
#include "healdag/critic.hpp"
#include "healdag/dpo.hpp"
#include "healdag/error.hpp"
#include "healdag/report.hpp"
#include "healdag/run_io.hpp"

namespace fs = std::filesystem;
using namespace healdag;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitDegraded = 2;
constexpr int kExitFailed = 3;
constexpr int kExitMismatch = 4;
constexpr int kExitUsage = 64;

int exit_for(RunStatus status) {
  switch (status) {
    case RunStatus::kCompleted: return kExitOk;
    case RunStatus::kDegraded: return kExitDegraded;
    case RunStatus::kFailed: return kExitFailed;
  }
  return kExitRuntime;
}

int exit_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kConfig:
    case ErrorCode::kScenarioParse:
    case ErrorCode::kInvalidPlan:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kIo:
      return kExitUsage;
    case ErrorCode::kReplayMismatch:
      return kExitMismatch;
    default:
      return kExitRuntime;
  }
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

std::optional<fs::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

std::optional<double> grade_run(const nlohmann::json& doc, const RunResult& result) {
  try {
    const RunInputs inputs = inputs_from_run_json(doc);
    const auto grader = make_grader(inputs.config.critic);
    return grader->grade(trajectory_of(result, inputs.graph.graph.query));
  } catch (const Error&) {
    // No usable answer key; the column stays empty.
    return std::nullopt;
  }
}

LabeledRun load_labeled(const fs::path& path) {
  const auto doc = read_run_file(path);
  LabeledRun lr;
  lr.result = run_from_json(doc);
  lr.acc_proxy = grade_run(doc, lr.result);
  lr.name = path.parent_path().filename().string();
  if (lr.name.empty() || path.filename() != "run.json") lr.name = path.stem().string();
  return lr;
}

std::vector<fs::path> find_runs(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIo, dir.string() + " is not a directory");
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() == "run.json") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------

struct RunArgs {
  std::string graph, scenario, config, out = "out";
};

int cmd_run(const RunArgs& a) {
  const RunInputs inputs = load_run_inputs(a.graph, opt_path(a.scenario), opt_path(a.config));
  const RunResult result = execute(inputs);
  const fs::path out(a.out);
  write_file(out / "run.json", run_to_text(inputs, result));
  write_file(out / "memory_trace.csv", memory_trace_csv(result.switch_log));
  std::cout << to_string(result.status);
  if (result.answer) std::cout << ": " << *result.answer;
  std::cout << "\n";
  std::cout << "tokens=" << result.metrics.tokens_total << " eta=" << result.metrics.suspensions
            << " expert_calls=" << result.metrics.expert_calls << "\n";
  return exit_for(result.status);
}

struct ReplayArgs {
  std::string run, config;
};

int cmd_replay(const ReplayArgs& a) {
  const auto doc = read_run_file(a.run);
  std::optional<EngineConfig> override_cfg;
  if (!a.config.empty()) override_cfg = load_config(a.config);
  const RunResult fresh = replay(doc, override_cfg);
  std::cout << "replay identical: " << to_string(fresh.status) << ", " << fresh.events.size() << " events\n";
  return kExitOk;
}

struct ReportArgs {
  std::vector<std::string> runs;
  std::string format = "table";
};

int cmd_report(const ReportArgs& a) {
  std::vector<LabeledRun> runs;
  for (const auto& r : a.runs) {
    if (fs::is_directory(r)) {
      for (const auto& p : find_runs(r)) runs.push_back(load_labeled(p));
    } else {
      runs.push_back(load_labeled(r));
    }
  }
  const ReportTable table = aggregate(runs);
  std::cout << (a.format == "csv" ? report_csv(table) : report_text(table));
  return kExitOk;
}

struct PlotArgs {
  std::string runs, out;
};

int cmd_plot(const PlotArgs& a) {
  const fs::path out = a.out.empty() ? fs::path(a.runs) : fs::path(a.out);
  std::vector<LabeledRun> runs;
  for (const auto& p : find_runs(a.runs)) {
    LabeledRun lr = load_labeled(p);
    write_file(out / ("memory_trace_" + lr.name + ".csv"), memory_trace_csv(lr.result.switch_log));
    write_file(out / ("memory_trace_" + lr.name + ".svg"),
               memory_trace_svg(lr.result.switch_log, "resident memory: " + lr.name));
    runs.push_back(std::move(lr));
  }
  write_file(out / "token_breakdown.csv", token_breakdown_csv(runs));
  write_file(out / "token_breakdown.svg", token_breakdown_svg(runs));
  std::cout << "plotted " << runs.size() << " run(s) into " << out.string() << "\n";
  return kExitOk;
}

struct TrainArgs {
  std::string pairs, config, out = "train_out";
  std::optional<double> beta, lr;
  std::optional<std::uint32_t> steps;
};

int cmd_train(const TrainArgs& a) {
  std::ifstream in(a.pairs);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + a.pairs);
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::kConfig, a.pairs + " is not valid JSON");
  const PreferenceDataset data = dataset_from_json(j);

  DpoConfig cfg = a.config.empty() ? DpoConfig{} : load_config(a.config).dpo;
  if (a.beta) cfg.beta = *a.beta;
  if (a.lr) cfg.learning_rate = *a.lr;
  if (a.steps) cfg.steps = *a.steps;
  cfg.check();

  const TrainResult result = train(cfg, data, PolicyParams::zeros(data.dim));
  write_file(fs::path(a.out) / "training_report.json", training_report(cfg, result).dump(2) + "\n");
  const double final_loss = result.loss_curve.empty() ? result.initial_loss : result.loss_curve.back();
  std::printf("loss %.6f -> %.6f over %u steps\n", result.initial_loss, final_loss, cfg.steps);
  for (std::size_t i = 0; i < result.params.weights.size(); ++i) {
    const std::string name = i < kFeatureNames.size() ? std::string(kFeatureNames[i]) : "f" + std::to_string(i);
    std::printf("  %-16s % .6f\n", name.c_str(), result.params.weights[i]);
  }
  return kExitOk;
}

struct GradArgs {
  std::uint64_t seed = 0;
  double beta = 0.1;
  std::size_t queries = 4, candidates = 4;
};

int cmd_gradcheck(const GradArgs& a) {
  const PreferenceDataset data = make_random_dataset(a.seed, a.queries, a.candidates);
  PolicyParams params = PolicyParams::zeros(data.dim);
  // Move off the reference point so the check is not trivially symmetric.
  const PreferenceDataset shifted = make_random_dataset(a.seed + 1, 1, 2);
  for (std::size_t i = 0; i < data.dim; ++i) params.weights[i] = shifted.sets[0].features[0][i];
  const GradientCheck check = gradient_check(params, data, a.beta);
  std::printf("seed %llu: max relative error %.3e (%s)\n", static_cast<unsigned long long>(a.seed),
              check.max_relative_error, check.passed ? "ok" : "FAIL");
  return check.passed ? kExitOk : kExitMismatch;
}

struct PairsArgs {
  std::string config, out = "pairs.json", scores;
  std::size_t queries = 8;
  double failure_rate = 0.1;
};

int cmd_generate_pairs(const PairsArgs& a) {
  CandidateGenConfig gen;
  if (!a.config.empty()) gen.engine = load_config(a.config);
  gen.queries = a.queries;
  gen.expert_failure_rate = a.failure_rate;
  const GeneratedCandidates out = generate_candidates(gen);
  write_file(a.out, dataset_to_json(out.dataset).dump(2) + "\n");
  if (!a.scores.empty()) write_file(a.scores, score_report_csv(out.scores));
  std::cout << out.dataset.sets.size() << " candidate sets, " << out.dataset.pairs.size() << " pairs -> " << a.out
            << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"healdag: self-healing task-graph engine"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Execute a task graph");
  run->add_option("--graph", run_args.graph, "Graph file")->required()->check(CLI::ExistingFile);
  run->add_option("--scenario", run_args.scenario, "Scripted expert fixtures")->check(CLI::ExistingFile);
  run->add_option("--config", run_args.config, "Engine config")->check(CLI::ExistingFile);
  run->add_option("--out", run_args.out, "Output directory")->capture_default_str();

  ReplayArgs replay_args;
  auto* rep = app.add_subcommand("replay", "Re-execute a recorded run and compare");
  rep->add_option("--run", replay_args.run, "run.json")->required()->check(CLI::ExistingFile);
  rep->add_option("--config", replay_args.config, "Override config")->check(CLI::ExistingFile);

  ReportArgs report_args;
  auto* report = app.add_subcommand("report", "Comparison table over runs");
  report->add_option("--run", report_args.runs, "run.json files or directories")->required()->check(
      CLI::ExistingPath);
  report->add_option("--format", report_args.format)->check(CLI::IsMember({"table", "csv"}))->capture_default_str();

  PlotArgs plot_args;
  auto* plot = app.add_subcommand("plot", "Memory-trace and token-breakdown charts");
  plot->add_option("--runs", plot_args.runs, "Directory searched for run.json")->required()->check(
      CLI::ExistingDirectory);
  plot->add_option("--out", plot_args.out, "Output directory (default: --runs)");

  TrainArgs train_args;
  auto* tr = app.add_subcommand("train-planner", "DPO over a preference dataset");
  tr->add_option("--pairs", train_args.pairs, "Preference dataset")->required()->check(CLI::ExistingFile);
  tr->add_option("--config", train_args.config, "Engine config (dpo section)")->check(CLI::ExistingFile);
  tr->add_option("--out", train_args.out)->capture_default_str();
  tr->add_option("--beta", train_args.beta);
  tr->add_option("--lr", train_args.lr);
  tr->add_option("--steps", train_args.steps);

  GradArgs grad_args;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of the DPO gradient");
  gc->add_option("--seed", grad_args.seed)->capture_default_str();
  gc->add_option("--beta", grad_args.beta)->capture_default_str();
  gc->add_option("--queries", grad_args.queries)->capture_default_str();
  gc->add_option("--candidates", grad_args.candidates)->capture_default_str();

  PairsArgs pairs_args;
  auto* gp = app.add_subcommand("generate-pairs", "Sample, score and pair candidate trajectories");
  gp->add_option("--config", pairs_args.config, "Engine config")->check(CLI::ExistingFile);
  gp->add_option("--queries", pairs_args.queries)->capture_default_str();
  gp->add_option("--failure-rate", pairs_args.failure_rate)->capture_default_str();
  gp->add_option("--out", pairs_args.out)->capture_default_str();
  gp->add_option("--scores", pairs_args.scores, "Also write the critic score report (CSV)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*rep) return cmd_replay(replay_args);
    if (*report) return cmd_report(report_args);
    if (*plot) return cmd_plot(plot_args);
    if (*tr) return cmd_train(train_args);
    if (*gc) return cmd_gradcheck(grad_args);
    if (*gp) return cmd_generate_pairs(pairs_args);
  } catch (const Error& e) {
    std::cerr << "healdag: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_for(e);
  } catch (const std::exception& e) {
    std::cerr << "healdag: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
