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

#include <benchmark/benchmark.h>

#include <random>

#include "healdag/dpo.hpp"
#include "healdag/evaluator.hpp"
#include "healdag/graph.hpp"
#include "healdag/run_io.hpp"

namespace {

using namespace healdag;

// Layered DAG: `width` nodes per layer, each wired to every node below.
TaskGraph layered(std::size_t layers, std::size_t width) {
  std::vector<Vertex> vs;
  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t w = 0; w < width; ++w) {
      Vertex v;
      v.id = NodeId("n" + std::to_string(l) + "_" + std::to_string(w));
      v.kind = ExpertKind::kLogic;
      v.instruction = "step";
      if (l > 0) {
        for (std::size_t p = 0; p < width; ++p) v.parents.push_back(NodeId("n" + std::to_string(l - 1) + "_" + std::to_string(p)));
      }
      vs.push_back(std::move(v));
    }
  }
  Vertex sink;
  sink.id = NodeId("sink");
  sink.kind = ExpertKind::kExpr;
  sink.instruction = "say";
  for (std::size_t w = 0; w < width; ++w) sink.parents.push_back(NodeId("n" + std::to_string(layers - 1) + "_" + std::to_string(w)));
  vs.push_back(std::move(sink));
  return TaskGraph::from_vertices("bench", vs, NodeId("sink"));
}

void BM_Validate(benchmark::State& state) {
  const TaskGraph g = layered(static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(validate(g));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Validate)->RangeMultiplier(4)->Range(4, 256)->Complexity();

void BM_TopologicalRanks(benchmark::State& state) {
  const TaskGraph g = layered(static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(topological_ranks(g));
}
BENCHMARK(BM_TopologicalRanks)->RangeMultiplier(4)->Range(4, 256);

void BM_CheckSuspension(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<CommittedNode> set;
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    set.push_back({NodeId("n" + std::to_string(i)), false, 0.4 + 0.6 * unit(rng), static_cast<std::size_t>(i)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(check_suspension(set, {}));
}
BENCHMARK(BM_CheckSuspension)->RangeMultiplier(8)->Range(8, 4096);

void BM_DpoGradient(benchmark::State& state) {
  const auto data = make_fewer_nodes_dataset(1, static_cast<std::size_t>(state.range(0)), 4, 0.05);
  const PolicyParams p = PolicyParams::zeros(data.dim);
  for (auto _ : state) benchmark::DoNotOptimize(dpo_gradient(p, data, 0.1));
}
BENCHMARK(BM_DpoGradient)->RangeMultiplier(4)->Range(8, 512);

void BM_ScriptedRun(benchmark::State& state) {
  const std::filesystem::path dir = std::filesystem::path(HEALDAG_SOURCE_DIR) / "scenarios/abs_equation";
  const RunInputs in = load_run_inputs(dir / "graph.json", dir / "scenario.json", dir / "config.json");
  for (auto _ : state) benchmark::DoNotOptimize(execute(in));
}
BENCHMARK(BM_ScriptedRun);

}  // namespace

BENCHMARK_MAIN();
