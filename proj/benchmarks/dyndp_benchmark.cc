// Copyright 2026 The DynDP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <benchmark/benchmark.h>

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <vector>

#include "absl/status/statusor.h"
#include "dyndp/accountant.h"
#include "dyndp/engine.h"
#include "dyndp/models.h"
#include "dyndp/rng.h"
#include "dyndp/schedule.h"
#include "dyndp/topology.h"

namespace dyndp {
namespace {

template <typename T>
T OrDie(absl::StatusOr<T> v) {
  if (!v.ok()) {
    std::cerr << v.status() << "\n";
    std::abort();
  }
  return *std::move(v);
}

void BM_MuTotFromEpsDelta(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(OrDie(MuTotFromEpsDelta(0.3, 1e-4)));
  }
}
BENCHMARK(BM_MuTotFromEpsDelta);

void BM_SolveInitialBudget(benchmark::State& state) {
  const double mu_tot = OrDie(MuTotFromEpsDelta(0.3, 1e-4));
  const std::int64_t steps = state.range(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(OrDie(SolveInitialBudget(mu_tot, 250, steps, 4)));
  }
}
BENCHMARK(BM_SolveInitialBudget)->Arg(200)->Arg(2000)->Arg(20000);

void BM_ScheduleBuild(benchmark::State& state) {
  const PrivacySpec privacy =
      OrDie(PrivacySpec::Create(0.3, 1e-4, 250, state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        OrDie(NoiseSchedule::Build(Variant::kDyn, privacy, 1.0, 4.0, 4.0)));
  }
}
BENCHMARK(BM_ScheduleBuild)->Arg(2000)->Arg(20000);

void BM_MixRound(benchmark::State& state) {
  const std::size_t n = state.range(0);
  const std::size_t d = state.range(1);
  const MixingMatrix p = ExponentialGraph(n, 0);
  CounterRng rng(1, 0, StreamPurpose::kNoise);
  std::vector<std::vector<double>> halves(n, std::vector<double>(d));
  for (auto& h : halves) {
    for (double& v : h) v = rng.Gaussian();
  }
  const std::vector<double> weights(n, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(OrDie(MixRound(halves, weights, p)));
  }
}
BENCHMARK(BM_MixRound)->Args({8, 10})->Args({32, 10})->Args({32, 1000});

void BM_SimulatorStep(benchmark::State& state) {
  const std::size_t n = state.range(0);
  const std::int64_t rounds = 2000;
  ClassificationTask task(
      Model::Logistic(10),
      OrDie(SynthDataset({.seed = 3, .nodes = n, .per_node = 250,
                          .input_dim = 10, .test_size = 0})));
  RunConfig config;
  config.iterations = rounds;
  config.workers = state.range(1);
  config.track_accuracy = false;
  config.graph = GraphSchedule::Generated(GraphKind::kExponential, n);
  config.schedule = OrDie(NoiseSchedule::Build(
      Variant::kDyn, OrDie(PrivacySpec::Create(0.3, 1e-4, 250, rounds)), 1.0,
      4.0, 4.0));
  const std::vector<std::vector<double>> initial(
      1, std::vector<double>(task.dimension(), 0.0));
  Simulator sim = OrDie(Simulator::Create(config, task, initial));
  for (auto _ : state) {
    if (sim.round() == rounds) {
      state.PauseTiming();
      sim = OrDie(Simulator::Create(config, task, initial));
      state.ResumeTiming();
    }
    benchmark::DoNotOptimize(OrDie(sim.Step()));
  }
}
BENCHMARK(BM_SimulatorStep)->Args({20, 1})->Args({20, 4})->Args({64, 1});

}  // namespace
}  // namespace dyndp

BENCHMARK_MAIN();
