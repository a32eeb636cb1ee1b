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

#include "dyndp/engine.h"

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_support.h"

namespace dyndp {
namespace {

using ::dyndp::testing::QuadraticObjective;
using ::dyndp::testing::ReferenceSgd;
using ::dyndp::testing::ZeroGradientObjective;
using ::testing::ElementsAre;
using ::testing::HasSubstr;

double Norm(std::span<const double> v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

RunConfig NonPrivate(GraphKind graph, std::size_t n, std::int64_t iterations) {
  RunConfig config;
  config.noise_enabled = false;
  config.clipping_enabled = false;
  config.iterations = iterations;
  config.graph = GraphSchedule::Generated(graph, n);
  return config;
}

NoiseSchedule ConstSchedule(std::int64_t records, std::int64_t steps,
                            double clip, double epsilon = 1.0) {
  absl::StatusOr<PrivacySpec> p =
      PrivacySpec::Create(epsilon, 1e-4, records, steps);
  EXPECT_TRUE(p.ok());
  absl::StatusOr<NoiseSchedule> s =
      NoiseSchedule::Build(Variant::kConst, *p, clip, 1.0, 1.0);
  EXPECT_TRUE(s.ok());
  return *s;
}

TEST(ClipGradientTest, Examples) {
  const std::vector<double> big = {6.0, 8.0};
  const std::vector<double> clipped = ClipGradient(big, 5.0);
  EXPECT_NEAR(Norm(clipped), 5.0, 1e-15);
  EXPECT_THAT(clipped, ElementsAre(3.0, 4.0));

  const std::vector<double> small = {0.0, 3.0};
  EXPECT_EQ(ClipGradient(small, 5.0), small);

  const std::vector<double> zero = {0.0, 0.0};
  EXPECT_EQ(ClipGradient(zero, 5.0), zero);

  std::vector<double> in_place = big;
  EXPECT_TRUE(ClipGradientInPlace(in_place, 5.0));
  EXPECT_FALSE(ClipGradientInPlace(in_place, 5.0 + 1e-9));
  EXPECT_FALSE(ClipGradientInPlace(
      in_place, std::numeric_limits<double>::infinity()));
}

TEST(LocalDpStepTest, Deterministic) {
  CounterRng rng(0, 0, StreamPurpose::kNoise);
  EXPECT_THAT(LocalDpStep(std::vector<double>{1.0, 1.0},
                          std::vector<double>{1.0, 0.0}, 0.0, 0.1, rng),
              ElementsAre(0.9, 1.0));
  EXPECT_THAT(LocalDpStep(std::vector<double>{1.0, -2.0},
                          std::vector<double>{0.0, 0.0}, 0.0, 0.1, rng),
              ElementsAre(1.0, -2.0));
  EXPECT_EQ(rng.counter(), 0u);
}

TEST(LocalDpStepTest, NoiseVarianceConcentrates) {
  CounterRng rng(4, 2, StreamPurpose::kNoise);
  constexpr int kDim = 1000;
  const std::vector<double> x(kDim, 0.0), g(kDim, 0.0);
  double mean = 0.0;
  for (int draw = 0; draw < 100; ++draw) {
    // With gamma = 1, x - (g + N) = -N.
    const std::vector<double> half = LocalDpStep(x, g, 2.0, 1.0, rng);
    mean += Norm(half) * Norm(half) / kDim;
  }
  mean /= 100;
  EXPECT_GT(mean, 4.0 * 0.85);
  EXPECT_LT(mean, 4.0 * 1.15);
}

TEST(MixRoundTest, TwoNodeAveraging) {
  const std::vector<std::vector<double>> halves = {{0.0}, {2.0}};
  const std::vector<double> weights = {1.0, 1.0};
  absl::StatusOr<std::vector<NodeState>> next =
      MixRound(halves, weights, CompleteGraph(2));
  ASSERT_TRUE(next.ok());
  for (const NodeState& s : *next) {
    EXPECT_THAT(s.x, ElementsAre(1.0));
    EXPECT_EQ(s.w, 1.0);
    EXPECT_THAT(s.z, ElementsAre(1.0));
  }
}

TEST(MixRoundTest, IdentityLeavesStatesUnchanged) {
  const std::vector<std::vector<double>> halves = {{1.0, 2.0}, {3.0, 4.0},
                                                   {-1.0, 0.5}};
  const std::vector<double> weights = {0.5, 1.0, 1.5};
  absl::StatusOr<std::vector<NodeState>> next =
      MixRound(halves, weights, MixingMatrix::Identity(3));
  ASSERT_TRUE(next.ok());
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ((*next)[i].x, halves[i]);
    EXPECT_EQ((*next)[i].w, weights[i]);
  }
}

TEST(MixRoundTest, CompleteGraphReachesConsensusInOneRound) {
  const std::vector<std::vector<double>> halves = {{1.0}, {5.0}, {-3.0}, {9.0}};
  const std::vector<double> weights = {1.0, 1.0, 1.0, 1.0};
  absl::StatusOr<std::vector<NodeState>> next =
      MixRound(halves, weights, CompleteGraph(4));
  ASSERT_TRUE(next.ok());
  for (const NodeState& s : *next) EXPECT_DOUBLE_EQ(s.z[0], 3.0);
}

TEST(MixRoundTest, Errors) {
  const std::vector<std::vector<double>> halves = {{1.0}, {2.0}};
  const std::vector<double> weights = {1.0, 1.0};
  absl::StatusOr<MixingMatrix> bad = MixingMatrix::FromRows({{0.5, 0.5}, {0.0, 0.5}});
  ASSERT_TRUE(bad.ok());
  EXPECT_THAT(MixRound(halves, weights, *bad).status().message(),
              HasSubstr("ColumnSumViolation"));
  const std::vector<double> dead = {0.0, 0.0};
  EXPECT_THAT(MixRound(halves, dead, CompleteGraph(2)).status().message(),
              HasSubstr("DegenerateWeight"));
  EXPECT_FALSE(MixRound(halves, weights, CompleteGraph(3)).ok());
}

// Zero gradients and no noise: push-sum alone must drive every z_i to the
// initial average while conserving sum_i w_i = n.
void ExpectConsensus(GraphKind graph, std::size_t n, int rounds) {
  const ZeroGradientObjective zero(n, 3);
  std::vector<std::vector<double>> initial(n);
  std::vector<double> average(3, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    initial[i] = {static_cast<double>(i), std::sin(i + 1.0), -2.0 * i * i};
    for (int j = 0; j < 3; ++j) average[j] += initial[i][j] / n;
  }
  absl::StatusOr<Simulator> sim =
      Simulator::Create(NonPrivate(graph, n, rounds), zero, initial);
  ASSERT_TRUE(sim.ok()) << sim.status();
  for (int k = 0; k < rounds; ++k) {
    absl::StatusOr<RoundStats> row = sim->Step();
    ASSERT_TRUE(row.ok());
    ASSERT_NEAR(row->weight_sum, static_cast<double>(n), 1e-10);
  }
  for (const NodeState& s : sim->states()) {
    std::vector<double> diff(3);
    for (int j = 0; j < 3; ++j) diff[j] = s.z[j] - average[j];
    EXPECT_LE(Norm(diff), 1e-6) << GraphKindName(graph);
  }
  EXPECT_NEAR(sim->Evaluate().weight_sum, static_cast<double>(n), 1e-10);
}

TEST(SimulatorTest, RingReachesConsensus) {
  ExpectConsensus(GraphKind::kRing, 4, 200);
}

TEST(SimulatorTest, ExponentialReachesConsensus) {
  ExpectConsensus(GraphKind::kExponential, 8, 100);
}

TEST(SimulatorTest, SingleNodeIsPlainSgd) {
  const QuadraticObjective task(1, 30, 4, 1.0);
  const std::vector<double> x0 = {1.0, -1.0, 0.5, 2.0};
  RunConfig config = NonPrivate(GraphKind::kComplete, 1, 500);
  config.step_size = 0.07;
  config.seed = 17;
  absl::StatusOr<Simulator> sim = Simulator::Create(config, task, {x0});
  ASSERT_TRUE(sim.ok());
  const auto reference = ReferenceSgd(task, x0, 0.07, 500, 17);
  for (int k = 0; k < 500; ++k) {
    ASSERT_TRUE(sim->Step().ok());
    for (int j = 0; j < 4; ++j) {
      ASSERT_NEAR(sim->states()[0].z[j], reference[k][j], 1e-12) << k;
    }
  }
}

TEST(SimulatorTest, ConservationAndAverageSystem) {
  const std::size_t n = 6;
  const QuadraticObjective task(n, 10, 3, 2.0);
  RunConfig config;
  config.iterations = 60;
  config.step_size = 0.1;
  config.schedule = ConstSchedule(10, 60, 0.8);
  config.graph = GraphSchedule::Generated(GraphKind::kExponential, n);
  absl::StatusOr<Simulator> sim =
      Simulator::Create(config, task, {{0.3, -0.2, 1.0}});
  ASSERT_TRUE(sim.ok());
  for (int k = 0; k < 60; ++k) {
    const std::vector<double> before = AverageIterate(sim->states());
    ASSERT_TRUE(sim->Step().ok());
    const std::vector<double> after = AverageIterate(sim->states());
    double w = 0.0;
    for (const NodeState& s : sim->states()) w += s.w;
    EXPECT_NEAR(w, static_cast<double>(n), 1e-10);
    for (int j = 0; j < 3; ++j) {
      EXPECT_NEAR(after[j],
                  before[j] - config.step_size * sim->last_mean_update()[j],
                  1e-10);
    }
  }
}

TEST(SimulatorTest, IterateSumIsConservedByMixing) {
  const std::size_t n = 5;
  std::vector<std::vector<double>> halves(n);
  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) {
    halves[i] = {std::cos(1.0 + i), 0.1 * i};
    weights[i] = 0.5 + 0.25 * i;
  }
  for (std::uint64_t k = 0; k < 4; ++k) {
    absl::StatusOr<std::vector<NodeState>> next =
        MixRound(halves, weights, ExponentialGraph(n, k));
    ASSERT_TRUE(next.ok());
    for (int j = 0; j < 2; ++j) {
      double in = 0.0, out = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        in += halves[i][j];
        out += (*next)[i].x[j];
      }
      EXPECT_NEAR(out, in, 1e-10);
    }
  }
}

TEST(SimulatorTest, DeterministicAcrossWorkerCounts) {
  const std::size_t n = 12;
  const QuadraticObjective task(n, 25, 5, 1.0);
  RunConfig config;
  config.iterations = 80;
  config.seed = 3;
  config.schedule = ConstSchedule(25, 80, 0.5);
  config.graph = GraphSchedule::Generated(GraphKind::kExponential, n);
  absl::StatusOr<MetricsLog> serial = dyndp::Run(config, task, {{1, 2, 3, 4, 5}});
  config.workers = 5;
  absl::StatusOr<MetricsLog> parallel = dyndp::Run(config, task, {{1, 2, 3, 4, 5}});
  ASSERT_TRUE(serial.ok());
  ASSERT_TRUE(parallel.ok());
  ASSERT_EQ(serial->rows.size(), 80u);
  for (std::size_t k = 0; k < 80; ++k) {
    const RoundStats& a = serial->rows[k];
    const RoundStats& b = parallel->rows[k];
    EXPECT_EQ(a.loss, b.loss);
    EXPECT_EQ(a.grad_norm_sq, b.grad_norm_sq);
    EXPECT_EQ(a.consensus_error, b.consensus_error);
    EXPECT_EQ(a.clip_rate, b.clip_rate);
  }
  EXPECT_EQ(serial->final_state.loss, parallel->final_state.loss);
  EXPECT_EQ(serial->header, parallel->header);
}

TEST(SimulatorTest, RowsCarryScheduleValues) {
  const QuadraticObjective task(4, 10, 2, 1.0);
  RunConfig config;
  config.iterations = 20;
  absl::StatusOr<PrivacySpec> p = PrivacySpec::Create(1.0, 1e-4, 10, 20);
  ASSERT_TRUE(p.ok());
  config.schedule = *NoiseSchedule::Build(Variant::kDyn, *p, 2.0, 2.0, 2.0);
  config.graph = GraphSchedule::Generated(GraphKind::kRing, 4);
  absl::StatusOr<MetricsLog> log = dyndp::Run(config, task, {{0.0, 0.0}});
  ASSERT_TRUE(log.ok()) << log.status();
  ASSERT_EQ(log->rows.size(), 20u);
  for (const RoundStats& row : log->rows) {
    EXPECT_EQ(row.clip_bound, config.schedule->ClipBoundAt(row.k));
    EXPECT_EQ(row.budget, config.schedule->BudgetAt(row.k));
    EXPECT_EQ(row.sigma, config.schedule->SigmaAt(row.k));
    EXPECT_GE(row.clip_rate, 0.0);
    EXPECT_LE(row.clip_rate, 1.0);
    EXPECT_TRUE(std::isfinite(row.consensus_error));
    EXPECT_FALSE(row.accuracy.has_value());
  }
}

TEST(SimulatorTest, GeneralNoiseFormUsesGeneralSigmas) {
  const QuadraticObjective task(2, 10, 2, 1.0);
  RunConfig config;
  config.iterations = 15;
  absl::StatusOr<PrivacySpec> p = PrivacySpec::Create(1.0, 1e-4, 10, 15);
  config.schedule = *NoiseSchedule::Build(Variant::kDyn, *p, 1.0, 3.0, 2.0);
  config.noise_form = NoiseForm::kGeneral;
  config.graph = GraphSchedule::Generated(GraphKind::kComplete, 2);
  absl::StatusOr<Simulator> sim = Simulator::Create(config, task, {{0.0, 0.0}});
  ASSERT_TRUE(sim.ok());
  absl::StatusOr<std::vector<double>> expected =
      GeneralFormSigmas(*config.schedule);
  ASSERT_TRUE(expected.ok());
  const std::vector<double> actual(sim->sigmas().begin(), sim->sigmas().end());
  EXPECT_EQ(actual, *expected);
}

TEST(SimulatorTest, NoiseOffZeroGradientConsensusContractsAtRateQ) {
  for (GraphKind kind : {GraphKind::kRing, GraphKind::kExponential}) {
    const std::size_t n = 8;
    const ZeroGradientObjective zero(n, 2);
    std::vector<std::vector<double>> initial(n);
    for (std::size_t i = 0; i < n; ++i) initial[i] = {1.0 * i, -0.5 * i * i};
    RunConfig config = NonPrivate(kind, n, 120);
    absl::StatusOr<MetricsLog> log = dyndp::Run(config, zero, initial);
    ASSERT_TRUE(log.ok());
    const ScheduleDiagnostics diag = DiagnoseSchedule(config.graph, 2, 8);
    ASSERT_TRUE(diag.spectral.ok());
    const double q = diag.spectral->q;
    // The exponential graph averages exactly after one period, so its error
    // is already zero; the ratio is only informative while it is positive.
    const double head = log->rows[60].consensus_error;
    const double tail = log->rows[119].consensus_error;
    const double ratio =
        head > 0.0 ? std::pow(tail / head, 1.0 / 59.0) : 0.0;
    EXPECT_LE(ratio, q + 0.05) << GraphKindName(kind);
    EXPECT_GT(log->rows[0].consensus_error, 0.0);
  }
}

TEST(SimulatorTest, NoiseRaisesFinalLossOnConvexTask) {
  const std::size_t n = 10;
  double noisy = 0.0, clean = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const QuadraticObjective task(n, 50, 4, 1.0, seed + 1);
    RunConfig config;
    config.iterations = 300;
    config.seed = seed;
    config.step_size = 0.05;
    config.schedule = ConstSchedule(50, 300, 1.0, 0.3);
    config.graph = GraphSchedule::Generated(GraphKind::kExponential, n);
    absl::StatusOr<MetricsLog> with = dyndp::Run(config, task, {{0, 0, 0, 0}});
    config.noise_enabled = false;
    absl::StatusOr<MetricsLog> without = dyndp::Run(config, task, {{0, 0, 0, 0}});
    ASSERT_TRUE(with.ok());
    ASSERT_TRUE(without.ok());
    noisy += with->final_state.loss;
    clean += without->final_state.loss;
  }
  EXPECT_GE(noisy, clean);
}

TEST(SimulatorTest, CreateValidates) {
  const QuadraticObjective task(3, 5, 2, 1.0);
  RunConfig config = NonPrivate(GraphKind::kRing, 3, 10);
  EXPECT_TRUE(Simulator::Create(config, task, {{0.0, 0.0}}).ok());
  EXPECT_FALSE(Simulator::Create(config, task, {{0.0}}).ok());
  EXPECT_FALSE(Simulator::Create(config, task, {{0, 0}, {0, 0}}).ok());

  RunConfig wrong_graph = NonPrivate(GraphKind::kRing, 4, 10);
  EXPECT_THAT(Simulator::Create(wrong_graph, task, {{0.0, 0.0}})
                  .status()
                  .message(),
              HasSubstr("graph has 4 nodes"));

  RunConfig no_schedule = config;
  no_schedule.noise_enabled = true;
  EXPECT_THAT(Simulator::Create(no_schedule, task, {{0.0, 0.0}})
                  .status()
                  .message(),
              HasSubstr("schedule is required"));

  RunConfig mismatch = config;
  mismatch.noise_enabled = true;
  mismatch.schedule = ConstSchedule(5, 11, 1.0);
  EXPECT_THAT(Simulator::Create(mismatch, task, {{0.0, 0.0}})
                  .status()
                  .message(),
              HasSubstr("11 steps"));

  RunConfig bad_step = config;
  bad_step.step_size = -1.0;
  EXPECT_FALSE(Simulator::Create(bad_step, task, {{0.0, 0.0}}).ok());
}

TEST(SimulatorTest, DivergenceIsReported) {
  const QuadraticObjective task(1, 3, 2, 1.0);
  RunConfig config = NonPrivate(GraphKind::kComplete, 1, 3000);
  config.step_size = 3.0;
  absl::StatusOr<MetricsLog> log = dyndp::Run(config, task, {{1.0, 1.0}});
  EXPECT_THAT(log.status().message(), HasSubstr("NonFiniteParameter"));
}

TEST(SimulatorTest, StepPastEndFails) {
  const QuadraticObjective task(1, 3, 2, 1.0);
  absl::StatusOr<Simulator> sim = Simulator::Create(
      NonPrivate(GraphKind::kComplete, 1, 1), task, {{0.0, 0.0}});
  ASSERT_TRUE(sim.ok());
  EXPECT_TRUE(sim->Step().ok());
  EXPECT_EQ(sim->Step().status().code(), absl::StatusCode::kOutOfRange);
}

}  // namespace
}  // namespace dyndp
