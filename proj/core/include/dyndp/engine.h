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

#ifndef DYNDP_ENGINE_H_
#define DYNDP_ENGINE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "dyndp/metrics.h"
#include "dyndp/models.h"
#include "dyndp/node_state.h"
#include "dyndp/rng.h"
#include "dyndp/schedule.h"
#include "dyndp/topology.h"

namespace dyndp {

// Where the per-step noise standard deviation comes from.
enum class NoiseForm {
  // sigma_k = C_k / mu_k from the schedule.
  kPerStep,
  // sigma_tilde * s_k with s_k = sigma_k / sigma_0 and sigma_tilde from
  // NoiseScaleGeneral (see GeneralFormSigmas).
  kGeneral,
};

struct RunConfig {
  double step_size = 0.05;
  std::int64_t iterations = 1;  // K; must match schedule->steps() if set
  std::uint64_t seed = 0;
  // Worker threads for per-node work inside a round. Results do not depend
  // on this value.
  std::size_t workers = 1;
  bool noise_enabled = true;
  // Disabled clipping is the C = +inf sentinel of the non-private baseline.
  bool clipping_enabled = true;
  NoiseForm noise_form = NoiseForm::kPerStep;
  // Required when noise or clipping is enabled.
  std::optional<NoiseSchedule> schedule;
  GraphSchedule graph = GraphSchedule::Generated(GraphKind::kComplete, 1);
  // Measure accuracy in every row; the final state always includes it.
  bool track_accuracy = true;
};

// g * min(1, C / |g|). The zero vector and C = +inf leave g unchanged.
std::vector<double> ClipGradient(std::span<const double> gradient,
                                 double bound);
// In-place variant; returns whether |g| > C (i.e. clipping was active).
bool ClipGradientInPlace(std::span<double> gradient, double bound);

// x - step_size * (g + N) with N ~ N(0, sigma^2 I) drawn from `rng`. No
// draws are made when sigma == 0.
std::vector<double> LocalDpStep(std::span<const double> x,
                                std::span<const double> clipped_gradient,
                                double sigma, double step_size,
                                CounterRng& rng);

// Push-sum averaging: x_i' = sum_j P_ij x_j^(k+1/2), w_i' = sum_j P_ij w_j,
// z_i' = x_i' / w_i'. Fails on an invalid P or with "DegenerateWeight" when
// some w_i' <= 1e-300.
absl::StatusOr<std::vector<NodeState>> MixRound(
    std::span<const std::vector<double>> halves,
    std::span<const double> weights, const MixingMatrix& p);

// Synchronous simulator of the decentralized private SGD loop. Each Step()
// runs one round: every node samples one local record uniformly, takes the
// gradient at z_i, clips it to C_k, adds Gaussian noise, steps, and then all
// nodes mix with P^k and de-bias.
//
// Holds a reference to `objective`, which must outlive the simulator.
class Simulator {
 public:
  // `initial` is either one parameter vector shared by every node or one per
  // node.
  static absl::StatusOr<Simulator> Create(
      RunConfig config, const Objective& objective,
      std::vector<std::vector<double>> initial);

  // Runs round k = round() and returns its row, measured before the update.
  // Fails with "NonFiniteParameter" if any x_i stops being finite.
  absl::StatusOr<RoundStats> Step();

  // Statistics of the current state without advancing, with accuracy when
  // the objective reports one.
  RoundStats Evaluate() const;

  std::int64_t round() const { return round_; }
  const RunConfig& config() const { return config_; }
  std::span<const NodeState> states() const { return states_; }
  std::span<const double> sigmas() const { return sigmas_; }
  // (1/n) sum_i (g_i + N_i) of the last completed round, so that
  // x_bar^(k+1) = x_bar^k - step_size * last_mean_update().
  std::span<const double> last_mean_update() const { return mean_update_; }

 private:
  Simulator(RunConfig config, const Objective& objective);
  RoundStats Measure(bool with_accuracy) const;

  RunConfig config_;
  const Objective* objective_;
  std::vector<NodeState> states_;
  std::vector<CounterRng> sampling_rngs_;
  std::vector<CounterRng> noise_rngs_;
  std::vector<double> sigmas_;
  std::vector<double> mean_update_;
  std::int64_t round_ = 0;
};

// Runs K rounds and returns exactly K rows plus the final state, with a
// header describing the privacy resolution and graph diagnostics.
absl::StatusOr<MetricsLog> Run(const RunConfig& config,
                               const Objective& objective,
                               std::vector<std::vector<double>> initial);

}  // namespace dyndp

#endif  // DYNDP_ENGINE_H_
