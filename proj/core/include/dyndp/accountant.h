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

#ifndef DYNDP_ACCOUNTANT_H_
#define DYNDP_ACCOUNTANT_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/statusor.h"

namespace dyndp {

// Largest per-step GDP budget accepted by composition. e^(mu^2) stays finite
// well beyond this, but the composed total loses accuracy.
inline constexpr double kMaxStepBudget = 8.0;

// Bisection bracket for inverting the (epsilon, delta) transfer in mu.
inline constexpr double kMuTotLowerBracket = 1e-8;
inline constexpr double kMuTotUpperBracket = 64.0;

// Standard normal CDF via erfc; absolute error well below 1e-12.
double GaussianCdf(double t);

// delta(mu, eps) = Phi(-eps/mu + mu/2) - e^eps * Phi(-eps/mu - mu/2), the
// tightest delta at which a mu-GDP mechanism is (eps, delta)-DP. Returns 0
// for mu <= 0. Strictly increasing in mu for fixed eps.
double DeltaFromMuEps(double mu, double eps);

// Inverts DeltaFromMuEps in mu by bisection on [1e-8, 64] to an absolute
// width of 1e-12. Fails with "NoBracket" when delta is not attained inside
// the bracket.
absl::StatusOr<double> MuTotFromEpsDelta(double eps, double delta);

// Per-step GDP budgets of K subsampled mechanisms, each touching a record
// with probability `sampling_probability`.
struct CompositionLedger {
  std::vector<double> step_budgets;
  double sampling_probability = 1.0;
};

// mu_tot = p * sqrt(sum_k (e^(mu_k^2) - 1)). Fails with "BudgetOverflow" at
// the first k with mu_k > 8.
absl::StatusOr<double> ComposeGeneral(const CompositionLedger& ledger);

// True when some mu_k^2 > 1. The e^x - 1 < 2x step behind the general-form
// noise scale only holds for x <= 1, so callers surface this as a warning.
bool ExceedsLinearizedRegime(std::span<const double> step_budgets);

// Closed-form constant per-step budget that spends mu_tot over K steps at
// sampling probability 1/J: sqrt(log(J^2 mu_tot^2 / K + 1)).
double UniformBudget(double mu_tot, std::int64_t records, std::int64_t steps);

// Solves sum_{k<K} (exp((mu_0 rho^(k/K))^2) - 1) = J^2 mu_tot^2 for mu_0 by
// bisection to a relative residual of 1e-10. rho == 1 returns UniformBudget.
// Fails with "BudgetOverflow" if the final budget mu_0 rho^((K-1)/K) > 8.
absl::StatusOr<double> SolveInitialBudget(double mu_tot, std::int64_t records,
                                          std::int64_t steps, double rho_mu);

// Left-hand side of the mu_0 equation; exposed for residual checks.
double GrowingBudgetCost(double mu0, std::int64_t steps, double rho_mu);

// Noise scale of the general form: given clip bounds C_k and relative noise
// levels s_k, sigma_tilde = sqrt(2 sum C_k^2 / s_k^2) / (J mu_tot). The
// per-step standard deviation is sigma_tilde * s_k.
absl::StatusOr<double> NoiseScaleGeneral(std::span<const double> clip_bounds,
                                         std::span<const double> noise_shape,
                                         std::int64_t records, double mu_tot);

// The global privacy contract of a run.
struct PrivacySpec {
  double epsilon = 0.0;
  double delta = 0.0;
  std::int64_t records = 1;  // J, per-node dataset size.
  std::int64_t steps = 1;    // K, total iterations.
  double mu_tot = 0.0;

  double sampling_probability() const {
    return 1.0 / static_cast<double>(records);
  }

  // Validates the inputs and resolves mu_tot from (epsilon, delta).
  static absl::StatusOr<PrivacySpec> Create(double epsilon, double delta,
                                            std::int64_t records,
                                            std::int64_t steps);
};

}  // namespace dyndp

#endif  // DYNDP_ACCOUNTANT_H_
