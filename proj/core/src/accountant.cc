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

#include "dyndp/accountant.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "absl/status/status.h"
#include "absl/strings/str_format.h"

namespace dyndp {
namespace {

constexpr double kMuTotWidth = 1e-12;
constexpr double kInitialBudgetResidual = 1e-10;
constexpr int kMaxBisectionSteps = 400;

// rho^(k/K) for k in [0, K).
std::vector<double> GrowthFactors(std::int64_t steps, double rho_mu) {
  std::vector<double> factors(static_cast<std::size_t>(steps));
  const double k_total = static_cast<double>(steps);
  for (std::int64_t k = 0; k < steps; ++k) {
    factors[k] = std::pow(rho_mu, static_cast<double>(k) / k_total);
  }
  return factors;
}

double CostWithFactors(double mu0, std::span<const double> factors) {
  double sum = 0.0;
  for (double f : factors) {
    const double mu = mu0 * f;
    sum += std::expm1(mu * mu);
  }
  return sum;
}

}  // namespace

double GaussianCdf(double t) {
  return 0.5 * std::erfc(-t / std::numbers::sqrt2);
}

double DeltaFromMuEps(double mu, double eps) {
  if (!(mu > 0.0)) return 0.0;
  const double a = -eps / mu + mu / 2.0;
  const double b = -eps / mu - mu / 2.0;
  const double lower = GaussianCdf(b);
  // e^eps * Phi(b) formed in log space so large eps cannot overflow.
  const double scaled = lower > 0.0 ? std::exp(eps + std::log(lower)) : 0.0;
  const double delta = GaussianCdf(a) - scaled;
  return delta > 0.0 ? delta : 0.0;
}

absl::StatusOr<double> MuTotFromEpsDelta(double eps, double delta) {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("epsilon must be positive and finite, got %g", eps));
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("delta must lie in (0, 1), got %g", delta));
  }
  double lo = kMuTotLowerBracket;
  double hi = kMuTotUpperBracket;
  const double delta_lo = DeltaFromMuEps(lo, eps);
  const double delta_hi = DeltaFromMuEps(hi, eps);
  if (!(delta_lo <= delta && delta <= delta_hi)) {
    return absl::OutOfRangeError(absl::StrFormat(
        "NoBracket: delta=%g is outside [%g, %g] attainable for mu in "
        "[%g, %g] at epsilon=%g",
        delta, delta_lo, delta_hi, lo, hi, eps));
  }
  for (int i = 0; i < kMaxBisectionSteps && hi - lo > kMuTotWidth; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (DeltaFromMuEps(mid, eps) > delta) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

absl::StatusOr<double> ComposeGeneral(const CompositionLedger& ledger) {
  const double p = ledger.sampling_probability;
  if (!(p > 0.0 && p <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("sampling probability must lie in (0, 1], got %g", p));
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < ledger.step_budgets.size(); ++k) {
    const double mu = ledger.step_budgets[k];
    if (!(mu >= 0.0)) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "step budget mu_%d must be non-negative, got %g", k, mu));
    }
    if (mu > kMaxStepBudget) {
      return absl::OutOfRangeError(absl::StrFormat(
          "BudgetOverflow: step budget mu_%d = %.17g exceeds %g", k, mu,
          kMaxStepBudget));
    }
    sum += std::expm1(mu * mu);
  }
  return p * std::sqrt(sum);
}

bool ExceedsLinearizedRegime(std::span<const double> step_budgets) {
  for (double mu : step_budgets) {
    if (mu * mu > 1.0) return true;
  }
  return false;
}

double UniformBudget(double mu_tot, std::int64_t records, std::int64_t steps) {
  const double j = static_cast<double>(records);
  return std::sqrt(
      std::log1p(j * j * mu_tot * mu_tot / static_cast<double>(steps)));
}

double GrowingBudgetCost(double mu0, std::int64_t steps, double rho_mu) {
  return CostWithFactors(mu0, GrowthFactors(steps, rho_mu));
}

absl::StatusOr<double> SolveInitialBudget(double mu_tot, std::int64_t records,
                                          std::int64_t steps, double rho_mu) {
  if (!(mu_tot > 0.0) || records < 1 || steps < 1) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "need mu_tot > 0, J >= 1, K >= 1 (got %g, %d, %d)", mu_tot, records,
        steps));
  }
  if (!(rho_mu >= 1.0) || !std::isfinite(rho_mu)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("rho_mu must be >= 1, got %g", rho_mu));
  }
  const double uniform = UniformBudget(mu_tot, records, steps);
  double mu0 = uniform;
  if (rho_mu > 1.0) {
    const double j = static_cast<double>(records);
    const double target = j * j * mu_tot * mu_tot;
    const std::vector<double> factors = GrowthFactors(steps, rho_mu);
    // Every growing budget is >= mu_0, so the cost at mu_0 = uniform is at
    // least the target. The loop only widens the bracket defensively against
    // rounding in the closed form.
    double lo = 0.0;
    double hi = uniform;
    while (CostWithFactors(hi, factors) < target) {
      lo = hi;
      hi *= 2.0;
      if (hi > kMaxStepBudget) {
        return absl::OutOfRangeError(absl::StrFormat(
            "BudgetOverflow: no mu_0 <= %g satisfies the budget equation",
            kMaxStepBudget));
      }
    }
    for (int i = 0; i < kMaxBisectionSteps; ++i) {
      mu0 = 0.5 * (lo + hi);
      const double cost = CostWithFactors(mu0, factors);
      if (std::abs(cost - target) <= 1e-3 * kInitialBudgetResidual * target ||
          hi - lo <= 1e-15 * hi) {
        break;
      }
      if (cost > target) {
        hi = mu0;
      } else {
        lo = mu0;
      }
    }
    const double residual =
        std::abs(CostWithFactors(mu0, factors) - target) / target;
    if (residual > kInitialBudgetResidual) {
      return absl::InternalError(absl::StrFormat(
          "mu_0 bisection stalled at relative residual %g", residual));
    }
  }
  const double last = mu0 * std::pow(rho_mu, static_cast<double>(steps - 1) /
                                                 static_cast<double>(steps));
  if (last > kMaxStepBudget) {
    return absl::OutOfRangeError(absl::StrFormat(
        "BudgetOverflow: final step budget mu_%d = %.17g exceeds %g",
        steps - 1, last, kMaxStepBudget));
  }
  return mu0;
}

absl::StatusOr<double> NoiseScaleGeneral(std::span<const double> clip_bounds,
                                         std::span<const double> noise_shape,
                                         std::int64_t records, double mu_tot) {
  if (clip_bounds.size() != noise_shape.size() || clip_bounds.empty()) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "clip bounds (%d) and noise shape (%d) must be non-empty and equally "
        "long",
        clip_bounds.size(), noise_shape.size()));
  }
  if (!(mu_tot > 0.0) || records < 1) {
    return absl::InvalidArgumentError("need mu_tot > 0 and J >= 1");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < clip_bounds.size(); ++k) {
    if (!(clip_bounds[k] > 0.0) || !(noise_shape[k] > 0.0)) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "C_%d and sigma_shape_%d must be positive (got %g, %g)", k, k,
          clip_bounds[k], noise_shape[k]));
    }
    const double ratio = clip_bounds[k] / noise_shape[k];
    sum += ratio * ratio;
  }
  return std::sqrt(2.0 * sum) / (static_cast<double>(records) * mu_tot);
}

absl::StatusOr<PrivacySpec> PrivacySpec::Create(double epsilon, double delta,
                                                std::int64_t records,
                                                std::int64_t steps) {
  if (records < 1 || steps < 1) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "need J >= 1 and K >= 1 (got J=%d, K=%d)", records, steps));
  }
  absl::StatusOr<double> mu_tot = MuTotFromEpsDelta(epsilon, delta);
  if (!mu_tot.ok()) return mu_tot.status();
  return PrivacySpec{.epsilon = epsilon,
                     .delta = delta,
                     .records = records,
                     .steps = steps,
                     .mu_tot = *mu_tot};
}

}  // namespace dyndp
