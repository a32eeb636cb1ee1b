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

#include "dyndp/schedule.h"

#include <cmath>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dyndp/status_macros.h"

namespace dyndp {
namespace {

absl::Status CheckRate(absl::string_view name, double rate) {
  if (!std::isfinite(rate) || !(rate >= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("%s must be a finite rate >= 1, got %g", name, rate));
  }
  return absl::OkStatus();
}

}  // namespace

absl::string_view VariantName(Variant variant) {
  switch (variant) {
    case Variant::kDyn:
      return "dyn";
    case Variant::kDynC:
      return "dyn_c";
    case Variant::kDynMu:
      return "dyn_mu";
    case Variant::kConst:
      return "const";
  }
  return "unknown";
}

absl::string_view VariantDisplayName(Variant variant) {
  switch (variant) {
    case Variant::kDyn:
      return "Dyn-D2P";
    case Variant::kDynC:
      return "Dyn[C]-D2P";
    case Variant::kDynMu:
      return "Dyn[mu]-D2P";
    case Variant::kConst:
      return "Const-D2P";
  }
  return "unknown";
}

absl::StatusOr<Variant> ParseVariant(absl::string_view name) {
  for (Variant v :
       {Variant::kDyn, Variant::kDynC, Variant::kDynMu, Variant::kConst}) {
    if (name == VariantName(v)) return v;
  }
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown variant '", name, "' (expected dyn, dyn_c, dyn_mu or const)"));
}

bool UsesClipDecay(Variant variant) {
  return variant == Variant::kDyn || variant == Variant::kDynC;
}

bool UsesBudgetGrowth(Variant variant) {
  return variant == Variant::kDyn || variant == Variant::kDynMu;
}

absl::StatusOr<NoiseSchedule> NoiseSchedule::Build(Variant variant,
                                                   const PrivacySpec& privacy,
                                                   double clip, double rho_c,
                                                   double rho_mu) {
  if (!(clip > 0.0) || !std::isfinite(clip)) {
    return absl::InvalidArgumentError(
        absl::StrFormat("clip bound must be positive and finite, got %g", clip));
  }
  if (UsesClipDecay(variant)) DYNDP_RETURN_IF_ERROR(CheckRate("rho_c", rho_c));
  if (UsesBudgetGrowth(variant)) {
    DYNDP_RETURN_IF_ERROR(CheckRate("rho_mu", rho_mu));
  }

  NoiseSchedule s;
  s.variant_ = variant;
  s.privacy_ = privacy;
  s.base_clip_ = clip;
  s.rho_c_ = UsesClipDecay(variant) ? rho_c : 1.0;
  s.rho_mu_ = UsesBudgetGrowth(variant) ? rho_mu : 1.0;
  if (UsesBudgetGrowth(variant)) {
    DYNDP_ASSIGN_OR_RETURN(
        s.base_budget_, SolveInitialBudget(privacy.mu_tot, privacy.records,
                                           privacy.steps, s.rho_mu_));
  } else {
    s.base_budget_ =
        UniformBudget(privacy.mu_tot, privacy.records, privacy.steps);
  }
  if (!(s.base_budget_ > 0.0)) {
    return absl::InvalidArgumentError(
        "resolved per-step budget is zero; mu_tot too small");
  }

  const std::int64_t steps = privacy.steps;
  const double k_total = static_cast<double>(steps);
  s.clip_.resize(steps);
  s.budget_.resize(steps);
  s.sigma_.resize(steps);
  for (std::int64_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) / k_total;
    s.clip_[k] = clip * std::pow(s.rho_c_, -t);
    s.budget_[k] = s.base_budget_ * std::pow(s.rho_mu_, t);
    s.sigma_[k] = s.clip_[k] / s.budget_[k];
  }

  DYNDP_ASSIGN_OR_RETURN(
      s.composed_mu_tot_,
      ComposeGeneral({.step_budgets = s.budget_,
                      .sampling_probability = privacy.sampling_probability()}));
  s.exceeds_linearized_regime_ = ExceedsLinearizedRegime(s.budget_);
  return s;
}

absl::StatusOr<std::vector<double>> GeneralFormSigmas(
    const NoiseSchedule& schedule) {
  const std::span<const double> sigmas = schedule.sigmas();
  std::vector<double> shape(sigmas.size());
  for (std::size_t k = 0; k < sigmas.size(); ++k) {
    shape[k] = sigmas[k] / sigmas[0];
  }
  DYNDP_ASSIGN_OR_RETURN(
      const double scale,
      NoiseScaleGeneral(schedule.clip_bounds(), shape,
                        schedule.privacy().records, schedule.privacy().mu_tot));
  for (double& s : shape) s *= scale;
  return shape;
}

void WriteScheduleCsv(const NoiseSchedule& schedule, std::ostream& out) {
  out << "k,C_k,mu_k,sigma_k\n";
  for (std::int64_t k = 0; k < schedule.steps(); ++k) {
    out << absl::StrFormat("%d,%.17g,%.17g,%.17g\n", k,
                           schedule.ClipBoundAt(k), schedule.BudgetAt(k),
                           schedule.SigmaAt(k));
  }
}

}  // namespace dyndp
