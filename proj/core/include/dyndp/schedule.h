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

#ifndef DYNDP_SCHEDULE_H_
#define DYNDP_SCHEDULE_H_

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "dyndp/accountant.h"

namespace dyndp {

// The four noise strategies:
//   kDyn   decaying clip bound and growing per-step budget,
//   kDynC  decaying clip bound, constant budget,
//   kDynMu constant clip bound, growing budget,
//   kConst constant clip bound and budget.
enum class Variant { kDyn, kDynC, kDynMu, kConst };

absl::string_view VariantName(Variant variant);         // "dyn", "dyn_c", ...
absl::string_view VariantDisplayName(Variant variant);  // "Dyn-D2P", ...
absl::StatusOr<Variant> ParseVariant(absl::string_view name);

bool UsesClipDecay(Variant variant);
bool UsesBudgetGrowth(Variant variant);

// Precomputed per-iteration clip bounds C_k, budgets mu_k and noise standard
// deviations sigma_k = C_k / mu_k for k in [0, K). Immutable once built.
class NoiseSchedule {
 public:
  // Resolves mu_0 (growing-budget variants) or the uniform budget (the rest)
  // from `privacy`, then tabulates all K steps. `clip` is C_0 or the constant
  // bound; a rate the variant does not use is ignored.
  static absl::StatusOr<NoiseSchedule> Build(Variant variant,
                                             const PrivacySpec& privacy,
                                             double clip, double rho_c,
                                             double rho_mu);

  Variant variant() const { return variant_; }
  std::int64_t steps() const { return static_cast<std::int64_t>(clip_.size()); }
  double base_clip() const { return base_clip_; }
  double rho_c() const { return rho_c_; }
  double rho_mu() const { return rho_mu_; }
  // mu_0 for growing variants, the uniform budget otherwise.
  double base_budget() const { return base_budget_; }
  const PrivacySpec& privacy() const { return privacy_; }

  double ClipBoundAt(std::int64_t k) const { return clip_[k]; }
  double BudgetAt(std::int64_t k) const { return budget_[k]; }
  double SigmaAt(std::int64_t k) const { return sigma_[k]; }

  std::span<const double> clip_bounds() const { return clip_; }
  std::span<const double> budgets() const { return budget_; }
  std::span<const double> sigmas() const { return sigma_; }

  // Total GDP spent by the tabulated budgets at sampling probability 1/J.
  double composed_mu_tot() const { return composed_mu_tot_; }
  // Some mu_k^2 > 1; see ExceedsLinearizedRegime.
  bool exceeds_linearized_regime() const { return exceeds_linearized_regime_; }

 private:
  NoiseSchedule() = default;

  Variant variant_ = Variant::kConst;
  PrivacySpec privacy_;
  double base_clip_ = 0.0;
  double rho_c_ = 1.0;
  double rho_mu_ = 1.0;
  double base_budget_ = 0.0;
  double composed_mu_tot_ = 0.0;
  bool exceeds_linearized_regime_ = false;
  std::vector<double> clip_;
  std::vector<double> budget_;
  std::vector<double> sigma_;
};

// Per-step standard deviations of the general form: the noise shape is
// sigma_k / sigma_0 of `schedule`, and the scale comes from NoiseScaleGeneral
// with the schedule's clip bounds.
absl::StatusOr<std::vector<double>> GeneralFormSigmas(
    const NoiseSchedule& schedule);

// CSV audit dump: header "k,C_k,mu_k,sigma_k" then one row per step.
void WriteScheduleCsv(const NoiseSchedule& schedule, std::ostream& out);

}  // namespace dyndp

#endif  // DYNDP_SCHEDULE_H_
