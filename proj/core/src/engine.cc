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

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <thread>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dyndp/status_macros.h"

namespace dyndp {
namespace {

constexpr double kDegenerateWeight = 1e-300;

double NormOf(std::span<const double> v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

// Runs fn(i) for i in [0, count) on up to `workers` threads with static
// contiguous chunks. Each index is handled by exactly one thread.
void ParallelFor(std::size_t workers, std::size_t count,
                 const std::function<void(std::size_t)>& fn) {
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> threads;
  threads.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back([&fn, begin, end] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
}

std::string Fmt(double v) { return absl::StrFormat("%.17g", v); }

}  // namespace

bool ClipGradientInPlace(std::span<double> gradient, double bound) {
  const double norm = NormOf(gradient);
  if (!(norm > bound)) return false;
  const double scale = bound / norm;
  for (double& g : gradient) g *= scale;
  return true;
}

std::vector<double> ClipGradient(std::span<const double> gradient,
                                 double bound) {
  std::vector<double> out(gradient.begin(), gradient.end());
  ClipGradientInPlace(out, bound);
  return out;
}

std::vector<double> LocalDpStep(std::span<const double> x,
                                std::span<const double> clipped_gradient,
                                double sigma, double step_size,
                                CounterRng& rng) {
  std::vector<double> half(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    double update = clipped_gradient[j];
    if (sigma > 0.0) update += sigma * rng.Gaussian();
    half[j] = x[j] - step_size * update;
  }
  return half;
}

absl::StatusOr<std::vector<NodeState>> MixRound(
    std::span<const std::vector<double>> halves,
    std::span<const double> weights, const MixingMatrix& p) {
  const std::size_t n = p.size();
  if (halves.size() != n || weights.size() != n) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "mixing %d states and %d weights with a %dx%d matrix", halves.size(),
        weights.size(), n, n));
  }
  DYNDP_RETURN_IF_ERROR(ValidateColumnStochastic(p));
  const std::size_t d = n == 0 ? 0 : halves.front().size();
  std::vector<NodeState> next(n);
  for (std::size_t i = 0; i < n; ++i) {
    NodeState& s = next[i];
    s.x.assign(d, 0.0);
    s.w = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double pij = p(i, j);
      if (pij == 0.0) continue;
      s.w += pij * weights[j];
      const std::vector<double>& xj = halves[j];
      for (std::size_t c = 0; c < d; ++c) s.x[c] += pij * xj[c];
    }
    if (!(s.w > kDegenerateWeight)) {
      return absl::FailedPreconditionError(absl::StrFormat(
          "DegenerateWeight: node %d push-sum weight %g <= %g", i, s.w,
          kDegenerateWeight));
    }
    s.z.resize(d);
    for (std::size_t c = 0; c < d; ++c) s.z[c] = s.x[c] / s.w;
  }
  return next;
}

Simulator::Simulator(RunConfig config, const Objective& objective)
    : config_(std::move(config)), objective_(&objective) {}

absl::StatusOr<Simulator> Simulator::Create(
    RunConfig config, const Objective& objective,
    std::vector<std::vector<double>> initial) {
  const std::size_t n = objective.node_count();
  const std::size_t d = objective.dimension();
  if (n == 0 || objective.samples_per_node() == 0) {
    return absl::InvalidArgumentError("objective has no nodes or samples");
  }
  if (config.graph.node_count() != n) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "graph has %d nodes, objective has %d", config.graph.node_count(), n));
  }
  if (config.iterations < 1) {
    return absl::InvalidArgumentError("iterations must be >= 1");
  }
  if (!(config.step_size > 0.0) || !std::isfinite(config.step_size)) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "step size must be positive and finite, got %g", config.step_size));
  }
  const bool needs_schedule = config.noise_enabled || config.clipping_enabled;
  if (needs_schedule && !config.schedule.has_value()) {
    return absl::InvalidArgumentError(
        "a noise schedule is required when noise or clipping is enabled");
  }
  if (config.schedule.has_value() &&
      config.schedule->steps() != config.iterations) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "schedule covers %d steps but the run has %d iterations",
        config.schedule->steps(), config.iterations));
  }
  if (initial.size() != 1 && initial.size() != n) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "need 1 or %d initial parameter vectors, got %d", n, initial.size()));
  }
  for (const auto& x0 : initial) {
    if (x0.size() != d) {
      return absl::InvalidArgumentError(absl::StrFormat(
          "initial parameters have dimension %d, objective has %d", x0.size(),
          d));
    }
  }
  config.workers = std::max<std::size_t>(config.workers, 1);

  Simulator sim(std::move(config), objective);
  const RunConfig& c = sim.config_;
  if (c.noise_enabled) {
    if (c.noise_form == NoiseForm::kGeneral) {
      DYNDP_ASSIGN_OR_RETURN(sim.sigmas_, GeneralFormSigmas(*c.schedule));
    } else {
      const auto s = c.schedule->sigmas();
      sim.sigmas_.assign(s.begin(), s.end());
    }
  } else {
    sim.sigmas_.assign(static_cast<std::size_t>(c.iterations), 0.0);
  }
  sim.states_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double>& x0 = initial.size() == 1 ? initial[0] : initial[i];
    sim.states_[i] = NodeState{.x = x0, .w = 1.0, .z = x0};
    sim.sampling_rngs_.emplace_back(c.seed, i, StreamPurpose::kSampling);
    sim.noise_rngs_.emplace_back(c.seed, i, StreamPurpose::kNoise);
  }
  sim.mean_update_.assign(d, 0.0);
  return sim;
}

RoundStats Simulator::Evaluate() const { return Measure(true); }

RoundStats Simulator::Measure(bool with_accuracy) const {
  RoundStats row;
  row.k = round_;
  const std::vector<double> mean = AverageIterate(states_);
  std::vector<double> grad(mean.size());
  row.loss = objective_->GlobalLoss(mean, grad);
  row.grad_norm_sq = std::inner_product(grad.begin(), grad.end(),
                                        grad.begin(), 0.0);
  row.consensus_error = ConsensusError(states_);
  if (with_accuracy) row.accuracy = objective_->Accuracy(mean);
  for (const NodeState& s : states_) row.weight_sum += s.w;
  return row;
}

absl::StatusOr<RoundStats> Simulator::Step() {
  const std::int64_t k = round_;
  if (k >= config_.iterations) {
    return absl::OutOfRangeError(absl::StrFormat(
        "all %d iterations have already run", config_.iterations));
  }
  const std::size_t n = states_.size();
  const std::size_t d = objective_->dimension();
  const std::size_t records = objective_->samples_per_node();
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const double bound =
      config_.clipping_enabled ? config_.schedule->ClipBoundAt(k) : kInf;
  const double sigma = sigmas_[k];

  RoundStats row = Measure(config_.track_accuracy);
  row.clip_bound = bound;
  row.budget = config_.schedule.has_value() && config_.noise_enabled
                   ? config_.schedule->BudgetAt(k)
                   : kInf;
  row.sigma = sigma;

  std::vector<std::vector<double>> halves(n);
  std::vector<std::vector<double>> updates(n);
  std::vector<double> norms(n);
  std::vector<char> clipped(n);
  ParallelFor(config_.workers, n, [&](std::size_t i) {
    std::vector<double>& update = updates[i];
    update.resize(d);
    const std::uint64_t index = sampling_rngs_[i].UniformIndex(records);
    objective_->SampleGradient(i, index, states_[i].z, update);
    norms[i] = NormOf(update);
    clipped[i] = ClipGradientInPlace(update, bound);
    halves[i].resize(d);
    const std::vector<double>& x = states_[i].x;
    for (std::size_t j = 0; j < d; ++j) {
      if (sigma > 0.0) update[j] += sigma * noise_rngs_[i].Gaussian();
      halves[i][j] = x[j] - config_.step_size * update[j];
    }
  });

  std::fill(mean_update_.begin(), mean_update_.end(), 0.0);
  std::size_t clip_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) mean_update_[j] += updates[i][j];
    clip_count += clipped[i] ? 1 : 0;
    row.mean_sample_grad_norm += norms[i];
    row.max_sample_grad_norm = std::max(row.max_sample_grad_norm, norms[i]);
  }
  for (double& m : mean_update_) m /= static_cast<double>(n);
  row.mean_sample_grad_norm /= static_cast<double>(n);
  row.clip_rate = static_cast<double>(clip_count) / static_cast<double>(n);

  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) weights[i] = states_[i].w;
  DYNDP_ASSIGN_OR_RETURN(std::vector<NodeState> next,
                         MixRound(halves, weights, config_.graph.MatrixAt(k)));
  for (std::size_t i = 0; i < n; ++i) {
    for (double v : next[i].x) {
      if (!std::isfinite(v)) {
        return absl::InternalError(absl::StrFormat(
            "NonFiniteParameter: node %d diverged at round %d (step size %g "
            "too large?)",
            i, k, config_.step_size));
      }
    }
  }
  states_ = std::move(next);
  ++round_;
  return row;
}

absl::StatusOr<MetricsLog> Run(const RunConfig& config,
                               const Objective& objective,
                               std::vector<std::vector<double>> initial) {
  DYNDP_ASSIGN_OR_RETURN(Simulator sim,
                         Simulator::Create(config, objective, std::move(initial)));
  MetricsLog log;
  log.AddHeader("nodes", absl::StrCat(objective.node_count()));
  log.AddHeader("dimension", absl::StrCat(objective.dimension()));
  log.AddHeader("records_per_node", absl::StrCat(objective.samples_per_node()));
  log.AddHeader("iterations", absl::StrCat(config.iterations));
  log.AddHeader("step_size", Fmt(config.step_size));
  log.AddHeader("seed", absl::StrCat(config.seed));
  log.AddHeader("noise", config.noise_enabled ? "on" : "off");
  log.AddHeader("clipping", config.clipping_enabled ? "on" : "off");
  log.AddHeader("noise_form",
                config.noise_form == NoiseForm::kGeneral ? "general" : "per_step");
  if (config.schedule.has_value()) {
    const NoiseSchedule& s = *config.schedule;
    const PrivacySpec& privacy = s.privacy();
    log.AddHeader("variant", std::string(VariantName(s.variant())));
    log.AddHeader("epsilon", Fmt(privacy.epsilon));
    log.AddHeader("delta", Fmt(privacy.delta));
    log.AddHeader("mu_tot", Fmt(privacy.mu_tot));
    log.AddHeader(UsesBudgetGrowth(s.variant()) ? "mu_0" : "mu_bar",
                  Fmt(s.base_budget()));
    log.AddHeader("composed_mu_tot", Fmt(s.composed_mu_tot()));
    log.AddHeader(UsesClipDecay(s.variant()) ? "C_0" : "C_bar",
                  Fmt(s.base_clip()));
    log.AddHeader("rho_c", Fmt(s.rho_c()));
    log.AddHeader("rho_mu", Fmt(s.rho_mu()));
    if (s.exceeds_linearized_regime()) {
      log.AddHeader("warning",
                    "some mu_k^2 > 1; the general-form noise scale bound is "
                    "outside its derivation regime");
    }
  }
  const GraphSchedule& graph = config.graph;
  log.AddHeader("graph", std::string(GraphKindName(graph.kind())));
  const ScheduleDiagnostics diag = DiagnoseSchedule(
      graph, objective.dimension(),
      std::max(graph.period(), graph.node_count()));
  if (diag.spectral.ok()) {
    log.AddHeader("window_B", absl::StrCat(diag.connectivity.window));
    log.AddHeader("diameter", absl::StrCat(diag.connectivity.diameter));
    log.AddHeader("eps_min", Fmt(diag.spectral->eps_min));
    log.AddHeader("lambda", Fmt(diag.spectral->lambda));
    log.AddHeader("q", Fmt(diag.spectral->q));
    log.AddHeader("psi_bound", Fmt(diag.spectral->psi_bound));
  } else {
    log.AddHeader("q", absl::StrCat("n/a (", diag.spectral.status().message(),
                                    ")"));
  }

  log.rows.reserve(static_cast<std::size_t>(config.iterations));
  for (std::int64_t k = 0; k < config.iterations; ++k) {
    DYNDP_ASSIGN_OR_RETURN(RoundStats row, sim.Step());
    log.rows.push_back(std::move(row));
  }
  log.final_state = sim.Evaluate();
  return log;
}

}  // namespace dyndp
