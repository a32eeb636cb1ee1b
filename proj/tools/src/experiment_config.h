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

#ifndef DYNDP_TOOLS_EXPERIMENT_CONFIG_H_
#define DYNDP_TOOLS_EXPERIMENT_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "dyndp/engine.h"
#include "dyndp/models.h"
#include "dyndp/schedule.h"
#include "dyndp/topology.h"

namespace dyndp {

enum class StepPreset { kManual, kCorollary };

// Everything needed to reproduce a run, a comparison or a sweep. Read from
// an INI file whose sections mirror the library modules:
//
//   [privacy]     epsilon, delta
//   [schedule]    variant, clip, rho_c, rho_mu, noise_form
//   [topology]    graph, nodes, matrices
//   [engine]      step_preset, step_size, iterations, seed, workers, noise,
//                 clipping, track_accuracy
//   [task]        model, per_node, input_dim, classes, hidden, separation,
//                 test_size, data
//   [experiment]  repeat, output
struct ExperimentConfig {
  double epsilon = 1.0;
  double delta = 1e-4;

  Variant variant = Variant::kConst;
  double clip = 1.0;
  std::optional<double> rho_c;
  std::optional<double> rho_mu;
  NoiseForm noise_form = NoiseForm::kPerStep;

  GraphKind graph = GraphKind::kExponential;
  std::size_t nodes = 8;
  // Explicit matrix sequence: rows separated by ';', matrices by '|'.
  std::string matrices;

  StepPreset step_preset = StepPreset::kManual;
  double step_size = 0.05;
  std::int64_t iterations = 500;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  bool noise = true;
  bool clipping = true;
  bool track_accuracy = true;

  ModelKind model = ModelKind::kLogistic;
  std::size_t per_node = 100;
  std::size_t input_dim = 10;
  std::size_t classes = 2;
  std::size_t hidden = 16;
  double separation = 1.5;
  std::size_t test_size = 1000;
  std::string data;  // CSV path; empty means synthetic data

  int repeat = 1;
  std::string output;  // empty or "-" means stdout

  bool is_private() const { return noise || clipping; }

  friend bool operator==(const ExperimentConfig&,
                         const ExperimentConfig&) = default;
};

absl::string_view StepPresetName(StepPreset preset);

// Parses INI text, then applies `overrides` of the form "section.key=value".
// Errors are InvalidArgument and name the offending line or field.
absl::StatusOr<ExperimentConfig> ParseExperimentConfig(
    absl::string_view text, std::span<const std::string> overrides = {});

absl::StatusOr<ExperimentConfig> LoadExperimentConfig(
    const std::string& path, std::span<const std::string> overrides = {});

// Canonical INI form; ParseExperimentConfig(SerializeExperimentConfig(c)) == c.
std::string SerializeExperimentConfig(const ExperimentConfig& config);

absl::Status ValidateExperimentConfig(const ExperimentConfig& config);

struct StepPlan {
  double step_size = 0.0;
  std::int64_t iterations = 0;
  std::optional<double> mu_tot;  // set when the accountant was consulted
};

// Resolves (gamma, K). The corollary preset uses gamma = 1/(sqrt(n) J mu_tot)
// and K = round(n J^2 mu_tot^2), and requires J mu_tot > sqrt(n).
absl::StatusOr<StepPlan> ResolveSteps(const ExperimentConfig& config);

absl::StatusOr<NoiseSchedule> BuildSchedule(const ExperimentConfig& config,
                                            std::int64_t iterations);

absl::StatusOr<GraphSchedule> BuildGraph(const ExperimentConfig& config);

// A run ready to hand to Run(): the task owns its data, `config` points to
// nothing outside this struct.
struct PreparedRun {
  std::unique_ptr<ClassificationTask> task;
  RunConfig config;
  std::vector<double> initial;
};

// Builds data, model, schedule and graph for one replicate. Data, sampling,
// noise and initialization all derive from `seed`.
absl::StatusOr<PreparedRun> PrepareRun(const ExperimentConfig& config,
                                       std::uint64_t seed);

}  // namespace dyndp

#endif  // DYNDP_TOOLS_EXPERIMENT_CONFIG_H_
