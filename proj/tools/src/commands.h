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

#ifndef DYNDP_TOOLS_COMMANDS_H_
#define DYNDP_TOOLS_COMMANDS_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "dyndp/metrics.h"
#include "dyndp/schedule.h"
#include "experiment_config.h"

namespace dyndp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitRuntimeError = 2;

// Seed of replicate r: master seed + r.
std::uint64_t ReplicateSeed(const ExperimentConfig& config, int replicate);

// "runs/out.csv" with seed 7 -> "runs/out_seed7.csv".
std::string ReplicateOutputPath(const std::string& path, std::uint64_t seed);

// Outcome of one command stage; `exit_code` distinguishes config errors
// (raised before training) from runtime errors.
struct CommandError {
  int exit_code = kExitRuntimeError;
  absl::Status status;
};

template <typename T>
struct CommandResult {
  std::optional<T> value;
  std::optional<CommandError> error;
  bool ok() const { return !error.has_value(); }
};

CommandResult<MetricsLog> ExecuteRun(const ExperimentConfig& config,
                                     std::uint64_t seed);

struct ComparisonRow {
  std::string label;           // display name, or "non-private"
  std::optional<Variant> variant;
  int replicates = 0;
  double final_loss_mean = 0.0;
  double final_loss_std = 0.0;
  double final_accuracy_mean = 0.0;
  double final_accuracy_std = 0.0;
  double mean_grad_norm_sq_mean = 0.0;
  double mean_grad_norm_sq_std = 0.0;
};

// Runs every variant, then the non-private baseline, over config.repeat
// replicates sharing seeds and data.
CommandResult<std::vector<ComparisonRow>> Compare(
    const ExperimentConfig& config, const std::vector<Variant>& variants);

void WriteComparisonCsv(const ExperimentConfig& config,
                        const std::vector<ComparisonRow>& rows,
                        std::ostream& out);

enum class SweepAxis { kRhoC, kRhoMu, kEpsilon, kNodes, kGraph };

absl::StatusOr<SweepAxis> ParseSweepAxis(absl::string_view name);
absl::string_view SweepAxisName(SweepAxis axis);

// Returns a copy of `config` with the axis set to `value`.
absl::StatusOr<ExperimentConfig> ApplySweepValue(const ExperimentConfig& config,
                                                 SweepAxis axis,
                                                 absl::string_view value);

struct SweepRow {
  std::string value;
  int replicate = 0;
  std::uint64_t seed = 0;
  std::int64_t iterations = 0;
  double step_size = 0.0;
  Summary summary;
};

CommandResult<std::vector<SweepRow>> Sweep(
    const ExperimentConfig& config, SweepAxis axis,
    const std::vector<std::string>& values);

void WriteSweepCsv(SweepAxis axis, const std::vector<SweepRow>& rows,
                   std::ostream& out);

// Subcommand entry points; return a process exit code. Diagnostics go to
// `err`, tables to `out` unless the config names an output path.
int CmdRun(const ExperimentConfig& config, std::ostream& out,
           std::ostream& err);
int CmdCompare(const ExperimentConfig& config,
               const std::vector<Variant>& variants, std::ostream& out,
               std::ostream& err);
int CmdSweep(const ExperimentConfig& config, SweepAxis axis,
             const std::vector<std::string>& values, std::ostream& out,
             std::ostream& err);
int CmdAccountant(const ExperimentConfig& config, std::ostream& out,
                  std::ostream& err);

}  // namespace dyndp

#endif  // DYNDP_TOOLS_COMMANDS_H_
