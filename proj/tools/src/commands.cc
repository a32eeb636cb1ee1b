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

#include "commands.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dyndp/engine.h"

namespace dyndp {
namespace {

std::string Num(double v) { return absl::StrFormat("%.17g", v); }

bool WritesToStdout(const std::string& path) {
  return path.empty() || path == "-";
}

CommandError ConfigError(absl::Status status) {
  return {kExitConfigError, std::move(status)};
}

CommandError RuntimeError(absl::Status status) {
  return {kExitRuntimeError, std::move(status)};
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

// Sample standard deviation; zero for a single replicate.
MeanStd Moments(const std::vector<double>& xs) {
  MeanStd m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return m;
  double ss = 0.0;
  for (double x : xs) ss += (x - m.mean) * (x - m.mean);
  m.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return m;
}

// Opens `path` for writing, or hands back `fallback` for stdout.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (WritesToStdout(path)) {
      stream_ = &fallback;
      return;
    }
    const std::filesystem::path parent = std::filesystem::path(path).parent_path();
    std::error_code ignored;
    if (!parent.empty()) std::filesystem::create_directories(parent, ignored);
    file_.open(path);
    stream_ = &file_;
  }
  bool ok() const { return static_cast<bool>(*stream_); }
  std::ostream& stream() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_ = nullptr;
};

int Report(const CommandError& error, std::ostream& err) {
  err << (error.exit_code == kExitConfigError ? "config error: "
                                              : "runtime error: ")
      << error.status.message() << '\n';
  return error.exit_code;
}

absl::Status CannotWrite(const std::string& path) {
  return absl::UnavailableError(absl::StrCat("cannot write '", path, "'"));
}

}  // namespace

std::uint64_t ReplicateSeed(const ExperimentConfig& config, int replicate) {
  return config.seed + static_cast<std::uint64_t>(replicate);
}

std::string ReplicateOutputPath(const std::string& path, std::uint64_t seed) {
  const std::filesystem::path p(path);
  std::filesystem::path out = p.parent_path();
  out /= absl::StrCat(p.stem().string(), "_seed", seed, p.extension().string());
  return out.string();
}

CommandResult<MetricsLog> ExecuteRun(const ExperimentConfig& config,
                                     std::uint64_t seed) {
  CommandResult<MetricsLog> result;
  absl::StatusOr<PreparedRun> prepared = PrepareRun(config, seed);
  if (!prepared.ok()) {
    result.error = ConfigError(prepared.status());
    return result;
  }
  absl::StatusOr<MetricsLog> log =
      Run(prepared->config, *prepared->task, {prepared->initial});
  if (!log.ok()) {
    result.error = RuntimeError(log.status());
    return result;
  }
  log->AddHeader("model", std::string(ModelKindName(config.model)));
  log->AddHeader("step_preset", std::string(StepPresetName(config.step_preset)));
  result.value = *std::move(log);
  return result;
}

CommandResult<std::vector<ComparisonRow>> Compare(
    const ExperimentConfig& config, const std::vector<Variant>& variants) {
  CommandResult<std::vector<ComparisonRow>> result;
  result.value.emplace();

  auto evaluate = [&](const ExperimentConfig& cell,
                      ComparisonRow row) -> std::optional<CommandError> {
    std::vector<double> losses, accuracies, grads;
    for (int r = 0; r < cell.repeat; ++r) {
      CommandResult<MetricsLog> run = ExecuteRun(cell, ReplicateSeed(cell, r));
      if (!run.ok()) return run.error;
      const Summary s = Summarize(*run.value);
      losses.push_back(s.final_loss);
      accuracies.push_back(s.final_accuracy.value_or(0.0));
      grads.push_back(s.mean_grad_norm_sq);
    }
    row.replicates = cell.repeat;
    const MeanStd loss = Moments(losses);
    const MeanStd acc = Moments(accuracies);
    const MeanStd grad = Moments(grads);
    row.final_loss_mean = loss.mean;
    row.final_loss_std = loss.std;
    row.final_accuracy_mean = acc.mean;
    row.final_accuracy_std = acc.std;
    row.mean_grad_norm_sq_mean = grad.mean;
    row.mean_grad_norm_sq_std = grad.std;
    result.value->push_back(std::move(row));
    return std::nullopt;
  };

  for (Variant v : variants) {
    ExperimentConfig cell = config;
    cell.variant = v;
    cell.noise = true;
    cell.clipping = true;
    ComparisonRow row;
    row.label = std::string(VariantDisplayName(v));
    row.variant = v;
    if (auto error = evaluate(cell, std::move(row))) {
      result.error = std::move(error);
      return result;
    }
  }
  ExperimentConfig baseline = config;
  baseline.noise = false;
  baseline.clipping = false;
  ComparisonRow row;
  row.label = "non-private";
  if (auto error = evaluate(baseline, std::move(row))) {
    result.error = std::move(error);
  }
  return result;
}

void WriteComparisonCsv(const ExperimentConfig& config,
                        const std::vector<ComparisonRow>& rows,
                        std::ostream& out) {
  out << "variant,epsilon,delta,replicates,final_loss_mean,final_loss_std,"
         "final_accuracy_mean,final_accuracy_std,mean_grad_norm_sq_mean,"
         "mean_grad_norm_sq_std\n";
  for (const ComparisonRow& row : rows) {
    out << row.label << ',';
    if (row.variant.has_value()) {
      out << Num(config.epsilon) << ',' << Num(config.delta);
    } else {
      out << ',';
    }
    out << ',' << row.replicates << ',' << Num(row.final_loss_mean) << ','
        << Num(row.final_loss_std) << ',' << Num(row.final_accuracy_mean)
        << ',' << Num(row.final_accuracy_std) << ','
        << Num(row.mean_grad_norm_sq_mean) << ','
        << Num(row.mean_grad_norm_sq_std) << '\n';
  }
}

absl::StatusOr<SweepAxis> ParseSweepAxis(absl::string_view name) {
  for (SweepAxis axis : {SweepAxis::kRhoC, SweepAxis::kRhoMu,
                         SweepAxis::kEpsilon, SweepAxis::kNodes,
                         SweepAxis::kGraph}) {
    if (name == SweepAxisName(axis)) return axis;
  }
  return absl::InvalidArgumentError(absl::StrCat(
      "unknown sweep axis '", name,
      "' (expected rho_c, rho_mu, epsilon, n or graph)"));
}

absl::string_view SweepAxisName(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kRhoC:
      return "rho_c";
    case SweepAxis::kRhoMu:
      return "rho_mu";
    case SweepAxis::kEpsilon:
      return "epsilon";
    case SweepAxis::kNodes:
      return "n";
    case SweepAxis::kGraph:
      return "graph";
  }
  return "unknown";
}

absl::StatusOr<ExperimentConfig> ApplySweepValue(const ExperimentConfig& config,
                                                 SweepAxis axis,
                                                 absl::string_view value) {
  absl::string_view key;
  switch (axis) {
    case SweepAxis::kRhoC:
      key = "schedule.rho_c";
      break;
    case SweepAxis::kRhoMu:
      key = "schedule.rho_mu";
      break;
    case SweepAxis::kEpsilon:
      key = "privacy.epsilon";
      break;
    case SweepAxis::kNodes:
      key = "topology.nodes";
      break;
    case SweepAxis::kGraph:
      key = "topology.graph";
      break;
  }
  const std::string overrides[] = {absl::StrCat(key, "=", value)};
  return ParseExperimentConfig(SerializeExperimentConfig(config), overrides);
}

CommandResult<std::vector<SweepRow>> Sweep(
    const ExperimentConfig& config, SweepAxis axis,
    const std::vector<std::string>& values) {
  CommandResult<std::vector<SweepRow>> result;
  std::vector<ExperimentConfig> cells;
  for (const std::string& value : values) {
    absl::StatusOr<ExperimentConfig> cell = ApplySweepValue(config, axis, value);
    if (!cell.ok()) {
      result.error = ConfigError(cell.status());
      return result;
    }
    cells.push_back(*std::move(cell));
  }
  result.value.emplace();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (int r = 0; r < cells[c].repeat; ++r) {
      const std::uint64_t seed = ReplicateSeed(cells[c], r);
      CommandResult<MetricsLog> run = ExecuteRun(cells[c], seed);
      if (!run.ok()) {
        result.error = std::move(run.error);
        return result;
      }
      SweepRow row;
      row.value = values[c];
      row.replicate = r;
      row.seed = seed;
      const absl::StatusOr<StepPlan> plan = ResolveSteps(cells[c]);
      row.iterations = plan->iterations;
      row.step_size = plan->step_size;
      row.summary = Summarize(*run.value);
      result.value->push_back(std::move(row));
    }
  }
  return result;
}

void WriteSweepCsv(SweepAxis axis, const std::vector<SweepRow>& rows,
                   std::ostream& out) {
  out << SweepAxisName(axis)
      << ",replicate,seed,iterations,step_size,final_loss,final_accuracy,"
         "mean_loss,mean_grad_norm_sq,min_grad_norm_sq,clipped_fraction\n";
  for (const SweepRow& row : rows) {
    const Summary& s = row.summary;
    out << row.value << ',' << row.replicate << ',' << row.seed << ','
        << row.iterations << ',' << Num(row.step_size) << ','
        << Num(s.final_loss) << ',';
    if (s.final_accuracy.has_value()) out << Num(*s.final_accuracy);
    out << ',' << Num(s.mean_loss) << ',' << Num(s.mean_grad_norm_sq) << ','
        << Num(s.min_grad_norm_sq) << ',' << Num(s.clipped_fraction) << '\n';
  }
}

int CmdRun(const ExperimentConfig& config, std::ostream& out,
           std::ostream& err) {
  if (config.repeat > 1 && WritesToStdout(config.output)) {
    return Report(ConfigError(absl::InvalidArgumentError(
                      "field experiment.output: required when repeat > 1")),
                  err);
  }
  for (int r = 0; r < config.repeat; ++r) {
    const std::uint64_t seed = ReplicateSeed(config, r);
    CommandResult<MetricsLog> run = ExecuteRun(config, seed);
    if (!run.ok()) return Report(*run.error, err);
    const std::string path = config.repeat > 1
                                 ? ReplicateOutputPath(config.output, seed)
                                 : config.output;
    Sink sink(path, out);
    if (!sink.ok()) return Report(RuntimeError(CannotWrite(path)), err);
    WriteMetricsCsv(*run.value, sink.stream());
    if (!sink.stream()) return Report(RuntimeError(CannotWrite(path)), err);
    if (!WritesToStdout(path)) {
      for (const auto& [key, value] : run.value->header) {
        out << key << ": " << value << '\n';
      }
      const Summary s = Summarize(*run.value);
      out << absl::StrFormat("final_loss: %.6g\n", s.final_loss);
      if (s.final_accuracy.has_value()) {
        out << absl::StrFormat("final_accuracy: %.4f\n", *s.final_accuracy);
      }
      out << "wrote " << run.value->rows.size() << " rows to " << path << "\n";
    }
  }
  return kExitOk;
}

int CmdCompare(const ExperimentConfig& config,
               const std::vector<Variant>& variants, std::ostream& out,
               std::ostream& err) {
  CommandResult<std::vector<ComparisonRow>> rows = Compare(config, variants);
  if (!rows.ok()) return Report(*rows.error, err);
  Sink sink(config.output, out);
  if (!sink.ok()) return Report(RuntimeError(CannotWrite(config.output)), err);
  WriteComparisonCsv(config, *rows.value, sink.stream());
  return kExitOk;
}

int CmdSweep(const ExperimentConfig& config, SweepAxis axis,
             const std::vector<std::string>& values, std::ostream& out,
             std::ostream& err) {
  CommandResult<std::vector<SweepRow>> rows = Sweep(config, axis, values);
  if (!rows.ok()) return Report(*rows.error, err);
  Sink sink(config.output, out);
  if (!sink.ok()) return Report(RuntimeError(CannotWrite(config.output)), err);
  WriteSweepCsv(axis, *rows.value, sink.stream());
  return kExitOk;
}

int CmdAccountant(const ExperimentConfig& config, std::ostream& out,
                  std::ostream& err) {
  if (!config.is_private()) {
    return Report(ConfigError(absl::InvalidArgumentError(
                      "accountant needs engine.noise or engine.clipping on")),
                  err);
  }
  absl::StatusOr<StepPlan> plan = ResolveSteps(config);
  if (!plan.ok()) return Report(ConfigError(plan.status()), err);
  absl::StatusOr<NoiseSchedule> schedule =
      BuildSchedule(config, plan->iterations);
  if (!schedule.ok()) return Report(ConfigError(schedule.status()), err);

  Sink sink(config.output, out);
  if (!sink.ok()) return Report(RuntimeError(CannotWrite(config.output)), err);
  std::ostream& s = sink.stream();
  const PrivacySpec& privacy = schedule->privacy();
  s << "# variant=" << VariantName(schedule->variant()) << '\n'
    << "# epsilon=" << Num(privacy.epsilon) << '\n'
    << "# delta=" << Num(privacy.delta) << '\n'
    << "# records_per_node=" << privacy.records << '\n'
    << "# iterations=" << privacy.steps << '\n'
    << "# mu_tot=" << Num(privacy.mu_tot) << '\n'
    << (UsesBudgetGrowth(schedule->variant()) ? "# mu_0=" : "# mu_bar=")
    << Num(schedule->base_budget()) << '\n'
    << "# composed_mu_tot=" << Num(schedule->composed_mu_tot()) << '\n';
  if (schedule->exceeds_linearized_regime()) {
    s << "# warning=some mu_k^2 > 1\n";
  }
  WriteScheduleCsv(*schedule, s);
  return kExitOk;
}

}  // namespace dyndp
