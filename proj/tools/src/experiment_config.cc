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

#include "experiment_config.h"

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <utility>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "absl/status/status.h"
#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "dyndp/accountant.h"
#include "dyndp/status_macros.h"

namespace dyndp {
namespace {

namespace pt = boost::property_tree;

absl::Status FieldError(absl::string_view section, absl::string_view key,
                        absl::string_view message) {
  return absl::InvalidArgumentError(
      absl::StrCat("config error: field ", section, ".", key, ": ", message));
}

std::string FormatDouble(double v) { return absl::StrFormat("%.17g", v); }

using Parser =
    std::function<absl::Status(ExperimentConfig&, absl::string_view)>;
using Formatter =
    std::function<std::optional<std::string>(const ExperimentConfig&)>;

struct Field {
  const char* section;
  const char* key;
  Parser parse;
  Formatter format;
};

absl::Status BadValue(absl::string_view expected, absl::string_view got) {
  return absl::InvalidArgumentError(
      absl::StrCat("expected ", expected, ", got '", got, "'"));
}

Field DoubleField(const char* section, const char* key,
                  double ExperimentConfig::*member) {
  return {section, key,
          [member](ExperimentConfig& c, absl::string_view v) {
            double out;
            if (!absl::SimpleAtod(v, &out) || !std::isfinite(out)) {
              return BadValue("a finite number", v);
            }
            c.*member = out;
            return absl::OkStatus();
          },
          [member](const ExperimentConfig& c) -> std::optional<std::string> {
            return FormatDouble(c.*member);
          }};
}

Field OptionalDoubleField(const char* section, const char* key,
                          std::optional<double> ExperimentConfig::*member) {
  return {section, key,
          [member](ExperimentConfig& c, absl::string_view v) {
            double out;
            if (!absl::SimpleAtod(v, &out) || !std::isfinite(out)) {
              return BadValue("a finite number", v);
            }
            c.*member = out;
            return absl::OkStatus();
          },
          [member](const ExperimentConfig& c) -> std::optional<std::string> {
            if (!(c.*member).has_value()) return std::nullopt;
            return FormatDouble(*(c.*member));
          }};
}

template <typename T>
Field UnsignedField(const char* section, const char* key,
                    T ExperimentConfig::*member) {
  return {section, key,
          [member](ExperimentConfig& c, absl::string_view v) {
            std::uint64_t out;
            if (!absl::SimpleAtoi(v, &out) ||
                out > static_cast<std::uint64_t>(
                          std::numeric_limits<T>::max())) {
              return BadValue("a non-negative integer", v);
            }
            c.*member = static_cast<T>(out);
            return absl::OkStatus();
          },
          [member](const ExperimentConfig& c) -> std::optional<std::string> {
            return absl::StrCat(c.*member);
          }};
}

Field BoolField(const char* section, const char* key,
                bool ExperimentConfig::*member) {
  return {section, key,
          [member](ExperimentConfig& c, absl::string_view v) {
            bool out;
            if (!absl::SimpleAtob(v, &out)) return BadValue("true or false", v);
            c.*member = out;
            return absl::OkStatus();
          },
          [member](const ExperimentConfig& c) -> std::optional<std::string> {
            return std::string(c.*member ? "true" : "false");
          }};
}

Field StringField(const char* section, const char* key,
                  std::string ExperimentConfig::*member) {
  return {section, key,
          [member](ExperimentConfig& c, absl::string_view v) {
            c.*member = std::string(v);
            return absl::OkStatus();
          },
          [member](const ExperimentConfig& c) -> std::optional<std::string> {
            if ((c.*member).empty()) return std::nullopt;
            return c.*member;
          }};
}

// Enum fields reuse the library's Parse*/..Name pairs.
template <typename E>
Field EnumField(const char* section, const char* key, E ExperimentConfig::*member,
                absl::StatusOr<E> (*parse)(absl::string_view),
                absl::string_view (*name)(E)) {
  return {section, key,
          [member, parse](ExperimentConfig& c, absl::string_view v) {
            absl::StatusOr<E> out = parse(v);
            if (!out.ok()) return out.status();
            c.*member = *out;
            return absl::OkStatus();
          },
          [member, name](const ExperimentConfig& c) -> std::optional<std::string> {
            return std::string(name(c.*member));
          }};
}

absl::StatusOr<NoiseForm> ParseNoiseForm(absl::string_view v) {
  if (v == "per_step") return NoiseForm::kPerStep;
  if (v == "general") return NoiseForm::kGeneral;
  return BadValue("per_step or general", v);
}

absl::string_view NoiseFormName(NoiseForm form) {
  return form == NoiseForm::kGeneral ? "general" : "per_step";
}

absl::StatusOr<StepPreset> ParseStepPreset(absl::string_view v) {
  if (v == "manual") return StepPreset::kManual;
  if (v == "corollary") return StepPreset::kCorollary;
  return BadValue("manual or corollary", v);
}

const std::vector<Field>& Fields() {
  using C = ExperimentConfig;
  static const std::vector<Field>* fields = new std::vector<Field>{
      DoubleField("privacy", "epsilon", &C::epsilon),
      DoubleField("privacy", "delta", &C::delta),
      EnumField<Variant>("schedule", "variant", &C::variant, &ParseVariant,
                         &VariantName),
      DoubleField("schedule", "clip", &C::clip),
      OptionalDoubleField("schedule", "rho_c", &C::rho_c),
      OptionalDoubleField("schedule", "rho_mu", &C::rho_mu),
      EnumField<NoiseForm>("schedule", "noise_form", &C::noise_form,
                           &ParseNoiseForm, &NoiseFormName),
      EnumField<GraphKind>("topology", "graph", &C::graph, &ParseGraphKind,
                           &GraphKindName),
      UnsignedField("topology", "nodes", &C::nodes),
      StringField("topology", "matrices", &C::matrices),
      EnumField<StepPreset>("engine", "step_preset", &C::step_preset,
                            &ParseStepPreset, &StepPresetName),
      DoubleField("engine", "step_size", &C::step_size),
      UnsignedField("engine", "iterations", &C::iterations),
      UnsignedField("engine", "seed", &C::seed),
      UnsignedField("engine", "workers", &C::workers),
      BoolField("engine", "noise", &C::noise),
      BoolField("engine", "clipping", &C::clipping),
      BoolField("engine", "track_accuracy", &C::track_accuracy),
      EnumField<ModelKind>("task", "model", &C::model, &ParseModelKind,
                           &ModelKindName),
      UnsignedField("task", "per_node", &C::per_node),
      UnsignedField("task", "input_dim", &C::input_dim),
      UnsignedField("task", "classes", &C::classes),
      UnsignedField("task", "hidden", &C::hidden),
      DoubleField("task", "separation", &C::separation),
      UnsignedField("task", "test_size", &C::test_size),
      StringField("task", "data", &C::data),
      UnsignedField("experiment", "repeat", &C::repeat),
      StringField("experiment", "output", &C::output),
  };
  return *fields;
}

const Field* FindField(absl::string_view section, absl::string_view key) {
  for (const Field& f : Fields()) {
    if (section == f.section && key == f.key) return &f;
  }
  return nullptr;
}

absl::Status ApplyValue(ExperimentConfig& config, absl::string_view section,
                        absl::string_view key, absl::string_view value) {
  const Field* field = FindField(section, key);
  if (field == nullptr) return FieldError(section, key, "unknown key");
  absl::Status s = field->parse(config, absl::StripAsciiWhitespace(value));
  if (!s.ok()) return FieldError(section, key, s.message());
  return absl::OkStatus();
}

absl::StatusOr<std::vector<std::vector<double>>> ParseRows(
    absl::string_view text) {
  std::vector<std::vector<double>> rows;
  for (absl::string_view row : absl::StrSplit(text, ';')) {
    std::vector<double>& out = rows.emplace_back();
    for (absl::string_view cell : absl::StrSplit(row, ',')) {
      double v;
      if (!absl::SimpleAtod(absl::StripAsciiWhitespace(cell), &v)) {
        return BadValue("a number", cell);
      }
      out.push_back(v);
    }
  }
  return rows;
}

}  // namespace

absl::string_view StepPresetName(StepPreset preset) {
  return preset == StepPreset::kCorollary ? "corollary" : "manual";
}

absl::StatusOr<ExperimentConfig> ParseExperimentConfig(
    absl::string_view text, std::span<const std::string> overrides) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    return absl::InvalidArgumentError(absl::StrFormat(
        "config error: line %d: %s", e.line(), e.message()));
  }

  ExperimentConfig config;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      if (!body.data().empty()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "config error: key '", section, "' is outside any section"));
      }
      continue;
    }
    for (const auto& [key, value] : body) {
      DYNDP_RETURN_IF_ERROR(ApplyValue(config, section, key, value.data()));
    }
  }
  for (const std::string& entry : overrides) {
    const std::pair<absl::string_view, absl::string_view> kv =
        absl::StrSplit(entry, absl::MaxSplits('=', 1));
    const std::pair<absl::string_view, absl::string_view> path =
        absl::StrSplit(kv.first, absl::MaxSplits('.', 1));
    if (entry.find('=') == std::string::npos || path.second.empty()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "config error: override '", entry, "' is not section.key=value"));
    }
    DYNDP_RETURN_IF_ERROR(ApplyValue(config, absl::StripAsciiWhitespace(path.first),
                                     absl::StripAsciiWhitespace(path.second),
                                     kv.second));
  }
  DYNDP_RETURN_IF_ERROR(ValidateExperimentConfig(config));
  return config;
}

absl::StatusOr<ExperimentConfig> LoadExperimentConfig(
    const std::string& path, std::span<const std::string> overrides) {
  std::ifstream in(path);
  if (!in) {
    return absl::InvalidArgumentError(
        absl::StrCat("config error: cannot open '", path, "'"));
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  absl::StatusOr<ExperimentConfig> config =
      ParseExperimentConfig(buffer.str(), overrides);
  if (!config.ok()) {
    return absl::Status(config.status().code(),
                        absl::StrCat(path, ": ", config.status().message()));
  }
  return config;
}

std::string SerializeExperimentConfig(const ExperimentConfig& config) {
  std::string out;
  absl::string_view section;
  for (const Field& f : Fields()) {
    std::optional<std::string> value = f.format(config);
    if (section != f.section) {
      if (!section.empty()) out += "\n";
      section = f.section;
      absl::StrAppend(&out, "[", section, "]\n");
    }
    if (value.has_value()) absl::StrAppend(&out, f.key, " = ", *value, "\n");
  }
  return out;
}

absl::Status ValidateExperimentConfig(const ExperimentConfig& c) {
  if (c.is_private()) {
    if (!(c.epsilon > 0.0)) {
      return FieldError("privacy", "epsilon", "must be > 0");
    }
    if (!(c.delta > 0.0 && c.delta < 1.0)) {
      return FieldError("privacy", "delta", "must lie in (0, 1)");
    }
    if (!(c.clip > 0.0)) return FieldError("schedule", "clip", "must be > 0");
    if (UsesClipDecay(c.variant)) {
      if (!c.rho_c.has_value()) {
        return FieldError("schedule", "rho_c",
                          absl::StrCat("required for variant ",
                                       VariantName(c.variant)));
      }
      if (!(*c.rho_c >= 1.0)) {
        return FieldError("schedule", "rho_c", "must be >= 1");
      }
    }
    if (UsesBudgetGrowth(c.variant)) {
      if (!c.rho_mu.has_value()) {
        return FieldError("schedule", "rho_mu",
                          absl::StrCat("required for variant ",
                                       VariantName(c.variant)));
      }
      if (!(*c.rho_mu >= 1.0)) {
        return FieldError("schedule", "rho_mu", "must be >= 1");
      }
    }
  }
  if (c.nodes < 1) return FieldError("topology", "nodes", "must be >= 1");
  if (c.graph == GraphKind::kExplicit && c.matrices.empty()) {
    return FieldError("topology", "matrices",
                      "required when graph = explicit");
  }
  if (c.graph != GraphKind::kExplicit && !c.matrices.empty()) {
    return FieldError("topology", "matrices",
                      "only allowed when graph = explicit");
  }
  if (c.step_preset == StepPreset::kManual) {
    if (!(c.step_size > 0.0)) {
      return FieldError("engine", "step_size", "must be > 0");
    }
    if (c.iterations < 1) {
      return FieldError("engine", "iterations", "must be >= 1");
    }
  }
  if (c.workers < 1) return FieldError("engine", "workers", "must be >= 1");
  if (c.per_node < 1) return FieldError("task", "per_node", "must be >= 1");
  if (c.input_dim < 1) return FieldError("task", "input_dim", "must be >= 1");
  if (c.model == ModelKind::kLogistic && c.classes != 2) {
    return FieldError("task", "classes", "logistic model needs classes = 2");
  }
  if (c.classes < 2) return FieldError("task", "classes", "must be >= 2");
  if (c.model == ModelKind::kMlp && c.hidden < 1) {
    return FieldError("task", "hidden", "must be >= 1");
  }
  if (c.repeat < 1) return FieldError("experiment", "repeat", "must be >= 1");
  return absl::OkStatus();
}

absl::StatusOr<StepPlan> ResolveSteps(const ExperimentConfig& config) {
  StepPlan plan;
  if (config.is_private() || config.step_preset == StepPreset::kCorollary) {
    absl::StatusOr<double> mu_tot =
        MuTotFromEpsDelta(config.epsilon, config.delta);
    if (!mu_tot.ok()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "config error: privacy: ", mu_tot.status().message()));
    }
    plan.mu_tot = *mu_tot;
  }
  if (config.step_preset == StepPreset::kManual) {
    plan.step_size = config.step_size;
    plan.iterations = config.iterations;
    return plan;
  }
  const double n = static_cast<double>(config.nodes);
  const double j_mu = static_cast<double>(config.per_node) * *plan.mu_tot;
  if (!(j_mu > std::sqrt(n))) {
    return FieldError(
        "engine", "step_preset",
        absl::StrFormat("corollary preset needs J*mu_tot > sqrt(n), got "
                        "%g <= %g",
                        j_mu, std::sqrt(n)));
  }
  plan.step_size = 1.0 / (std::sqrt(n) * j_mu);
  plan.iterations =
      std::max<std::int64_t>(1, std::llround(n * j_mu * j_mu));
  return plan;
}

absl::StatusOr<NoiseSchedule> BuildSchedule(const ExperimentConfig& config,
                                            std::int64_t iterations) {
  DYNDP_ASSIGN_OR_RETURN(
      PrivacySpec privacy,
      PrivacySpec::Create(config.epsilon, config.delta,
                          static_cast<std::int64_t>(config.per_node),
                          iterations));
  return NoiseSchedule::Build(config.variant, privacy, config.clip,
                              config.rho_c.value_or(1.0),
                              config.rho_mu.value_or(1.0));
}

absl::StatusOr<GraphSchedule> BuildGraph(const ExperimentConfig& config) {
  if (config.graph != GraphKind::kExplicit) {
    return GraphSchedule::Generated(config.graph, config.nodes);
  }
  std::vector<MixingMatrix> matrices;
  for (absl::string_view text : absl::StrSplit(config.matrices, '|')) {
    absl::StatusOr<std::vector<std::vector<double>>> rows = ParseRows(text);
    if (!rows.ok()) {
      return FieldError("topology", "matrices", rows.status().message());
    }
    absl::StatusOr<MixingMatrix> p = MixingMatrix::FromRows(*rows);
    if (!p.ok()) return FieldError("topology", "matrices", p.status().message());
    if (p->size() != config.nodes) {
      return FieldError("topology", "matrices",
                        absl::StrFormat("matrix is %dx%d but nodes = %d",
                                        p->size(), p->size(), config.nodes));
    }
    matrices.push_back(*std::move(p));
  }
  absl::StatusOr<GraphSchedule> schedule =
      GraphSchedule::Explicit(std::move(matrices));
  if (!schedule.ok()) {
    return FieldError("topology", "matrices", schedule.status().message());
  }
  return schedule;
}

absl::StatusOr<PreparedRun> PrepareRun(const ExperimentConfig& config,
                                       std::uint64_t seed) {
  DYNDP_RETURN_IF_ERROR(ValidateExperimentConfig(config));
  DYNDP_ASSIGN_OR_RETURN(StepPlan plan, ResolveSteps(config));

  Dataset data;
  if (config.data.empty()) {
    SynthOptions options;
    options.seed = seed;
    options.nodes = config.nodes;
    options.per_node = config.per_node;
    options.input_dim = config.input_dim;
    options.classes = config.classes;
    options.test_size = config.test_size;
    options.separation = config.separation;
    DYNDP_ASSIGN_OR_RETURN(data, SynthDataset(options));
  } else {
    std::ifstream in(config.data);
    if (!in) return FieldError("task", "data", "cannot open file");
    absl::StatusOr<Dataset> read = ReadDatasetCsv(in);
    if (!read.ok()) return FieldError("task", "data", read.status().message());
    data = *std::move(read);
    if (data.nodes != config.nodes || data.per_node != config.per_node ||
        data.input_dim != config.input_dim || data.classes != config.classes) {
      return FieldError("task", "data",
                        "file shape disagrees with topology.nodes, "
                        "task.per_node, task.input_dim or task.classes");
    }
  }

  Model model = Model::Logistic(config.input_dim);
  if (config.model == ModelKind::kMlp) {
    DYNDP_ASSIGN_OR_RETURN(
        model, Model::Mlp(config.input_dim, config.hidden, config.classes));
  }

  PreparedRun run;
  run.initial = model.InitialParameters(seed);
  run.task = std::make_unique<ClassificationTask>(std::move(model),
                                                  std::move(data));
  RunConfig& rc = run.config;
  rc.step_size = plan.step_size;
  rc.iterations = plan.iterations;
  rc.seed = seed;
  rc.workers = config.workers;
  rc.noise_enabled = config.noise;
  rc.clipping_enabled = config.clipping;
  rc.track_accuracy = config.track_accuracy;
  rc.noise_form = config.noise_form;
  if (config.is_private()) {
    DYNDP_ASSIGN_OR_RETURN(rc.schedule, BuildSchedule(config, plan.iterations));
  }
  DYNDP_ASSIGN_OR_RETURN(rc.graph, BuildGraph(config));
  return run;
}

}  // namespace dyndp
