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

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "absl/strings/str_cat.h"
#include "commands.h"
#include "experiment_config.h"

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string seed;
  std::string workers;
  std::string repeat;
  std::string output;
};

void AddCommonOptions(CLI::App* app, CommonOptions& options) {
  app->add_option("-c,--config", options.config_path, "INI experiment config")
      ->check(CLI::ExistingFile);
  app->add_option("--set", options.overrides,
                  "Override a config value, e.g. --set engine.seed=3")
      ->type_name("SECTION.KEY=VALUE");
  app->add_option("--seed", options.seed, "Shorthand for engine.seed");
  app->add_option("--workers", options.workers, "Shorthand for engine.workers");
  app->add_option("--repeat", options.repeat,
                  "Shorthand for experiment.repeat");
  app->add_option("-o,--output", options.output,
                  "Shorthand for experiment.output");
}

absl::StatusOr<dyndp::ExperimentConfig> LoadConfig(
    const CommonOptions& options) {
  std::vector<std::string> overrides = options.overrides;
  auto add = [&](const char* key, const std::string& value) {
    if (!value.empty()) overrides.push_back(absl::StrCat(key, "=", value));
  };
  add("engine.seed", options.seed);
  add("engine.workers", options.workers);
  add("experiment.repeat", options.repeat);
  add("experiment.output", options.output);
  if (options.config_path.empty()) {
    return dyndp::ParseExperimentConfig("", overrides);
  }
  return dyndp::LoadExperimentConfig(options.config_path, overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private decentralized SGD simulator"};
  app.require_subcommand(1);

  CommonOptions options;
  CLI::App* run = app.add_subcommand("run", "Train and write per-round CSV");
  AddCommonOptions(run, options);

  CLI::App* compare = app.add_subcommand(
      "compare", "Compare variants and the non-private baseline");
  AddCommonOptions(compare, options);
  std::vector<std::string> variant_names = {"const", "dyn_c", "dyn_mu", "dyn"};
  compare->add_option("--variants", variant_names,
                      "Variants to compare (dyn, dyn_c, dyn_mu, const)")
      ->delimiter(',');

  CLI::App* sweep = app.add_subcommand("sweep", "Grid over one config axis");
  AddCommonOptions(sweep, options);
  std::string axis_name;
  std::vector<std::string> values;
  sweep->add_option("--axis", axis_name, "rho_c, rho_mu, epsilon, n or graph")
      ->required();
  sweep->add_option("--values", values, "Axis values")
      ->required()
      ->delimiter(',');

  CLI::App* accountant = app.add_subcommand(
      "accountant", "Print mu_tot, base budget and the sigma_k table");
  AddCommonOptions(accountant, options);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? dyndp::kExitOk : dyndp::kExitConfigError;
  }

  absl::StatusOr<dyndp::ExperimentConfig> config = LoadConfig(options);
  if (!config.ok()) {
    std::cerr << config.status().message() << '\n';
    return dyndp::kExitConfigError;
  }

  if (run->parsed()) return dyndp::CmdRun(*config, std::cout, std::cerr);
  if (compare->parsed()) {
    std::vector<dyndp::Variant> variants;
    for (const std::string& name : variant_names) {
      absl::StatusOr<dyndp::Variant> v = dyndp::ParseVariant(name);
      if (!v.ok()) {
        std::cerr << "config error: " << v.status().message() << '\n';
        return dyndp::kExitConfigError;
      }
      variants.push_back(*v);
    }
    return dyndp::CmdCompare(*config, variants, std::cout, std::cerr);
  }
  if (sweep->parsed()) {
    absl::StatusOr<dyndp::SweepAxis> axis = dyndp::ParseSweepAxis(axis_name);
    if (!axis.ok()) {
      std::cerr << "config error: " << axis.status().message() << '\n';
      return dyndp::kExitConfigError;
    }
    return dyndp::CmdSweep(*config, *axis, values, std::cout, std::cerr);
  }
  return dyndp::CmdAccountant(*config, std::cout, std::cerr);
}
