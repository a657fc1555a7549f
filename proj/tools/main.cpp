// Copyright 2026 The wifiloc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// wifiloc: building/floor classification experiments on WiFi fingerprints.
//
//   wifiloc synth --out data/synth
//   wifiloc train --config configs/uji.json
//   wifiloc ablation | sweep | baselines --config ...
//   wifiloc evaluate runs/train/model --config ...

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wifiloc/error.hpp"
#include "wifiloc/experiment.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", flags.seed, "Run seed (overrides the config)");
  cmd->add_option("--out", flags.out, "Output directory (overrides the config)");
}

wifiloc::ExperimentConfig resolve(const CommonFlags& flags) {
  auto config = flags.config_path.empty() ? wifiloc::default_config()
                                          : wifiloc::load_config(flags.config_path);
  config = wifiloc::apply_env_overrides(config, wifiloc::environment_variables());
  if (flags.seed) config.seed = *flags.seed;
  if (!flags.out.empty()) config.output_dir = flags.out;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WiFi fingerprint building/floor classification with stacked autoencoders"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(wifiloc::artifact_version()));

  CommonFlags flags;
  auto* train = app.add_subcommand("train", "Pretrain the autoencoder, fine-tune, evaluate on test");
  auto* ablation = app.add_subcommand("ablation", "Missing-value policy x scaling mode table");
  auto* sweep = app.add_subcommand("sweep", "Compare network architectures");
  auto* baselines = app.add_subcommand("baselines", "Nearest-scan, kNN and weighted kNN");
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a saved model bundle on the test set");
  auto* show = app.add_subcommand("config", "Print the effective config and the override variables");
  for (auto* cmd : {train, ablation, sweep, baselines, evaluate, show}) add_common(cmd, flags);

  std::string bundle;
  evaluate->add_option("bundle", bundle, "Model bundle directory")->required()->check(
      CLI::ExistingDirectory);

  wifiloc::SynthOptions synth_options;
  std::string synth_out = "synthetic";
  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset in UJIIndoorLoc format");
  synth->add_option("--records", synth_options.records, "Training-pool records")
      ->capture_default_str();
  synth->add_option("--test-records", synth_options.test_records, "Test records")
      ->capture_default_str();
  synth->add_option("--aps", synth_options.aps, "Access points (WAP columns)")->capture_default_str();
  synth->add_option("--classes", synth_options.classes, "(building, floor) classes")
      ->capture_default_str();
  synth->add_option("--missing-fraction", synth_options.missing_fraction,
                    "Fraction of unobserved APs")
      ->capture_default_str();
  synth->add_option("--seed", synth_options.seed, "Generator seed")->capture_default_str();
  synth->add_option("--out", synth_out, "Output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      synth_options.out_dir = synth_out;
      wifiloc::cmd_synth(synth_options, std::cout);
      return 0;
    }
    const auto config = resolve(flags);
    if (show->parsed()) {
      std::cout << wifiloc::config_to_json(config) << "\n\nenvironment overrides:\n";
      for (const auto& name : wifiloc::env_override_names()) std::cout << "  " << name << "\n";
    } else if (train->parsed()) {
      wifiloc::cmd_train(config, std::cout);
    } else if (ablation->parsed()) {
      wifiloc::cmd_ablation(config, std::cout);
    } else if (sweep->parsed()) {
      wifiloc::cmd_sweep(config, std::cout);
    } else if (baselines->parsed()) {
      wifiloc::cmd_baselines(config, std::cout);
    } else if (evaluate->parsed()) {
      wifiloc::cmd_evaluate(config, bundle, std::cout);
    }
  } catch (const wifiloc::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
