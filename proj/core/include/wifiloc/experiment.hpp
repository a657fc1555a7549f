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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wifiloc/classifier.hpp"
#include "wifiloc/dataset.hpp"
#include "wifiloc/preprocess.hpp"
#include "wifiloc/sae.hpp"

namespace wifiloc {

/// One row of an architecture sweep. An empty encoder means a plain dropout
/// network on the raw input.
struct ArchitectureSpec {
  std::string name;
  std::vector<std::size_t> encoder_sizes;
  std::vector<std::size_t> hidden_sizes;
  double dropout = 0.10;
};

struct SyntheticConfig {
  bool enabled = false;
  std::size_t records = 3000;
  std::size_t test_records = 600;
  std::size_t aps = 64;
  std::size_t classes = 6;
  double missing_fraction = 0.3;
  std::uint64_t seed = 7;
};

/// Every field has a default; a train run needs only the dataset paths.
/// See README.md for the JSON schema and the WIFILOC_ environment overrides.
struct ExperimentConfig {
  std::string train_path;
  std::string test_path;
  SyntheticConfig synthetic;

  double validation_fraction = 0.1;
  std::uint64_t split_seed = 42;
  bool stratify = false;

  MissingPolicy missing_policy = MissingPolicy::kAsMinus110;
  ScalingMode scaling = ScalingMode::kJoint;
  SentinelStats sentinel_stats = SentinelStats::kInclude;

  std::vector<std::size_t> encoder_sizes{256, 128, 64};
  Activation activation = Activation::kRelu;
  PretrainStrategy strategy = PretrainStrategy::kJointEndToEnd;
  PretrainParams pretrain;

  std::vector<std::size_t> hidden_sizes{128, 128};
  double dropout = 0.10;
  bool dropout_override = false;
  FineTuneParams finetune;
  bool final_retrain = true;

  std::vector<std::size_t> k_grid{1, 3, 5, 7};
  std::size_t threads = 0;

  std::vector<ArchitectureSpec> architectures;
  std::vector<double> learning_rates{1e-3};

  std::uint64_t seed = 1;
  std::string output_dir = "runs";
};

inline constexpr const char* kEnvPrefix = "WIFILOC_";

ExperimentConfig default_config();

/// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Overrides from variables named WIFILOC_<SECTION>_<KEY> (upper case, nested
/// keys joined by '_'), e.g. WIFILOC_CLASSIFIER_MAX_EPOCHS=50. Values are
/// parsed as JSON when possible, otherwise taken as strings.
ExperimentConfig apply_env_overrides(const ExperimentConfig& config,
                                     const std::map<std::string, std::string>& env);
std::map<std::string, std::string> environment_variables();

/// Full effective config with every default materialized.
std::string config_to_json(const ExperimentConfig& config);

/// Environment variable names accepted by apply_env_overrides.
std::vector<std::string> env_override_names();

const char* artifact_version();

struct ExperimentData {
  Dataset train_pool;  // re-split into training and validation
  Dataset test;
};

/// Loads the configured files (warning on unexpected row counts) or builds
/// the synthetic stanza.
ExperimentData load_experiment_data(const ExperimentConfig& config, std::ostream& log);

/// The synthetic stanza as a train pool and a disjoint test set drawn from the
/// same class centers.
ExperimentData synthetic_experiment_data(const SyntheticConfig& synthetic);

/// Everything one encoder + classifier training run needs.
struct PipelineOptions {
  MissingPolicy missing_policy = MissingPolicy::kAsMinus110;
  ScalingMode scaling = ScalingMode::kJoint;
  SentinelStats sentinel_stats = SentinelStats::kInclude;
  std::vector<std::size_t> encoder_sizes{256, 128, 64};
  Activation activation = Activation::kRelu;
  PretrainParams pretrain;
  ClassifierSpec head;
  FineTuneParams finetune;
  std::uint64_t seed = 1;
};

PipelineOptions pipeline_options(const ExperimentConfig& config, std::size_t num_classes);

struct PipelineResult {
  TrainedModel model;
  PretrainHistory pretrain_history;
  EvalReport test_report;
};

/// preprocess-fit on `train` -> SAE pretrain -> assemble -> fine-tune with
/// selection on `validation` -> evaluate on `test`. `validation` may be empty.
PipelineResult run_pipeline(const Dataset& train, const Dataset& validation, const Dataset& test,
                            const ClassMap& class_map, const PipelineOptions& options);

struct TrainOutcome {
  std::filesystem::path run_dir;
  PipelineResult selection;
  std::optional<PipelineResult> final_run;

  /// The model that was persisted: the final retrain when enabled.
  const PipelineResult& reported() const { return final_run ? *final_run : selection; }
};

struct AblationRow {
  MissingPolicy policy;
  ScalingMode scaling;
  double validation_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct AblationOutcome {
  std::filesystem::path run_dir;
  std::vector<AblationRow> rows;
};

struct SweepRow {
  ArchitectureSpec architecture;
  double learning_rate = 0.0;
  double validation_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct SweepOutcome {
  std::filesystem::path run_dir;
  std::vector<SweepRow> rows;  // sorted by test accuracy, descending
};

struct BaselineRow {
  std::string method;
  std::size_t k = 1;
  EvalReport report;
};

struct BaselinesOutcome {
  std::filesystem::path run_dir;
  std::vector<BaselineRow> rows;
};

struct EvaluateOutcome {
  std::filesystem::path run_dir;
  EvalReport report;
};

struct SynthOptions {
  std::size_t records = 3000;
  std::size_t test_records = 600;
  std::size_t aps = 64;
  std::size_t classes = 6;
  double missing_fraction = 0.3;
  std::uint64_t seed = 7;
  std::filesystem::path out_dir = "synthetic";
};

/// Commands write into <output_dir>/<command> (suffixed -1, -2, ... when that
/// exists). Work happens in a staging directory; on failure it is moved under
/// <output_dir>/quarantine and the error is rethrown as a StageError.
TrainOutcome cmd_train(const ExperimentConfig& config, std::ostream& out);
AblationOutcome cmd_ablation(const ExperimentConfig& config, std::ostream& out);
SweepOutcome cmd_sweep(const ExperimentConfig& config, std::ostream& out);
BaselinesOutcome cmd_baselines(const ExperimentConfig& config, std::ostream& out);
EvaluateOutcome cmd_evaluate(const ExperimentConfig& config, const std::filesystem::path& bundle,
                             std::ostream& out);

/// Writes train.csv and test.csv in UJIIndoorLoc format.
void cmd_synth(const SynthOptions& options, std::ostream& out);

/// Default sweep rows: two plain dropout networks and two SAE variants.
std::vector<ArchitectureSpec> default_architectures();

}  // namespace wifiloc
