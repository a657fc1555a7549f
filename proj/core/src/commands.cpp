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

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "experiment_json.hpp"
#include "wifiloc/baselines.hpp"
#include "wifiloc/error.hpp"
#include "wifiloc/experiment.hpp"

namespace wifiloc {

using detail::Json;

namespace {

namespace fs = std::filesystem;

fs::path unused_path(const fs::path& wanted) {
  if (!fs::exists(wanted)) return wanted;
  for (int i = 1;; ++i) {
    fs::path candidate = wanted;
    candidate += "-" + std::to_string(i);
    if (!fs::exists(candidate)) return candidate;
  }
}

// Output directory for one command. Work is written to a staging directory
// that is renamed on commit, or moved under quarantine/ otherwise.
class RunDirectory {
 public:
  RunDirectory(const fs::path& root, std::string command)
      : root_(root), command_(std::move(command)) {
    fs::create_directories(root_);
    staging_ = unused_path(root_ / (".staging-" + command_));
    fs::create_directories(staging_);
  }

  RunDirectory(const RunDirectory&) = delete;
  RunDirectory& operator=(const RunDirectory&) = delete;

  ~RunDirectory() {
    if (!done_) {
      try {
        quarantine();
      } catch (...) {
      }
    }
  }

  const fs::path& staging() const { return staging_; }

  fs::path commit() {
    const fs::path dest = unused_path(root_ / command_);
    fs::rename(staging_, dest);
    done_ = true;
    return dest;
  }

  fs::path quarantine() {
    fs::create_directories(root_ / "quarantine");
    const fs::path dest = unused_path(root_ / "quarantine" / command_);
    fs::rename(staging_, dest);
    done_ = true;
    return dest;
  }

 private:
  fs::path root_;
  std::string command_;
  fs::path staging_;
  bool done_ = false;
};

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
}

Json base_document(const char* command, const ExperimentConfig& config) {
  Json doc;
  doc["artifact_version"] = artifact_version();
  doc["command"] = command;
  doc["config"] = detail::config_json(config);
  return doc;
}

// Timings live under their own key so documents compare equal without them.
void finish_document(Json& doc, Json timings, const fs::path& dir) {
  doc["timings"] = std::move(timings);
  write_text(dir / "metrics.json", doc.dump(2) + "\n");
}

std::string percent(double fraction) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(1) << 100.0 * fraction << '%';
  return s.str();
}

std::string widths(const std::vector<std::size_t>& sizes) {
  if (sizes.empty()) return "-";
  std::ostringstream s;
  for (std::size_t i = 0; i < sizes.size(); ++i) s << (i ? "-" : "") << sizes[i];
  return s.str();
}

template <class F>
auto stage(const char* name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

// Shared setup: data, class space over the training pool, and the split.
struct Prepared {
  ExperimentData data;
  ClassMap class_map;
  Dataset train;
  Dataset validation;
};

Prepared prepare(const ExperimentConfig& config, std::ostream& out) {
  Prepared p;
  p.data = stage("load", [&] { return load_experiment_data(config, out); });
  p.class_map = stage("classes", [&] { return build_class_map(p.data.train_pool); });
  auto parts = stage("split", [&] {
    return split_train_validation(p.data.train_pool, config.validation_fraction, config.split_seed,
                                  config.stratify);
  });
  p.train = std::move(parts.first);
  p.validation = std::move(parts.second);
  out << "data: " << p.train.size() << " train / " << p.validation.size() << " validation / "
      << p.data.test.size() << " test records, " << p.class_map.size() << " classes, "
      << p.data.train_pool.ap_count() << " APs\n";
  return p;
}

Json dataset_json(const Prepared& p) {
  return Json{{"source", std::string(to_string(p.data.train_pool.source()))},
              {"train_pool", p.data.train_pool.size()},
              {"train", p.train.size()},
              {"validation", p.validation.size()},
              {"test", p.data.test.size()},
              {"aps", p.data.train_pool.ap_count()},
              {"classes", p.class_map.size()}};
}

Json pipeline_json(const PipelineResult& r, const ClassMap& map) {
  const auto best = r.model.best_validation_accuracy();
  return Json{{"selected_epoch", r.model.selected_epoch},
              {"best_validation_accuracy", best ? Json(*best) : Json(nullptr)},
              {"pretrain_loss", r.pretrain_history.epoch_loss},
              {"history", detail::history_json(r.model.history)},
              {"test", detail::report_json(r.test_report, map)}};
}

}  // namespace

TrainOutcome cmd_train(const ExperimentConfig& config, std::ostream& out) {
  RunDirectory run(config.output_dir, "train");
  Stopwatch clock;
  Json timings;
  TrainOutcome outcome;

  Prepared p = prepare(config, out);
  timings["load"] = clock.lap();
  const PipelineOptions options = pipeline_options(config, p.class_map.size());
  outcome.selection = run_pipeline(p.train, p.validation, p.data.test, p.class_map, options);
  timings["selection_run"] = clock.lap();
  out << "selection run: best validation accuracy "
      << percent(outcome.selection.model.best_validation_accuracy().value_or(0.0)) << " at epoch "
      << outcome.selection.model.selected_epoch << ", test joint accuracy "
      << percent(outcome.selection.test_report.joint_accuracy) << "\n";

  if (config.final_retrain) {
    // Retrain on training + validation for the selected number of epochs.
    PipelineOptions final_options = options;
    final_options.finetune.max_epochs = outcome.selection.model.selected_epoch;
    final_options.finetune.early_stopping = false;
    const Dataset merged = Dataset::concat(p.train, p.validation, DatasetSource::kDerivedSplit);
    outcome.final_run = run_pipeline(merged, Dataset{}, p.data.test, p.class_map, final_options);
    timings["final_run"] = clock.lap();
    out << "final run (train+validation, " << final_options.finetune.max_epochs
        << " epochs): test joint accuracy " << percent(outcome.final_run->test_report.joint_accuracy)
        << "\n";
  }

  const PipelineResult& reported = outcome.reported();
  stage("persist", [&] {
    save_model(reported.model, run.staging() / "model");
    Json doc = base_document("train", config);
    doc["dataset"] = dataset_json(p);
    doc["selection"] = pipeline_json(outcome.selection, p.class_map);
    doc["final"] = outcome.final_run ? pipeline_json(*outcome.final_run, p.class_map) : Json(nullptr);
    doc["test"] = detail::report_json(reported.test_report, p.class_map);
    write_text(run.staging() / "config.json", config_to_json(config) + "\n");
    finish_document(doc, timings, run.staging());
  });

  const auto& r = reported.test_report;
  out << "\n  metric                         value\n"
      << "  joint (building+floor)         " << percent(r.joint_accuracy) << "\n"
      << "  building                       " << percent(r.building_accuracy) << "\n"
      << "  floor | building correct       " << percent(r.floor_accuracy_given_building) << "\n"
      << "  test records                   " << r.n << "\n";
  if (r.unknown_pairs > 0) {
    out << "  unseen (building, floor) pairs " << r.unknown_pairs << "\n";
  }
  outcome.run_dir = run.commit();
  out << "wrote " << outcome.run_dir.string() << "\n";
  return outcome;
}

AblationOutcome cmd_ablation(const ExperimentConfig& config, std::ostream& out) {
  RunDirectory run(config.output_dir, "ablation");
  Stopwatch clock;
  Json timings;
  AblationOutcome outcome;

  Prepared p = prepare(config, out);
  timings["load"] = clock.lap();
  const std::pair<MissingPolicy, ScalingMode> rows[] = {
      {MissingPolicy::kAs100, ScalingMode::kIndependent},
      {MissingPolicy::kAsMinus110, ScalingMode::kIndependent},
      {MissingPolicy::kAs100, ScalingMode::kJoint},
      {MissingPolicy::kAsMinus110, ScalingMode::kJoint},
  };
  Json table = Json::array();
  Json row_timings = Json::array();
  for (std::size_t i = 0; i < std::size(rows); ++i) {
    PipelineOptions options = pipeline_options(config, p.class_map.size());
    options.missing_policy = rows[i].first;
    options.scaling = rows[i].second;
    options.seed = config.seed + i;
    const auto result = run_pipeline(p.train, p.validation, p.data.test, p.class_map, options);
    AblationRow row{rows[i].first, rows[i].second,
                    result.model.best_validation_accuracy().value_or(0.0),
                    result.test_report.joint_accuracy};
    outcome.rows.push_back(row);
    table.push_back({{"missing_policy", std::string(to_string(row.policy))},
                     {"scaling", std::string(to_string(row.scaling))},
                     {"seed", options.seed},
                     {"validation_accuracy", row.validation_accuracy},
                     {"test_accuracy", row.test_accuracy},
                     {"selected_epoch", result.model.selected_epoch},
                     {"test", detail::report_json(result.test_report, p.class_map)}});
    row_timings.push_back(clock.lap());
    out << "row " << (i + 1) << "/4 done\n";
  }
  timings["rows"] = row_timings;

  std::ostringstream text;
  text << "lack_of_ap\tscaling\tvalidation\ttest\n" << std::setprecision(17);
  for (const auto& r : outcome.rows) {
    text << to_string(r.policy) << '\t' << to_string(r.scaling) << '\t' << r.validation_accuracy
         << '\t' << r.test_accuracy << '\n';
  }
  stage("persist", [&] {
    Json doc = base_document("ablation", config);
    doc["dataset"] = dataset_json(p);
    doc["rows"] = table;
    write_text(run.staging() / "ablation.tsv", text.str());
    write_text(run.staging() / "config.json", config_to_json(config) + "\n");
    finish_document(doc, timings, run.staging());
  });

  out << "\n  lack of AP  scaling      validation  test\n";
  for (const auto& r : outcome.rows) {
    out << "  " << std::left << std::setw(10) << to_string(r.policy) << "  " << std::setw(11)
        << to_string(r.scaling) << "  " << std::setw(10) << percent(r.validation_accuracy) << "  "
        << percent(r.test_accuracy) << std::right << "\n";
  }
  outcome.run_dir = run.commit();
  out << "wrote " << outcome.run_dir.string() << "\n";
  return outcome;
}

SweepOutcome cmd_sweep(const ExperimentConfig& config, std::ostream& out) {
  const auto architectures =
      config.architectures.empty() ? default_architectures() : config.architectures;
  RunDirectory run(config.output_dir, "sweep");
  Stopwatch clock;
  Json timings;
  SweepOutcome outcome;

  Prepared p = prepare(config, out);
  timings["load"] = clock.lap();
  Json row_timings = Json::array();
  std::size_t index = 0;
  for (const auto& arch : architectures) {
    for (double lr : config.learning_rates) {
      PipelineOptions options = pipeline_options(config, p.class_map.size());
      options.encoder_sizes = arch.encoder_sizes;
      options.head.hidden_sizes = arch.hidden_sizes;
      options.head.dropout_rate = arch.dropout;
      options.finetune.adam.learning_rate = lr;
      options.seed = config.seed + index;
      const auto result = run_pipeline(p.train, p.validation, p.data.test, p.class_map, options);
      outcome.rows.push_back({arch, lr, result.model.best_validation_accuracy().value_or(0.0),
                              result.test_report.joint_accuracy});
      row_timings.push_back(clock.lap());
      out << "  " << arch.name << " lr=" << lr << ": validation "
          << percent(outcome.rows.back().validation_accuracy) << ", test "
          << percent(outcome.rows.back().test_accuracy) << "\n";
      ++index;
    }
  }
  timings["rows"] = row_timings;
  std::stable_sort(outcome.rows.begin(), outcome.rows.end(),
                   [](const SweepRow& a, const SweepRow& b) {
                     return a.test_accuracy > b.test_accuracy;
                   });

  std::ostringstream tsv;
  tsv << "name\tencoder\thidden\tdropout\tlearning_rate\tvalidation\ttest\n" << std::setprecision(17);
  Json rows = Json::array();
  for (const auto& r : outcome.rows) {
    tsv << r.architecture.name << '\t' << widths(r.architecture.encoder_sizes) << '\t'
        << widths(r.architecture.hidden_sizes) << '\t' << r.architecture.dropout << '\t'
        << r.learning_rate << '\t' << r.validation_accuracy << '\t' << r.test_accuracy << '\n';
    rows.push_back({{"name", r.architecture.name},
                    {"encoder_sizes", r.architecture.encoder_sizes},
                    {"hidden_sizes", r.architecture.hidden_sizes},
                    {"dropout", r.architecture.dropout},
                    {"learning_rate", r.learning_rate},
                    {"validation_accuracy", r.validation_accuracy},
                    {"test_accuracy", r.test_accuracy}});
  }
  stage("persist", [&] {
    Json doc = base_document("sweep", config);
    doc["dataset"] = dataset_json(p);
    doc["rows"] = rows;
    write_text(run.staging() / "sweep.tsv", tsv.str());
    write_text(run.staging() / "config.json", config_to_json(config) + "\n");
    finish_document(doc, timings, run.staging());
  });

  out << "\n  architecture                        lr        validation  test\n";
  for (const auto& r : outcome.rows) {
    out << "  " << std::left << std::setw(34) << r.architecture.name << "  " << std::setw(8)
        << r.learning_rate << "  " << std::setw(10) << percent(r.validation_accuracy) << "  "
        << percent(r.test_accuracy) << std::right << "\n";
  }
  outcome.run_dir = run.commit();
  out << "wrote " << outcome.run_dir.string() << "\n";
  return outcome;
}

BaselinesOutcome cmd_baselines(const ExperimentConfig& config, std::ostream& out) {
  RunDirectory run(config.output_dir, "baselines");
  Stopwatch clock;
  Json timings;
  BaselinesOutcome outcome;

  const ExperimentData data = stage("load", [&] { return load_experiment_data(config, out); });
  const ClassMap class_map = stage("classes", [&] { return build_class_map(data.train_pool); });
  timings["load"] = clock.lap();

  // The whole training pool is the fingerprint database.
  struct Inputs {
    ScalerParams scaler;
    Matrix reference;
    Matrix queries;
  };
  Inputs in = stage("preprocess", [&] {
    Inputs i;
    const auto signals = SignalMatrix::from_dataset(data.train_pool, config.missing_policy);
    i.scaler = fit_scaler(signals, config.scaling, config.sentinel_stats);
    i.reference = transform(i.scaler, signals);
    i.queries = preprocess(i.scaler, data.test);
    return i;
  });
  const ReferenceSet ref(std::move(in.reference), class_labels(data.train_pool, class_map));
  std::vector<LocationClass> truth;
  for (const auto& r : data.test.records()) truth.push_back(location_of(r));
  timings["preprocess"] = clock.lap();

  const auto run_method = [&](const std::string& name, BaselineMethod method, std::size_t k) {
    const auto predicted = stage("baselines", [&] {
      return predict_all(ref, in.queries, method, k, config.threads);
    });
    outcome.rows.push_back({name, k, tally(class_map, truth, predicted)});
    out << "  " << std::left << std::setw(8) << name << " k=" << std::setw(3) << k << std::right
        << "  joint " << percent(outcome.rows.back().report.joint_accuracy) << "  building "
        << percent(outcome.rows.back().report.building_accuracy) << "\n";
  };
  run_method("nearest", BaselineMethod::kNearest, 1);
  for (auto k : config.k_grid) run_method("knn", BaselineMethod::kKnn, k);
  for (auto k : config.k_grid) run_method("wknn", BaselineMethod::kWknn, k);
  timings["predict"] = clock.lap();

  stage("persist", [&] {
    Json rows = Json::array();
    for (const auto& r : outcome.rows) {
      rows.push_back({{"method", r.method}, {"k", r.k},
                      {"report", detail::report_json(r.report, class_map)}});
    }
    Json doc = base_document("baselines", config);
    doc["dataset"] = {{"reference", data.train_pool.size()},
                      {"test", data.test.size()},
                      {"classes", class_map.size()}};
    doc["rows"] = rows;
    write_text(run.staging() / "config.json", config_to_json(config) + "\n");
    finish_document(doc, timings, run.staging());
  });
  outcome.run_dir = run.commit();
  out << "wrote " << outcome.run_dir.string() << "\n";
  return outcome;
}

EvaluateOutcome cmd_evaluate(const ExperimentConfig& config, const fs::path& bundle,
                             std::ostream& out) {
  RunDirectory run(config.output_dir, "evaluate");
  Stopwatch clock;
  Json timings;
  EvaluateOutcome outcome;

  const TrainedModel model = stage("load-model", [&] { return load_model(bundle); });
  const Dataset test = stage("load", [&] {
    if (config.synthetic.enabled) return synthetic_experiment_data(config.synthetic).test;
    if (config.test_path.empty()) throw ConfigError("dataset.test is not set");
    return load_ujiindoorloc(config.test_path, DatasetSource::kUjiValidation);
  });
  timings["load"] = clock.lap();
  outcome.report = stage("evaluate", [&] { return evaluate(model, test); });
  timings["evaluate"] = clock.lap();

  stage("persist", [&] {
    Json doc = base_document("evaluate", config);
    doc["model"] = bundle.string();
    doc["test"] = detail::report_json(outcome.report, model.class_map);
    write_text(run.staging() / "config.json", config_to_json(config) + "\n");
    finish_document(doc, timings, run.staging());
  });
  out << "joint accuracy " << percent(outcome.report.joint_accuracy) << ", building "
      << percent(outcome.report.building_accuracy) << " over " << outcome.report.n << " records\n";
  outcome.run_dir = run.commit();
  out << "wrote " << outcome.run_dir.string() << "\n";
  return outcome;
}

void cmd_synth(const SynthOptions& options, std::ostream& out) {
  SyntheticConfig s;
  s.enabled = true;
  s.records = options.records;
  s.test_records = options.test_records;
  s.aps = options.aps;
  s.classes = options.classes;
  s.missing_fraction = options.missing_fraction;
  s.seed = options.seed;
  const ExperimentData data = synthetic_experiment_data(s);
  fs::create_directories(options.out_dir);
  for (const auto& [name, ds] : {std::pair{"train.csv", &data.train_pool},
                                 std::pair{"test.csv", &data.test}}) {
    std::ofstream file(options.out_dir / name, std::ios::trunc);
    if (!file) throw Error("cannot write " + (options.out_dir / name).string());
    write_ujiindoorloc(*ds, file);
  }
  out << "wrote " << data.train_pool.size() << " training and " << data.test.size()
      << " test records (" << options.aps << " APs, " << options.classes << " classes) to "
      << options.out_dir.string() << "\n";
}

}  // namespace wifiloc
