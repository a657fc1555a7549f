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

#include "wifiloc/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <ostream>
#include <sstream>

#include "experiment_json.hpp"
#include "wifiloc/error.hpp"

extern char** environ;

#ifndef WIFILOC_VERSION
#define WIFILOC_VERSION "0.0.0"
#endif

namespace wifiloc {

using detail::Json;

const char* artifact_version() { return WIFILOC_VERSION; }

ExperimentConfig default_config() { return ExperimentConfig{}; }

std::vector<ArchitectureSpec> default_architectures() {
  return {
      {"dense(128-128)", {}, {128, 128}, 0.10},
      {"dense(256-256)", {}, {256, 256}, 0.10},
      {"sae(256-128)+cls(128-128)", {256, 128}, {128, 128}, 0.10},
      {"sae(256-128-64)+cls(128-128)", {256, 128, 64}, {128, 128}, 0.10},
  };
}

namespace detail {

namespace {

Json architecture_json(const ArchitectureSpec& a) {
  return Json{{"name", a.name},
              {"encoder_sizes", a.encoder_sizes},
              {"hidden_sizes", a.hidden_sizes},
              {"dropout", a.dropout}};
}

std::string strategy_name(PretrainStrategy) { return "joint"; }

PretrainStrategy parse_strategy(const std::string& s) {
  if (s == "joint") return PretrainStrategy::kJointEndToEnd;
  throw ConfigError("autoencoder.strategy '" + s + "' is not implemented (only 'joint')");
}

// Rejects keys in `user` that the defaults do not have.
void check_keys(const Json& user, const Json& defaults, const std::string& path) {
  if (!user.is_object()) return;
  for (const auto& [key, value] : user.items()) {
    if (!defaults.contains(key)) {
      throw ConfigError("unknown config key '" + path + key + "'");
    }
    if (value.is_object() && defaults.at(key).is_object()) {
      check_keys(value, defaults.at(key), path + key + ".");
    }
  }
}

template <class T>
T get(const Json& j, const char* section, const char* key) {
  try {
    return j.at(section).at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config ") + section + "." + key + ": " + e.what());
  }
}

}  // namespace

Json config_json(const ExperimentConfig& c) {
  Json j;
  j["dataset"] = {{"train", c.train_path},
                  {"test", c.test_path},
                  {"synthetic",
                   {{"enabled", c.synthetic.enabled},
                    {"records", c.synthetic.records},
                    {"test_records", c.synthetic.test_records},
                    {"aps", c.synthetic.aps},
                    {"classes", c.synthetic.classes},
                    {"missing_fraction", c.synthetic.missing_fraction},
                    {"seed", c.synthetic.seed}}}};
  j["split"] = {{"validation_fraction", c.validation_fraction},
                {"seed", c.split_seed},
                {"stratify", c.stratify}};
  j["preprocess"] = {{"missing_policy", std::string(to_string(c.missing_policy))},
                     {"scaling", std::string(to_string(c.scaling))},
                     {"sentinel_stats", std::string(to_string(c.sentinel_stats))}};
  j["autoencoder"] = {{"encoder_sizes", c.encoder_sizes},
                      {"activation", std::string(to_string(c.activation))},
                      {"strategy", strategy_name(c.strategy)},
                      {"epochs", c.pretrain.epochs},
                      {"batch_size", c.pretrain.batch_size},
                      {"learning_rate", c.pretrain.adam.learning_rate}};
  j["classifier"] = {{"hidden_sizes", c.hidden_sizes},
                     {"dropout", c.dropout},
                     {"dropout_override", c.dropout_override},
                     {"max_epochs", c.finetune.max_epochs},
                     {"batch_size", c.finetune.batch_size},
                     {"learning_rate", c.finetune.adam.learning_rate},
                     {"patience", c.finetune.patience},
                     {"early_stopping", c.finetune.early_stopping},
                     {"final_retrain", c.final_retrain}};
  j["adam"] = {{"beta1", c.finetune.adam.beta1},
               {"beta2", c.finetune.adam.beta2},
               {"epsilon", c.finetune.adam.epsilon}};
  j["baselines"] = {{"k_grid", c.k_grid}, {"threads", c.threads}};
  Json archs = Json::array();
  for (const auto& a : c.architectures) archs.push_back(architecture_json(a));
  j["sweep"] = {{"architectures", archs}, {"learning_rates", c.learning_rates}};
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  return j;
}

ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig c;
  c.train_path = get<std::string>(j, "dataset", "train");
  c.test_path = get<std::string>(j, "dataset", "test");
  const Json& s = j.at("dataset").at("synthetic");
  try {
    c.synthetic.enabled = s.at("enabled").get<bool>();
    c.synthetic.records = s.at("records").get<std::size_t>();
    c.synthetic.test_records = s.at("test_records").get<std::size_t>();
    c.synthetic.aps = s.at("aps").get<std::size_t>();
    c.synthetic.classes = s.at("classes").get<std::size_t>();
    c.synthetic.missing_fraction = s.at("missing_fraction").get<double>();
    c.synthetic.seed = s.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config dataset.synthetic: ") + e.what());
  }
  c.validation_fraction = get<double>(j, "split", "validation_fraction");
  c.split_seed = get<std::uint64_t>(j, "split", "seed");
  c.stratify = get<bool>(j, "split", "stratify");
  c.missing_policy = parse_missing_policy(get<std::string>(j, "preprocess", "missing_policy"));
  c.scaling = parse_scaling_mode(get<std::string>(j, "preprocess", "scaling"));
  c.sentinel_stats = parse_sentinel_stats(get<std::string>(j, "preprocess", "sentinel_stats"));
  c.encoder_sizes = get<std::vector<std::size_t>>(j, "autoencoder", "encoder_sizes");
  try {
    c.activation = parse_activation(get<std::string>(j, "autoencoder", "activation"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  c.strategy = parse_strategy(get<std::string>(j, "autoencoder", "strategy"));
  c.pretrain.epochs = get<std::size_t>(j, "autoencoder", "epochs");
  c.pretrain.batch_size = get<std::size_t>(j, "autoencoder", "batch_size");
  c.pretrain.adam.learning_rate = get<double>(j, "autoencoder", "learning_rate");
  c.hidden_sizes = get<std::vector<std::size_t>>(j, "classifier", "hidden_sizes");
  c.dropout = get<double>(j, "classifier", "dropout");
  c.dropout_override = get<bool>(j, "classifier", "dropout_override");
  c.finetune.max_epochs = get<std::size_t>(j, "classifier", "max_epochs");
  c.finetune.batch_size = get<std::size_t>(j, "classifier", "batch_size");
  c.finetune.adam.learning_rate = get<double>(j, "classifier", "learning_rate");
  c.finetune.patience = get<std::size_t>(j, "classifier", "patience");
  c.finetune.early_stopping = get<bool>(j, "classifier", "early_stopping");
  c.final_retrain = get<bool>(j, "classifier", "final_retrain");
  for (auto* adam : {&c.pretrain.adam, &c.finetune.adam}) {
    adam->beta1 = get<double>(j, "adam", "beta1");
    adam->beta2 = get<double>(j, "adam", "beta2");
    adam->epsilon = get<double>(j, "adam", "epsilon");
  }
  c.k_grid = get<std::vector<std::size_t>>(j, "baselines", "k_grid");
  c.threads = get<std::size_t>(j, "baselines", "threads");
  try {
    for (const auto& a : j.at("sweep").at("architectures")) {
      ArchitectureSpec spec;
      spec.name = a.value("name", std::string{});
      spec.encoder_sizes = a.value("encoder_sizes", std::vector<std::size_t>{});
      spec.hidden_sizes = a.value("hidden_sizes", std::vector<std::size_t>{128, 128});
      spec.dropout = a.value("dropout", 0.10);
      if (spec.name.empty()) {
        std::ostringstream name;
        name << (spec.encoder_sizes.empty() ? "dense" : "sae");
        for (auto w : spec.encoder_sizes) name << '-' << w;
        name << "+cls";
        for (auto w : spec.hidden_sizes) name << '-' << w;
        spec.name = name.str();
      }
      c.architectures.push_back(std::move(spec));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config sweep.architectures: ") + e.what());
  }
  c.learning_rates = get<std::vector<double>>(j, "sweep", "learning_rates");
  try {
    c.seed = j.at("seed").get<std::uint64_t>();
    c.output_dir = j.at("output_dir").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }

  if (!(c.validation_fraction > 0.0 && c.validation_fraction < 1.0)) {
    throw ConfigError("split.validation_fraction must lie in (0, 1)");
  }
  if (c.pretrain.batch_size == 0 || c.finetune.batch_size == 0) {
    throw ConfigError("batch sizes must be positive");
  }
  if (c.learning_rates.empty()) throw ConfigError("sweep.learning_rates must not be empty");
  return c;
}

Json report_json(const EvalReport& r, const ClassMap& map) {
  Json classes = Json::array();
  for (const auto& p : map.pairs()) classes.push_back({p.building, p.floor});
  return Json{{"n", r.n},
              {"joint_accuracy", r.joint_accuracy},
              {"building_accuracy", r.building_accuracy},
              {"floor_accuracy_given_building", r.floor_accuracy_given_building},
              {"unknown_pairs", r.unknown_pairs},
              {"classes", classes},
              {"confusion", r.confusion}};
}

Json history_json(const std::vector<EpochRecord>& history) {
  Json out = Json::array();
  for (const auto& e : history) {
    out.push_back({{"epoch", e.epoch},
                   {"train_loss", e.train_loss},
                   {"validation_accuracy",
                    e.validation_accuracy ? Json(*e.validation_accuracy) : Json(nullptr)}});
  }
  return out;
}

}  // namespace detail

std::string config_to_json(const ExperimentConfig& config) {
  return detail::config_json(config).dump(2);
}

ExperimentConfig parse_config(const std::string& json_text) {
  Json user;
  try {
    user = Json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!user.is_object()) throw ConfigError("config must be a JSON object");
  Json merged = detail::config_json(default_config());
  detail::check_keys(user, merged, "");
  merged.merge_patch(user);
  return detail::config_from_json(merged);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

namespace {

// Leaf paths of the config tree; arrays count as leaves.
void leaf_paths(const Json& j, std::vector<std::string>& prefix,
                std::vector<std::vector<std::string>>& out) {
  for (const auto& [key, value] : j.items()) {
    prefix.push_back(key);
    if (value.is_object()) {
      leaf_paths(value, prefix, out);
    } else {
      out.push_back(prefix);
    }
    prefix.pop_back();
  }
}

std::string env_name(const std::vector<std::string>& path) {
  std::string name = kEnvPrefix;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i > 0) name += '_';
    for (char ch : path[i]) name += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  }
  return name;
}

std::vector<std::vector<std::string>> config_leaves() {
  std::vector<std::vector<std::string>> leaves;
  std::vector<std::string> prefix;
  leaf_paths(detail::config_json(default_config()), prefix, leaves);
  return leaves;
}

}  // namespace

std::vector<std::string> env_override_names() {
  std::vector<std::string> names;
  for (const auto& leaf : config_leaves()) names.push_back(env_name(leaf));
  return names;
}

ExperimentConfig apply_env_overrides(const ExperimentConfig& config,
                                     const std::map<std::string, std::string>& env) {
  Json j = detail::config_json(config);
  bool changed = false;
  for (const auto& leaf : config_leaves()) {
    const auto it = env.find(env_name(leaf));
    if (it == env.end()) continue;
    Json* node = &j;
    for (const auto& key : leaf) node = &(*node)[key];
    Json value;
    try {
      value = Json::parse(it->second);
    } catch (const nlohmann::json::exception&) {
      value = it->second;
    }
    // String-typed keys keep the raw text ("-110" must not become a number).
    if (node->is_string()) value = it->second;
    *node = value;
    changed = true;
  }
  return changed ? detail::config_from_json(j) : config;
}

std::map<std::string, std::string> environment_variables() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e != nullptr && *e != nullptr; ++e) {
    const std::string entry(*e);
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    const auto key = entry.substr(0, eq);
    if (key.rfind(kEnvPrefix, 0) == 0) out.emplace(key, entry.substr(eq + 1));
  }
  return out;
}

namespace {

ExperimentData synthetic_data(const SyntheticConfig& s) {
  if (s.test_records == 0) throw ConfigError("dataset.synthetic.test_records must be positive");
  const Dataset all =
      generate_synthetic(s.records + s.test_records, s.aps, s.classes, s.seed,
                         SyntheticOptions{.missing_fraction = s.missing_fraction});
  std::vector<std::size_t> order(all.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  RngStream rng(derive_seed(s.seed, 2));
  rng.shuffle(order);
  std::vector<std::size_t> test_idx(order.begin(),
                                    order.begin() + static_cast<std::ptrdiff_t>(s.test_records));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(s.test_records),
                                     order.end());
  std::sort(test_idx.begin(), test_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  return {all.subset(train_idx, DatasetSource::kSynthetic),
          all.subset(test_idx, DatasetSource::kSynthetic)};
}

void warn_rows(const Dataset& ds, std::size_t expected, const std::string& path, std::ostream& log) {
  if (ds.size() != expected) {
    log << "warning: " << path << " has " << ds.size() << " records; the published file has "
        << expected << "\n";
  }
  if (ds.ap_count() != kUjiApCount) {
    log << "warning: " << path << " has " << ds.ap_count() << " WAP columns, expected "
        << kUjiApCount << "\n";
  }
}

}  // namespace

ExperimentData synthetic_experiment_data(const SyntheticConfig& s) { return synthetic_data(s); }

ExperimentData load_experiment_data(const ExperimentConfig& config, std::ostream& log) {
  if (config.synthetic.enabled) return synthetic_data(config.synthetic);
  if (config.train_path.empty() || config.test_path.empty()) {
    throw ConfigError(
        "dataset.train and dataset.test must name UJIIndoorLoc files (or enable dataset.synthetic)");
  }
  ExperimentData data;
  data.train_pool = load_ujiindoorloc(config.train_path, DatasetSource::kUjiTraining);
  data.test = load_ujiindoorloc(config.test_path, DatasetSource::kUjiValidation);
  warn_rows(data.train_pool, kUjiTrainingRows, config.train_path, log);
  warn_rows(data.test, kUjiValidationRows, config.test_path, log);
  if (data.train_pool.ap_count() != data.test.ap_count()) {
    throw IngestError("training and test files have different WAP column counts");
  }
  return data;
}

PipelineOptions pipeline_options(const ExperimentConfig& config, std::size_t num_classes) {
  PipelineOptions o;
  o.missing_policy = config.missing_policy;
  o.scaling = config.scaling;
  o.sentinel_stats = config.sentinel_stats;
  o.encoder_sizes = config.encoder_sizes;
  o.activation = config.activation;
  o.pretrain = config.pretrain;
  o.head.hidden_sizes = config.hidden_sizes;
  o.head.dropout_rate = config.dropout;
  o.head.dropout_override = config.dropout_override;
  o.head.num_classes = num_classes;
  o.head.hidden_activation = config.activation;
  o.finetune = config.finetune;
  o.seed = config.seed;
  return o;
}

namespace {

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

}  // namespace

PipelineResult run_pipeline(const Dataset& train, const Dataset& validation, const Dataset& test,
                            const ClassMap& class_map, const PipelineOptions& options) {
  struct Prepared {
    ScalerParams scaler;
    LabeledSet train;
    LabeledSet validation;
  };
  Prepared prep = stage("preprocess", [&] {
    Prepared p;
    const auto signals = SignalMatrix::from_dataset(train, options.missing_policy);
    p.scaler = fit_scaler(signals, options.scaling, options.sentinel_stats);
    p.train.vectors = transform(p.scaler, signals);
    p.train.labels = class_labels(train, class_map);
    if (!validation.empty()) {
      p.validation.vectors = preprocess(p.scaler, validation);
      p.validation.labels = class_labels(validation, class_map);
    }
    return p;
  });

  PipelineResult result;
  const std::size_t input_dim = prep.scaler.width;
  Network encoder = stage("pretrain", [&] {
    if (options.encoder_sizes.empty()) return Network{};
    AutoencoderSpec spec{input_dim, options.encoder_sizes, options.activation,
                         PretrainStrategy::kJointEndToEnd};
    RngStream init(derive_seed(options.seed, 1));
    RngStream shuffle(derive_seed(options.seed, 2));
    Network autoencoder = build_autoencoder(spec, init);
    result.pretrain_history = pretrain(autoencoder, prep.train.vectors, options.pretrain, shuffle);
    return extract_encoder(autoencoder, spec);
  });

  Network net = stage("assemble", [&] {
    RngStream init(derive_seed(options.seed, 3));
    return encoder.empty() ? build_dense_classifier(input_dim, options.head, init)
                           : assemble(encoder, options.head, init);
  });

  result.model = stage("finetune", [&] {
    RngStream rng(derive_seed(options.seed, 4));
    return wifiloc::train(std::move(net), prep.train, prep.validation, options.finetune, rng,
                          prep.scaler, class_map);
  });

  if (!test.empty()) {
    result.test_report = stage("evaluate", [&] { return evaluate(result.model, test); });
  }
  return result;
}

}  // namespace wifiloc
