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
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "wifiloc/dataset.hpp"
#include "wifiloc/nn.hpp"
#include "wifiloc/preprocess.hpp"

namespace wifiloc {

struct ClassifierSpec {
  std::vector<std::size_t> hidden_sizes{128, 128};
  double dropout_rate = 0.10;
  std::size_t num_classes = 0;
  Activation hidden_activation = Activation::kRelu;
  /// Allow a dropout rate outside [0.05, 0.20].
  bool dropout_override = false;

  void validate() const;
};

/// Encoder layers (weights copied as-is) followed by fresh hidden layers and a
/// softmax output. Dropout sits after each classifier hidden layer.
Network assemble(const Network& encoder, const ClassifierSpec& spec, RngStream& rng);

/// Same head without an encoder: a plain dropout network on the raw input.
Network build_dense_classifier(std::size_t input_dim, const ClassifierSpec& spec, RngStream& rng);

/// Preprocessed inputs with their class indices.
struct LabeledSet {
  Matrix vectors;
  std::vector<std::size_t> labels;

  std::size_t size() const { return labels.size(); }
};

struct FineTuneParams {
  std::size_t max_epochs = 100;
  std::size_t batch_size = 64;
  AdamParams adam;
  std::size_t patience = 15;
  bool early_stopping = true;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 0 is the untrained network
  double train_loss = 0.0;
  std::optional<double> validation_accuracy;
};

struct Prediction {
  std::vector<double> probabilities;
  std::size_t class_index = 0;
  LocationClass location;
};

struct TrainedModel {
  Network network;
  ScalerParams scaler;
  ClassMap class_map;
  std::vector<EpochRecord> history;
  std::size_t selected_epoch = 0;

  std::optional<double> best_validation_accuracy() const;

  /// Raw scan (kMissing allowed) through the model's own policy, scaler and network.
  Prediction predict(std::span<const double> raw_rss) const;

  /// Class index per record of `ds`.
  std::vector<std::size_t> classify(const Dataset& ds) const;
};

/// Index of the largest entry; the lowest index wins ties.
std::size_t argmax(std::span<const double> values);
std::vector<std::size_t> argmax_rows(const Matrix& scores);

/// Fraction of rows whose argmax equals the label.
double accuracy(const Network& net, const LabeledSet& data);

/// Mini-batch Adam on softmax cross-entropy, updating every layer. After
/// each epoch the validation accuracy is recorded; the returned network is the
/// snapshot from the best epoch (earliest on ties). An empty validation set
/// disables selection and early stopping and keeps the last epoch.
TrainedModel train(Network net, const LabeledSet& train_set, const LabeledSet& validation,
                   const FineTuneParams& params, RngStream& rng, ScalerParams scaler,
                   ClassMap class_map);

struct EvalReport {
  std::size_t n = 0;
  double joint_accuracy = 0.0;
  double building_accuracy = 0.0;
  /// Joint hits over building hits; 0 when no building is right.
  double floor_accuracy_given_building = 0.0;
  /// Rows: true class, columns: predicted class. Records whose pair is not in
  /// the class map are left out and counted in unknown_pairs.
  std::vector<std::vector<std::size_t>> confusion;
  std::size_t unknown_pairs = 0;

  std::size_t confusion_total() const;
  std::size_t confusion_trace() const;
};

/// Scores predicted class indices against true locations. Unknown true pairs
/// count as errors.
EvalReport tally(const ClassMap& map, std::span<const LocationClass> truth,
                 std::span<const std::size_t> predicted);

EvalReport evaluate(const TrainedModel& model, const Dataset& test);

/// Bundle directory: manifest.json, network.bin, scaler.txt, classes.txt, history.tsv.
void save_model(const TrainedModel& model, const std::filesystem::path& dir);
TrainedModel load_model(const std::filesystem::path& dir);

}  // namespace wifiloc
