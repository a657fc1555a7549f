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

#include "wifiloc/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wifiloc/error.hpp"

namespace wifiloc {

void ClassifierSpec::validate() const {
  if (num_classes == 0) throw InvalidArgument("classifier needs at least one class");
  for (auto w : hidden_sizes) {
    if (w == 0) throw InvalidArgument("classifier hidden widths must be positive");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw InvalidArgument("dropout rate must lie in [0, 1)");
  }
  if (!dropout_override && (dropout_rate < 0.05 || dropout_rate > 0.20)) {
    throw InvalidArgument("dropout rate " + std::to_string(dropout_rate) +
                          " is outside [0.05, 0.20]; set dropout_override to use it");
  }
  if (hidden_activation == Activation::kSoftmax) {
    throw InvalidArgument("softmax cannot be a hidden activation");
  }
}

namespace {

void append_head(Network& net, std::size_t input_dim, const ClassifierSpec& spec, RngStream& rng) {
  std::size_t width = input_dim;
  bool after_hidden = false;
  for (auto h : spec.hidden_sizes) {
    net.append(make_dense_layer(width, h, spec.hidden_activation, rng),
               after_hidden ? spec.dropout_rate : 0.0);
    width = h;
    after_hidden = true;
  }
  net.append(make_dense_layer(width, spec.num_classes, Activation::kSoftmax, rng),
             after_hidden ? spec.dropout_rate : 0.0);
}

}  // namespace

Network assemble(const Network& encoder, const ClassifierSpec& spec, RngStream& rng) {
  spec.validate();
  if (encoder.empty()) throw InvalidArgument("assemble needs a non-empty encoder");
  if (encoder.layer(encoder.layer_count() - 1).activation == Activation::kSoftmax) {
    throw InvalidArgument("encoder must not end in softmax");
  }
  Network net = encoder;
  append_head(net, encoder.output_dim(), spec, rng);
  return net;
}

Network build_dense_classifier(std::size_t input_dim, const ClassifierSpec& spec, RngStream& rng) {
  spec.validate();
  if (input_dim == 0) throw InvalidArgument("classifier input width must be positive");
  Network net;
  append_head(net, input_dim, spec, rng);
  return net;
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::vector<std::size_t> argmax_rows(const Matrix& scores) {
  std::vector<std::size_t> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    out[static_cast<std::size_t>(r)] =
        argmax({scores.row(r).data(), static_cast<std::size_t>(scores.cols())});
  }
  return out;
}

double accuracy(const Network& net, const LabeledSet& data) {
  if (data.size() == 0) throw InvalidArgument("accuracy on an empty set");
  const auto predicted = argmax_rows(predict(net, data.vectors));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == data.labels[i];
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

namespace {

void check_labeled(const LabeledSet& set, const Network& net, const char* name) {
  if (static_cast<std::size_t>(set.vectors.rows()) != set.labels.size()) {
    throw DimensionError(std::string(name) + ": vector and label counts differ");
  }
  if (set.size() > 0 && static_cast<std::size_t>(set.vectors.cols()) != net.input_dim()) {
    throw DimensionError(std::string(name) + ": vector width does not match the network input");
  }
  for (auto l : set.labels) {
    if (l >= net.output_dim()) {
      throw InvalidArgument(std::string(name) + ": label " + std::to_string(l) +
                            " is not below the class count " + std::to_string(net.output_dim()));
    }
  }
}

double mean_cross_entropy(const Network& net, const LabeledSet& data) {
  constexpr std::size_t kChunk = 2048;
  double total = 0.0;
  for (std::size_t start = 0; start < data.size(); start += kChunk) {
    const std::size_t count = std::min(kChunk, data.size() - start);
    const Matrix chunk = data.vectors.middleRows(static_cast<Eigen::Index>(start),
                                                 static_cast<Eigen::Index>(count));
    const std::span<const std::size_t> labels(data.labels.data() + start, count);
    total += softmax_cross_entropy(forward(net, chunk).logits(), labels).loss *
             static_cast<double>(count);
  }
  return total / static_cast<double>(data.size());
}

}  // namespace

std::optional<double> TrainedModel::best_validation_accuracy() const {
  std::optional<double> best;
  for (const auto& e : history) {
    if (e.validation_accuracy && (!best || *e.validation_accuracy > *best)) {
      best = e.validation_accuracy;
    }
  }
  return best;
}

TrainedModel train(Network net, const LabeledSet& train_set, const LabeledSet& validation,
                   const FineTuneParams& params, RngStream& rng, ScalerParams scaler,
                   ClassMap class_map) {
  if (train_set.size() == 0) throw InvalidArgument("cannot train on an empty training set");
  if (net.empty() || net.layer(net.layer_count() - 1).activation != Activation::kSoftmax) {
    throw InvalidArgument("classifier network must end in a softmax layer");
  }
  if (net.output_dim() != class_map.size()) {
    throw DimensionError("network output width " + std::to_string(net.output_dim()) +
                         " differs from class map size " + std::to_string(class_map.size()));
  }
  if (net.input_dim() != scaler.width) {
    throw DimensionError("network input width differs from the scaler width");
  }
  check_labeled(train_set, net, "training set");
  check_labeled(validation, net, "validation set");

  const bool select = validation.size() > 0;
  TrainedModel model;
  model.scaler = std::move(scaler);
  model.class_map = std::move(class_map);

  model.history.push_back(
      {0, mean_cross_entropy(net, train_set),
       select ? std::optional<double>(accuracy(net, validation)) : std::nullopt});
  Network best = net;
  double best_accuracy = select ? *model.history.back().validation_accuracy : 0.0;
  std::size_t best_epoch = 0;
  std::size_t since_improvement = 0;

  AdamState adam(net, params.adam);
  const BatchObjective objective = [&](const ForwardPass& pass,
                                       std::span<const std::size_t> rows) {
    std::vector<std::size_t> labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) labels[i] = train_set.labels[rows[i]];
    return softmax_cross_entropy(pass.logits(), labels);
  };

  for (std::size_t epoch = 1; epoch <= params.max_epochs; ++epoch) {
    double loss = 0.0;
    try {
      loss = run_epoch(net, train_set.vectors, objective, GradientWrt::kPreActivation, adam, rng,
                       params.batch_size);
    } catch (const NumericError& e) {
      throw NumericError("classifier training diverged in epoch " + std::to_string(epoch) + ": " +
                         e.what());
    }
    EpochRecord record{epoch, loss, std::nullopt};
    if (select) {
      const double acc = accuracy(net, validation);
      record.validation_accuracy = acc;
      if (acc > best_accuracy) {
        best_accuracy = acc;
        best = net;
        best_epoch = epoch;
        since_improvement = 0;
      } else {
        ++since_improvement;
      }
    } else {
      best_epoch = epoch;
    }
    model.history.push_back(record);
    if (select && params.early_stopping && since_improvement >= params.patience) break;
  }
  model.network = select ? std::move(best) : std::move(net);
  model.selected_epoch = best_epoch;
  return model;
}

Prediction TrainedModel::predict(std::span<const double> raw_rss) const {
  if (raw_rss.size() != scaler.width) {
    throw DimensionError("scan has " + std::to_string(raw_rss.size()) + " RSS entries, model expects " +
                         std::to_string(scaler.width));
  }
  const auto input = transform(scaler, substitute_missing(raw_rss, scaler.policy));
  const Matrix row = Eigen::Map<const Matrix>(input.data(), 1, static_cast<Eigen::Index>(input.size()));
  const Matrix probs = wifiloc::predict(network, row);
  Prediction p;
  p.probabilities.assign(probs.data(), probs.data() + probs.size());
  p.class_index = argmax(p.probabilities);
  p.location = class_map.pair_at(p.class_index);
  return p;
}

std::vector<std::size_t> TrainedModel::classify(const Dataset& ds) const {
  std::vector<std::size_t> out;
  out.reserve(ds.size());
  for (const auto& r : ds.records()) out.push_back(predict(r.rss).class_index);
  return out;
}

std::size_t EvalReport::confusion_total() const {
  std::size_t total = 0;
  for (const auto& row : confusion) {
    for (auto c : row) total += c;
  }
  return total;
}

std::size_t EvalReport::confusion_trace() const {
  std::size_t trace = 0;
  for (std::size_t i = 0; i < confusion.size(); ++i) trace += confusion[i][i];
  return trace;
}

EvalReport tally(const ClassMap& map, std::span<const LocationClass> truth,
                 std::span<const std::size_t> predicted) {
  if (truth.size() != predicted.size()) throw DimensionError("tally: length mismatch");
  if (truth.empty()) throw InvalidArgument("tally: nothing to evaluate");
  EvalReport report;
  report.n = truth.size();
  report.confusion.assign(map.size(), std::vector<std::size_t>(map.size(), 0));
  std::size_t joint = 0;
  std::size_t building = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predicted[i] >= map.size()) throw InvalidArgument("tally: predicted class out of range");
    const LocationClass guess = map.pair_at(predicted[i]);
    const auto actual = map.index_of(truth[i]);
    building += guess.building == truth[i].building;
    if (actual) {
      report.confusion[*actual][predicted[i]] += 1;
      joint += *actual == predicted[i];
    } else {
      ++report.unknown_pairs;
    }
  }
  const double n = static_cast<double>(report.n);
  report.joint_accuracy = static_cast<double>(joint) / n;
  report.building_accuracy = static_cast<double>(building) / n;
  report.floor_accuracy_given_building =
      building > 0 ? static_cast<double>(joint) / static_cast<double>(building) : 0.0;
  return report;
}

EvalReport evaluate(const TrainedModel& model, const Dataset& test) {
  if (test.empty()) throw InvalidArgument("evaluate on an empty dataset");
  std::vector<LocationClass> truth;
  truth.reserve(test.size());
  for (const auto& r : test.records()) truth.push_back(location_of(r));
  return tally(model.class_map, truth, model.classify(test));
}

}  // namespace wifiloc
