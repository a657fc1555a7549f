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

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <numeric>

#include "wifiloc/classifier.hpp"
#include "wifiloc/error.hpp"
#include "wifiloc/sae.hpp"

namespace wifiloc {
namespace {

struct Prepared {
  ScalerParams scaler;
  ClassMap map;
  LabeledSet train, val;
  Dataset test;
};

Prepared prepare(std::size_t records, std::size_t aps, std::size_t classes, std::uint64_t seed,
                 SyntheticOptions opts = {}) {
  const auto pool = generate_synthetic(records, aps, classes, seed, opts);
  const auto [train_ds, rest] = split_train_validation(pool, 0.4, seed);
  const auto [val_ds, test_ds] = split_train_validation(rest, 0.5, seed + 1);
  Prepared p;
  p.scaler = fit_scaler(SignalMatrix::from_dataset(train_ds, MissingPolicy::kAsMinus110), ScalingMode::kJoint);
  p.map = build_class_map(train_ds);
  p.train = {preprocess(p.scaler, train_ds), class_labels(train_ds, p.map)};
  p.val = {preprocess(p.scaler, val_ds), class_labels(val_ds, p.map)};
  p.test = test_ds;
  return p;
}

ClassifierSpec small_head(std::size_t classes) {
  ClassifierSpec spec;
  spec.hidden_sizes = {16};
  spec.num_classes = classes;
  return spec;
}

TEST(Assemble, DefaultShapeAndWeightsPreserved) {
  RngStream rng(1);
  const AutoencoderSpec ae_spec;
  const Network enc = extract_encoder(build_autoencoder(ae_spec, rng), ae_spec);
  ClassifierSpec spec;
  spec.num_classes = 13;
  const Network net = assemble(enc, spec, rng);
  ASSERT_EQ(net.layer_count(), 6u);
  std::vector<std::size_t> w{net.input_dim()};
  for (const auto& l : net.layers()) w.push_back(l.out_dim());
  EXPECT_EQ(w, (std::vector<std::size_t>{520, 256, 128, 64, 128, 128, 13}));
  EXPECT_EQ(net.layers().back().activation, Activation::kSoftmax);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(net.layer(i).weights, enc.layer(i).weights);
    EXPECT_EQ(net.layer(i).biases, enc.layer(i).biases);
  }
  EXPECT_EQ(net.dropout_rates(), (std::vector<double>{0.0, 0.0, 0.0, 0.1, 0.1}));
}

TEST(Assemble, SameWidthChainingAndEmptyHead) {
  RngStream rng(1);
  const Network enc({make_dense_layer(10, 64, Activation::kRelu, rng)});
  ClassifierSpec spec;
  spec.hidden_sizes = {64};
  spec.num_classes = 3;
  EXPECT_EQ(assemble(enc, spec, rng).layer(1).in_dim(), 64u);
  spec.hidden_sizes = {};
  const Network direct = assemble(enc, spec, rng);
  ASSERT_EQ(direct.layer_count(), 2u);
  EXPECT_EQ(direct.layer(1).in_dim(), 64u);
  EXPECT_EQ(direct.output_dim(), 3u);
}

TEST(Assemble, Errors) {
  RngStream rng(1);
  ClassifierSpec spec = small_head(3);
  EXPECT_THROW(assemble(Network{}, spec, rng), InvalidArgument);
  spec.dropout_rate = 0.5;
  const Network enc({make_dense_layer(4, 2, Activation::kRelu, rng)});
  EXPECT_THROW(assemble(enc, spec, rng), InvalidArgument);
  spec.dropout_override = true;
  EXPECT_NO_THROW(assemble(enc, spec, rng));
}

TEST(Train, SeparableTwoClassReachesNinetyFive) {
  auto p = prepare(400, 10, 2, 5, {.missing_fraction = 0.0, .noise_sigma = 2.0});
  RngStream rng(3);
  Network net = build_dense_classifier(10, small_head(2), rng);
  FineTuneParams params;
  params.max_epochs = 30;
  const auto model = train(net, p.train, p.val, params, rng, p.scaler, p.map);
  ASSERT_TRUE(model.best_validation_accuracy());
  EXPECT_GE(*model.best_validation_accuracy(), 0.95);
  EXPECT_LE(model.history.size(), 31u);
}

TEST(Train, ZeroEpochsKeepsInitialNetworkAtChance) {
  double total = 0.0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    auto p = prepare(400, 12, 4, 100 + s);
    RngStream rng(s);
    const Network net = build_dense_classifier(12, small_head(4), rng);
    FineTuneParams params;
    params.max_epochs = 0;
    const auto model = train(net, p.train, p.val, params, rng, p.scaler, p.map);
    EXPECT_EQ(model.selected_epoch, 0u);
    EXPECT_TRUE(model.network == net);
    total += *model.best_validation_accuracy();
  }
  EXPECT_NEAR(total / seeds, 0.25, 0.1);
}

TEST(Train, DeterministicAndSelectsBestEpoch) {
  auto p = prepare(300, 12, 5, 8);
  auto run = [&] {
    RngStream rng(44);
    const Network net = build_dense_classifier(12, small_head(5), rng);
    FineTuneParams params;
    params.max_epochs = 25;
    params.patience = 4;
    return train(net, p.train, p.val, params, rng, p.scaler, p.map);
  };
  const auto a = run(), b = run();
  EXPECT_TRUE(a.network == b.network);
  EXPECT_EQ(a.selected_epoch, b.selected_epoch);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i].train_loss, b.history[i].train_loss);
    EXPECT_EQ(a.history[i].validation_accuracy, b.history[i].validation_accuracy);
  }

  double best = 0.0;
  for (const auto& e : a.history) best = std::max(best, *e.validation_accuracy);
  EXPECT_EQ(*a.best_validation_accuracy(), best);
  EXPECT_EQ(*a.history[a.selected_epoch].validation_accuracy, best);
  for (std::size_t e = 0; e < a.selected_epoch; ++e) EXPECT_LT(*a.history[e].validation_accuracy, best);
  EXPECT_EQ(accuracy(a.network, p.val), best);
  EXPECT_LE(a.history.size(), a.selected_epoch + 4 + 1);
}

TEST(Train, InputErrors) {
  auto p = prepare(60, 6, 3, 2);
  RngStream rng(1);
  const Network net = build_dense_classifier(6, small_head(3), rng);
  FineTuneParams params;
  params.max_epochs = 1;
  EXPECT_THROW(train(net, LabeledSet{Matrix(0, 6), {}}, p.val, params, rng, p.scaler, p.map), InvalidArgument);
  auto bad = p.train;
  bad.labels[0] = 7;
  EXPECT_THROW(train(net, bad, p.val, params, rng, p.scaler, p.map), InvalidArgument);
}

TrainedModel small_model() {
  auto p = prepare(300, 12, 5, 21);
  RngStream rng(2);
  const Network net = build_dense_classifier(12, small_head(5), rng);
  FineTuneParams params;
  params.max_epochs = 10;
  return train(net, p.train, p.val, params, rng, p.scaler, p.map);
}

TEST(Predict, ProbabilitiesAndTotality) {
  const auto model = small_model();
  const auto ds = generate_synthetic(30, 12, 5, 99);
  for (const auto& r : ds.records()) {
    const auto pred = model.predict(r.rss);
    EXPECT_NEAR(std::accumulate(pred.probabilities.begin(), pred.probabilities.end(), 0.0), 1.0, 1e-9);
    EXPECT_EQ(pred.location, model.class_map.pair_at(pred.class_index));
  }
  const std::vector<double> silent(12, kMissing);
  const auto pred = model.predict(silent);
  EXPECT_EQ(pred.probabilities.size(), 5u);
  EXPECT_NEAR(std::accumulate(pred.probabilities.begin(), pred.probabilities.end(), 0.0), 1.0, 1e-9);
  EXPECT_THROW(model.predict(std::vector<double>(11, -50.0)), DimensionError);
}

TEST(Evaluate, AgreesWithPredictAndIsConsistent) {
  const auto model = small_model();
  const auto test = generate_synthetic(200, 12, 5, 77);
  const auto report = evaluate(model, test);
  const auto again = evaluate(model, test);
  EXPECT_EQ(report.confusion, again.confusion);
  EXPECT_EQ(report.joint_accuracy, again.joint_accuracy);

  std::size_t hits = 0;
  for (const auto& r : test.records()) {
    const auto pred = model.predict(r.rss);
    hits += pred.location == location_of(r);
    const auto truth = *model.class_map.index_of(location_of(r));
    EXPECT_GE(report.confusion[truth][pred.class_index], 1u);
  }
  EXPECT_EQ(report.n, 200u);
  EXPECT_EQ(report.confusion_total(), report.n);
  EXPECT_DOUBLE_EQ(report.joint_accuracy, static_cast<double>(report.confusion_trace()) / report.n);
  EXPECT_DOUBLE_EQ(report.joint_accuracy, static_cast<double>(hits) / report.n);
  EXPECT_GE(report.building_accuracy, report.joint_accuracy);
}

TEST(Evaluate, ConstantPredictorOnBalancedThirteen) {
  const auto test = generate_synthetic(13 * 7, 4, 13, 5);
  const auto map = build_class_map(test);
  ASSERT_EQ(map.size(), 13u);
  TrainedModel model;
  model.class_map = map;
  model.scaler = fit_scaler(SignalMatrix::from_dataset(test, MissingPolicy::kAsMinus110), ScalingMode::kJoint);
  DenseLayer out;
  out.weights = Matrix::Zero(13, 4);
  out.biases = Vector::Zero(13);
  out.biases[0] = 5.0;
  out.activation = Activation::kSoftmax;
  model.network = Network({out});
  const auto report = evaluate(model, test);
  EXPECT_DOUBLE_EQ(report.joint_accuracy, 1.0 / 13.0);
  for (std::size_t t = 0; t < 13; ++t) EXPECT_EQ(report.confusion[t][0], 7u);
}

TEST(Tally, PerfectOracleAndTieBreak) {
  const auto ds = generate_synthetic(40, 3, 6, 1);
  const auto map = build_class_map(ds);
  std::vector<LocationClass> truth;
  for (const auto& r : ds.records()) truth.push_back(location_of(r));
  const auto report = tally(map, truth, class_labels(ds, map));
  EXPECT_EQ(report.joint_accuracy, 1.0);
  EXPECT_EQ(report.building_accuracy, 1.0);
  EXPECT_EQ(report.floor_accuracy_given_building, 1.0);
  for (std::size_t i = 0; i < map.size(); ++i)
    for (std::size_t j = 0; j < map.size(); ++j)
      if (i != j) EXPECT_EQ(report.confusion[i][j], 0u);
  EXPECT_EQ(argmax(std::vector<double>{0.2, 0.4, 0.4}), 1u);
}

TEST(Tally, UnknownPairsCountAsErrors) {
  const ClassMap map({{0, 0}, {0, 1}, {1, 0}});
  const std::vector<LocationClass> truth{{0, 0}, {0, 1}, {2, 0}, {1, 0}};
  const std::vector<std::size_t> predicted{0, 0, 2, 2};
  const auto r = tally(map, truth, predicted);
  EXPECT_EQ(r.unknown_pairs, 1u);
  EXPECT_EQ(r.confusion_total() + r.unknown_pairs, r.n);
  EXPECT_DOUBLE_EQ(r.joint_accuracy, 2.0 / 4.0);
  EXPECT_DOUBLE_EQ(r.building_accuracy, 3.0 / 4.0);
  EXPECT_DOUBLE_EQ(r.floor_accuracy_given_building, 2.0 / 3.0);
}

TEST(Bundle, SaveLoadRoundTrip) {
  const auto model = small_model();
  const auto dir = std::filesystem::temp_directory_path() / "wifiloc_bundle_test";
  std::filesystem::remove_all(dir);
  save_model(model, dir);
  const auto back = load_model(dir);
  EXPECT_TRUE(back.network == model.network);
  EXPECT_EQ(back.scaler, model.scaler);
  EXPECT_EQ(back.class_map, model.class_map);
  EXPECT_EQ(back.selected_epoch, model.selected_epoch);
  ASSERT_EQ(back.history.size(), model.history.size());
  for (std::size_t i = 0; i < back.history.size(); ++i) {
    EXPECT_EQ(back.history[i].train_loss, model.history[i].train_loss);
    EXPECT_EQ(back.history[i].validation_accuracy, model.history[i].validation_accuracy);
  }
  const auto test = generate_synthetic(50, 12, 5, 3);
  EXPECT_EQ(back.classify(test), model.classify(test));
  std::filesystem::remove(dir / "network.bin");
  EXPECT_THROW(load_model(dir), Error);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace wifiloc
