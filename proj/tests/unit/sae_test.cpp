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

#include "subspace.hpp"
#include "wifiloc/error.hpp"
#include "wifiloc/preprocess.hpp"
#include "wifiloc/sae.hpp"

namespace wifiloc {
namespace {

std::vector<std::size_t> widths(const Network& net) {
  std::vector<std::size_t> w{net.input_dim()};
  for (const auto& l : net.layers()) w.push_back(l.out_dim());
  return w;
}

TEST(Build, DefaultShape) {
  RngStream rng(1);
  const Network ae = build_autoencoder(AutoencoderSpec{}, rng);
  EXPECT_EQ(widths(ae), (std::vector<std::size_t>{520, 256, 128, 64, 128, 256, 520}));
  EXPECT_EQ(ae.layers().back().activation, Activation::kLinear);
  for (std::size_t i = 0; i + 1 < ae.layer_count(); ++i) EXPECT_EQ(ae.layer(i).activation, Activation::kRelu);
}

TEST(Build, MinimalMirror) {
  RngStream rng(1);
  AutoencoderSpec spec;
  spec.input_dim = 4;
  spec.encoder_sizes = {2};
  EXPECT_EQ(widths(build_autoencoder(spec, rng)), (std::vector<std::size_t>{4, 2, 4}));
}

TEST(Build, ParameterCountMatchesClosedForm) {
  // Sum over consecutive widths of in*out weights plus out biases.
  const std::size_t w[] = {520, 256, 128, 64, 128, 256, 520};
  std::size_t expected = 0;
  for (int i = 0; i + 1 < 7; ++i) expected += w[i] * w[i + 1] + w[i + 1];
  ASSERT_EQ(expected, 349512u);
  RngStream rng(1);
  EXPECT_EQ(build_autoencoder(AutoencoderSpec{}, rng).parameter_count(), expected);
}

TEST(Build, RejectsInvalidSpecs) {
  RngStream rng(1);
  AutoencoderSpec empty;
  empty.encoder_sizes = {};
  EXPECT_THROW(build_autoencoder(empty, rng), InvalidArgument);
  AutoencoderSpec wide;
  wide.input_dim = 4;
  wide.encoder_sizes = {8, 4};
  EXPECT_THROW(build_autoencoder(wide, rng), InvalidArgument);
  AutoencoderSpec zero;
  zero.encoder_sizes = {256, 0};
  EXPECT_THROW(build_autoencoder(zero, rng), InvalidArgument);
}

TEST(Pretrain, ZeroEpochsIsNoOp) {
  RngStream rng(2);
  AutoencoderSpec spec;
  spec.input_dim = 6;
  spec.encoder_sizes = {4, 2};
  Network ae = build_autoencoder(spec, rng);
  const Network before = ae;
  PretrainParams params;
  params.epochs = 0;
  Matrix x = Matrix::Random(10, 6);
  const auto h = pretrain(ae, x, params, rng);
  EXPECT_TRUE(h.epoch_loss.empty());
  EXPECT_TRUE(ae == before);
}

TEST(Pretrain, LossDecreasesOnSyntheticScans) {
  const auto ds = generate_synthetic(600, 40, 6, 3);
  const auto sig = SignalMatrix::from_dataset(ds, MissingPolicy::kAsMinus110);
  const Matrix x = transform(fit_scaler(sig, ScalingMode::kJoint), sig);
  AutoencoderSpec spec;
  spec.input_dim = 40;
  spec.encoder_sizes = {32, 16, 8};
  RngStream rng(4);
  Network ae = build_autoencoder(spec, rng);
  PretrainParams params;
  params.epochs = 10;
  const auto h = pretrain(ae, x, params, rng);
  ASSERT_EQ(h.epoch_loss.size(), 10u);
  EXPECT_LT(h.epoch_loss.back(), h.epoch_loss.front());
}

TEST(Pretrain, Reproducible) {
  auto run = [] {
    RngStream rng(9);
    AutoencoderSpec spec;
    spec.input_dim = 8;
    spec.encoder_sizes = {4, 2};
    Network ae = build_autoencoder(spec, rng);
    Matrix x(50, 8);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
    PretrainParams params;
    params.epochs = 3;
    params.batch_size = 16;
    const auto h = pretrain(ae, x, params, rng);
    return std::make_pair(ae, h.epoch_loss);
  };
  const auto a = run(), b = run();
  EXPECT_TRUE(a.first == b.first);
  EXPECT_EQ(a.second, b.second);
}

TEST(Pretrain, LinearSubspaceReachesPcaOptimum) {
  const auto r = oracle::linear_subspace_run(17);
  EXPECT_LT(r.pca_mse, 1e-12);
  EXPECT_LT(r.final_mse, 1e-3);
  EXPECT_LT(r.final_mse, r.first_epoch_loss);
}

TEST(Extract, EncoderMatchesBottleneckBitwise) {
  RngStream rng(3);
  const AutoencoderSpec spec;
  const Network ae = build_autoencoder(spec, rng);
  const Network enc = extract_encoder(ae, spec);
  ASSERT_EQ(enc.layer_count(), 3u);
  EXPECT_EQ(enc.output_dim(), 64u);
  Matrix x(5, 520);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  EXPECT_EQ(forward(enc, x).output(), forward(ae, x).post[3]);
}

TEST(Extract, StructuralMismatch) {
  RngStream rng(3);
  AutoencoderSpec spec;
  spec.input_dim = 6;
  spec.encoder_sizes = {4, 2};
  const Network ae = build_autoencoder(spec, rng);
  AutoencoderSpec other = spec;
  other.encoder_sizes = {3, 2};
  EXPECT_THROW(extract_encoder(ae, other), DimensionError);
  other.encoder_sizes = {2};
  EXPECT_THROW(extract_encoder(ae, other), DimensionError);
}

TEST(Extract, ReattachFreshDecoder) {
  RngStream rng(3);
  AutoencoderSpec spec;
  spec.input_dim = 6;
  spec.encoder_sizes = {4, 2};
  Network net = extract_encoder(build_autoencoder(spec, rng), spec);
  net.append(make_dense_layer(2, 4, Activation::kRelu, rng));
  net.append(make_dense_layer(4, 6, Activation::kLinear, rng));
  EXPECT_EQ(net.layer_count(), 4u);
  EXPECT_EQ(forward(net, Matrix::Ones(2, 6)).output().cols(), 6);
}

}  // namespace
}  // namespace wifiloc
