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

#include <Eigen/Eigenvalues>

#include "wifiloc/sae.hpp"

namespace wifiloc::oracle {

/// n x 4 points lying exactly on a 2-D affine subspace.
inline Matrix rank2_data(std::size_t n, RngStream& rng) {
  Matrix basis(2, 4), z(static_cast<Eigen::Index>(n), 2);
  for (Eigen::Index i = 0; i < basis.size(); ++i) basis.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
  Matrix x = z * basis;
  x.rowwise() += Eigen::RowVector4d(0.5, -0.25, 0.0, 1.0);
  return x;
}

/// Mean squared error of the best rank-r affine reconstruction: the
/// discarded covariance eigenvalues, averaged over the columns.
inline double pca_floor(const Matrix& x, int r) {
  const Matrix centered = x.rowwise() - x.colwise().mean();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(x.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  double rest = 0.0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size() - r; ++i) rest += std::max(0.0, eig.eigenvalues()[i]);
  return rest / static_cast<double>(x.cols());
}

struct SubspaceRun {
  double pca_mse = 0.0;
  double final_mse = 0.0;
  double first_epoch_loss = 0.0;
};

/// Pretrains a (4,[2]) linear autoencoder on rank-2 data and reports the
/// reconstruction MSE, recomputed outside the training loop.
inline SubspaceRun linear_subspace_run(std::uint64_t seed) {
  RngStream rng(seed);
  const Matrix x = rank2_data(256, rng);
  AutoencoderSpec spec;
  spec.input_dim = 4;
  spec.encoder_sizes = {2};
  spec.hidden_activation = Activation::kLinear;
  Network ae = build_autoencoder(spec, rng);
  PretrainParams params;
  params.epochs = 300;
  params.batch_size = 32;
  params.adam.learning_rate = 1e-2;
  const auto history = pretrain(ae, x, params, rng);
  SubspaceRun out;
  out.pca_mse = pca_floor(x, 2);
  out.first_epoch_loss = history.epoch_loss.front();
  out.final_mse = (predict(ae, x) - x).squaredNorm() / static_cast<double>(x.size());
  return out;
}

}  // namespace wifiloc::oracle
