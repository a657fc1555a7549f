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

#include "wifiloc/sae.hpp"

#include <string>

#include "wifiloc/error.hpp"

namespace wifiloc {

void AutoencoderSpec::validate() const {
  if (input_dim == 0) throw InvalidArgument("autoencoder input_dim must be positive");
  if (encoder_sizes.empty()) throw InvalidArgument("autoencoder needs at least one encoder layer");
  for (auto s : encoder_sizes) {
    if (s == 0) throw InvalidArgument("encoder layer widths must be positive");
  }
  if (encoder_sizes.back() >= input_dim) {
    throw InvalidArgument("bottleneck width " + std::to_string(encoder_sizes.back()) +
                          " must be smaller than input_dim " + std::to_string(input_dim));
  }
  if (hidden_activation == Activation::kSoftmax) {
    throw InvalidArgument("softmax cannot be a hidden activation");
  }
}

Network build_autoencoder(const AutoencoderSpec& spec, RngStream& rng) {
  spec.validate();
  std::vector<std::size_t> widths;
  widths.push_back(spec.input_dim);
  widths.insert(widths.end(), spec.encoder_sizes.begin(), spec.encoder_sizes.end());
  // Mirror: e_k -> ... -> e_1 -> input_dim.
  for (auto it = spec.encoder_sizes.rbegin() + 1; it != spec.encoder_sizes.rend(); ++it) {
    widths.push_back(*it);
  }
  widths.push_back(spec.input_dim);

  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const bool output = i + 2 == widths.size();
    layers.push_back(make_dense_layer(widths[i], widths[i + 1],
                                      output ? Activation::kLinear : spec.hidden_activation, rng));
  }
  return Network(std::move(layers));
}

PretrainHistory pretrain(Network& autoencoder, const Matrix& train_vectors,
                         const PretrainParams& params, RngStream& rng) {
  if (static_cast<std::size_t>(train_vectors.cols()) != autoencoder.input_dim()) {
    throw DimensionError("pretrain: vectors have " + std::to_string(train_vectors.cols()) +
                         " columns, autoencoder expects " +
                         std::to_string(autoencoder.input_dim()));
  }
  if (autoencoder.output_dim() != autoencoder.input_dim()) {
    throw DimensionError("pretrain: network output width differs from its input width");
  }
  PretrainHistory history;
  if (params.epochs == 0) return history;

  AdamState adam(autoencoder, params.adam);
  const BatchObjective reconstruction = [&](const ForwardPass& pass,
                                            std::span<const std::size_t>) {
    return mse_loss(pass.output(), pass.post.front());
  };
  for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
    try {
      history.epoch_loss.push_back(run_epoch(autoencoder, train_vectors, reconstruction,
                                             GradientWrt::kOutput, adam, rng, params.batch_size));
    } catch (const NumericError& e) {
      throw NumericError("autoencoder pretraining diverged in epoch " + std::to_string(epoch + 1) +
                         ": " + e.what());
    }
  }
  return history;
}

Network extract_encoder(const Network& autoencoder, const AutoencoderSpec& spec) {
  spec.validate();
  const std::size_t k = spec.encoder_sizes.size();
  if (autoencoder.layer_count() != 2 * k) {
    throw DimensionError("autoencoder has " + std::to_string(autoencoder.layer_count()) +
                         " layers, spec implies " + std::to_string(2 * k));
  }
  if (autoencoder.input_dim() != spec.input_dim) {
    throw DimensionError("autoencoder input width does not match the spec");
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (autoencoder.layer(i).out_dim() != spec.encoder_sizes[i]) {
      throw DimensionError("encoder layer " + std::to_string(i) + " width does not match the spec");
    }
  }
  return autoencoder.slice(0, k);
}

}  // namespace wifiloc
