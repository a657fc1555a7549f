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
#include <vector>

#include "wifiloc/nn.hpp"

namespace wifiloc {

/// Only joint end-to-end training exists today; the field keeps room for a
/// greedy layer-wise variant without changing the interface.
enum class PretrainStrategy { kJointEndToEnd };

struct AutoencoderSpec {
  std::size_t input_dim = 520;
  std::vector<std::size_t> encoder_sizes{256, 128, 64};
  Activation hidden_activation = Activation::kRelu;
  PretrainStrategy strategy = PretrainStrategy::kJointEndToEnd;

  void validate() const;
};

/// Encoder input -> e1 -> ... -> ek, then the mirrored decoder back to
/// input_dim with a linear output layer. Decoder weights are not tied.
Network build_autoencoder(const AutoencoderSpec& spec, RngStream& rng);

struct PretrainParams {
  std::size_t epochs = 20;
  std::size_t batch_size = 64;
  AdamParams adam;
};

struct PretrainHistory {
  std::vector<double> epoch_loss;
};

/// Adam on mse(forward(x), x). Throws NumericError on a non-finite loss.
PretrainHistory pretrain(Network& autoencoder, const Matrix& train_vectors,
                         const PretrainParams& params, RngStream& rng);

/// Copy of the first k layers, through the bottleneck.
Network extract_encoder(const Network& autoencoder, const AutoencoderSpec& spec);

}  // namespace wifiloc
