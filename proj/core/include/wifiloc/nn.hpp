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
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "wifiloc/matrix.hpp"
#include "wifiloc/rng.hpp"

namespace wifiloc {

enum class Activation : std::uint8_t { kRelu = 0, kTanh = 1, kLinear = 2, kSoftmax = 3 };

std::string_view to_string(Activation activation);
Activation parse_activation(std::string_view text);

struct DenseLayer {
  Matrix weights;  // out_dim x in_dim
  Vector biases;   // out_dim
  Activation activation = Activation::kLinear;

  std::size_t in_dim() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weights.rows()); }
  std::size_t parameter_count() const { return weights.size() + biases.size(); }
};

/// Weights uniform in +-sqrt(6 / (in + out)), biases zero.
DenseLayer make_dense_layer(std::size_t in_dim, std::size_t out_dim, Activation activation,
                            RngStream& rng);

/// Ordered chain of dense layers. Gap i sits between layer i and layer i + 1;
/// its dropout rate applies to layer i's output during training. Softmax is
/// only permitted on the last layer.
class Network {
 public:
  Network() = default;
  explicit Network(std::vector<DenseLayer> layers, std::vector<double> dropout_rates = {});

  std::size_t layer_count() const noexcept { return layers_.size(); }
  bool empty() const noexcept { return layers_.empty(); }
  std::size_t input_dim() const;
  std::size_t output_dim() const;
  std::size_t parameter_count() const;

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  const DenseLayer& layer(std::size_t i) const { return layers_.at(i); }

  /// Mutable access invalidates any ForwardPass taken before it.
  DenseLayer& mutable_layer(std::size_t i);

  const std::vector<double>& dropout_rates() const noexcept { return dropout_rates_; }
  double dropout_rate(std::size_t gap) const { return dropout_rates_.at(gap); }
  void set_dropout_rate(std::size_t gap, double rate);

  /// Layers [first, last) with their inner gaps.
  Network slice(std::size_t first, std::size_t last) const;

  /// Appends a layer; `gap_rate` is the dropout between the current last layer and it.
  void append(DenseLayer layer, double gap_rate = 0.0);

  /// Incremented whenever parameters may have changed.
  std::uint64_t revision() const noexcept { return revision_; }
  void touch() noexcept { ++revision_; }

  friend bool operator==(const Network& a, const Network& b);

 private:
  void validate() const;

  std::vector<DenseLayer> layers_;
  std::vector<double> dropout_rates_;
  std::uint64_t revision_ = 0;
};

/// Everything backward() needs from a forward call.
struct ForwardPass {
  std::vector<Matrix> pre;    // pre[i]: layer i pre-activation
  std::vector<Matrix> post;   // post[0]: input; post[i + 1]: layer i output after dropout
  std::vector<Matrix> masks;  // masks[i]: scaled keep mask for gap i, empty if not applied
  std::uint64_t revision = 0;

  const Matrix& output() const { return post.back(); }
  const Matrix& logits() const { return pre.back(); }
};

/// Inference: no dropout, never touches an RNG.
ForwardPass forward(const Network& net, const Matrix& batch);

/// Training: inverted dropout at every gap with a positive rate.
ForwardPass forward(const Network& net, const Matrix& batch, RngStream& rng);

/// Inference output only, without keeping intermediates.
Matrix predict(const Network& net, const Matrix& batch);

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

/// What the output gradient handed to backward() is taken with respect to.
/// kPreActivation lets softmax + cross-entropy skip the softmax Jacobian.
enum class GradientWrt { kOutput, kPreActivation };

Gradients backward(const Network& net, const ForwardPass& pass, const Matrix& output_grad,
                   GradientWrt wrt = GradientWrt::kOutput);

struct LossResult {
  double loss = 0.0;
  Matrix grad;
};

/// Row-wise softmax with max subtraction.
Matrix softmax(const Matrix& logits);

/// Mean negative log-likelihood; grad is w.r.t. the logits: (softmax - onehot) / n.
LossResult softmax_cross_entropy(const Matrix& logits, std::span<const std::size_t> labels);

/// Mean squared error over all entries; grad = 2 (reconstruction - target) / count.
LossResult mse_loss(const Matrix& reconstruction, const Matrix& target);

struct AdamParams {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam on one parameter block. `step` is the 1-based step
/// number after incrementing.
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, std::uint64_t step, const AdamParams& hyper);

class AdamState {
 public:
  AdamState(const Network& net, AdamParams hyper);

  std::uint64_t step_count() const noexcept { return step_; }
  const AdamParams& hyper() const noexcept { return hyper_; }

 private:
  friend void adam_step(Network&, const Gradients&, AdamState&);

  AdamParams hyper_;
  std::uint64_t step_ = 0;
  std::vector<Matrix> m_weights_, v_weights_;
  std::vector<Vector> m_biases_, v_biases_;
};

/// Rejects non-finite gradients before touching any parameter.
void adam_step(Network& net, const Gradients& grads, AdamState& state);

/// Loss for a mini-batch given its forward pass and the row indices it was
/// gathered from. The returned grad must match `wrt` passed to run_epoch.
using BatchObjective =
    std::function<LossResult(const ForwardPass& pass, std::span<const std::size_t> rows)>;

/// One shuffled pass of mini-batch Adam over the rows of `inputs`.
/// Returns the sample-weighted mean batch loss.
double run_epoch(Network& net, const Matrix& inputs, const BatchObjective& objective,
                 GradientWrt wrt, AdamState& adam, RngStream& rng, std::size_t batch_size);

Matrix gather_rows(const Matrix& source, std::span<const std::size_t> rows);

/// Binary container: magic, version, little-endian and float64 markers, then
/// per layer its sizes, activation tag, trailing dropout rate, row-major
/// weights and biases.
void write_network(const Network& net, std::ostream& out);
Network read_network(std::istream& in);

}  // namespace wifiloc
