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

#include "wifiloc/nn.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "wifiloc/error.hpp"

namespace wifiloc {

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kLinear: return "linear";
    case Activation::kSoftmax: return "softmax";
  }
  return "unknown";
}

Activation parse_activation(std::string_view text) {
  if (text == "relu") return Activation::kRelu;
  if (text == "tanh") return Activation::kTanh;
  if (text == "linear") return Activation::kLinear;
  if (text == "softmax") return Activation::kSoftmax;
  throw InvalidArgument("unknown activation '" + std::string(text) + "'");
}

DenseLayer make_dense_layer(std::size_t in_dim, std::size_t out_dim, Activation activation,
                            RngStream& rng) {
  if (in_dim == 0 || out_dim == 0) throw InvalidArgument("dense layer dimensions must be positive");
  const double limit = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
  DenseLayer layer;
  layer.weights.resize(static_cast<Eigen::Index>(out_dim), static_cast<Eigen::Index>(in_dim));
  for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
      layer.weights(r, c) = rng.uniform(-limit, limit);
    }
  }
  layer.biases = Vector::Zero(static_cast<Eigen::Index>(out_dim));
  layer.activation = activation;
  return layer;
}

Network::Network(std::vector<DenseLayer> layers, std::vector<double> dropout_rates)
    : layers_(std::move(layers)), dropout_rates_(std::move(dropout_rates)) {
  if (dropout_rates_.empty() && !layers_.empty()) dropout_rates_.assign(layers_.size() - 1, 0.0);
  validate();
}

void Network::validate() const {
  const std::size_t gaps = layers_.empty() ? 0 : layers_.size() - 1;
  if (dropout_rates_.size() != gaps) {
    throw DimensionError("network has " + std::to_string(layers_.size()) + " layers but " +
                         std::to_string(dropout_rates_.size()) + " dropout rates");
  }
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.weights.rows() == 0 || l.weights.cols() == 0) {
      throw DimensionError("layer " + std::to_string(i) + " has an empty weight matrix");
    }
    if (l.biases.size() != l.weights.rows()) {
      throw DimensionError("layer " + std::to_string(i) + " bias size does not match its outputs");
    }
    if (i > 0 && layers_[i - 1].out_dim() != l.in_dim()) {
      throw DimensionError("layer " + std::to_string(i) + " expects " + std::to_string(l.in_dim()) +
                           " inputs but layer " + std::to_string(i - 1) + " produces " +
                           std::to_string(layers_[i - 1].out_dim()));
    }
    if (l.activation == Activation::kSoftmax && i + 1 != layers_.size()) {
      throw InvalidArgument("softmax is only allowed on the output layer");
    }
    if (!l.weights.allFinite() || !l.biases.allFinite()) {
      throw NumericError("layer " + std::to_string(i) + " has non-finite parameters");
    }
  }
  for (double r : dropout_rates_) {
    if (!(r >= 0.0 && r < 1.0)) throw InvalidArgument("dropout rate must lie in [0, 1)");
  }
}

std::size_t Network::input_dim() const { return layers_.empty() ? 0 : layers_.front().in_dim(); }

std::size_t Network::output_dim() const { return layers_.empty() ? 0 : layers_.back().out_dim(); }

std::size_t Network::parameter_count() const {
  std::size_t total = 0;
  for (const auto& l : layers_) total += l.parameter_count();
  return total;
}

DenseLayer& Network::mutable_layer(std::size_t i) {
  ++revision_;
  return layers_.at(i);
}

void Network::set_dropout_rate(std::size_t gap, double rate) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidArgument("dropout rate must lie in [0, 1)");
  dropout_rates_.at(gap) = rate;
}

Network Network::slice(std::size_t first, std::size_t last) const {
  if (first > last || last > layers_.size()) throw InvalidArgument("bad network slice bounds");
  std::vector<DenseLayer> layers(layers_.begin() + static_cast<std::ptrdiff_t>(first),
                                 layers_.begin() + static_cast<std::ptrdiff_t>(last));
  std::vector<double> rates;
  for (std::size_t g = first; g + 1 < last; ++g) rates.push_back(dropout_rates_[g]);
  return Network(std::move(layers), std::move(rates));
}

void Network::append(DenseLayer layer, double gap_rate) {
  if (!layers_.empty()) dropout_rates_.push_back(gap_rate);
  layers_.push_back(std::move(layer));
  ++revision_;
  try {
    validate();
  } catch (...) {
    layers_.pop_back();
    if (!dropout_rates_.empty() && dropout_rates_.size() == layers_.size()) dropout_rates_.pop_back();
    throw;
  }
}

bool operator==(const Network& a, const Network& b) {
  if (a.layers_.size() != b.layers_.size() || a.dropout_rates_ != b.dropout_rates_) return false;
  for (std::size_t i = 0; i < a.layers_.size(); ++i) {
    const auto& x = a.layers_[i];
    const auto& y = b.layers_[i];
    if (x.activation != y.activation || x.weights.rows() != y.weights.rows() ||
        x.weights.cols() != y.weights.cols() || x.weights != y.weights || x.biases != y.biases) {
      return false;
    }
  }
  return true;
}

Matrix softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double m = logits.row(r).maxCoeff();
    out.row(r) = (logits.row(r).array() - m).exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

namespace {

Matrix activate(const Matrix& z, Activation activation) {
  switch (activation) {
    case Activation::kRelu: return z.cwiseMax(0.0);
    case Activation::kTanh: return z.array().tanh().matrix();
    case Activation::kLinear: return z;
    case Activation::kSoftmax: return softmax(z);
  }
  return z;
}

Matrix affine(const Matrix& input, const DenseLayer& layer) {
  Matrix z = input * layer.weights.transpose();
  z.rowwise() += layer.biases.transpose();
  return z;
}

void check_input(const Network& net, const Matrix& batch) {
  if (net.empty()) throw InvalidArgument("forward through an empty network");
  if (static_cast<std::size_t>(batch.cols()) != net.input_dim()) {
    throw DimensionError("batch has " + std::to_string(batch.cols()) +
                         " columns, network expects " + std::to_string(net.input_dim()));
  }
}

ForwardPass run_forward(const Network& net, const Matrix& batch, RngStream* rng) {
  check_input(net, batch);
  const std::size_t count = net.layer_count();
  ForwardPass pass;
  pass.revision = net.revision();
  pass.pre.reserve(count);
  pass.post.reserve(count + 1);
  pass.masks.resize(count - 1);
  pass.post.push_back(batch);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& layer = net.layer(i);
    Matrix z = affine(pass.post.back(), layer);
    Matrix a = activate(z, layer.activation);
    if (!a.allFinite()) {
      throw NumericError("non-finite activation in layer " + std::to_string(i));
    }
    if (rng != nullptr && i + 1 < count) {
      const double rate = net.dropout_rate(i);
      if (rate > 0.0) {
        const double keep_scale = 1.0 / (1.0 - rate);
        Matrix mask(a.rows(), a.cols());
        for (Eigen::Index r = 0; r < mask.rows(); ++r) {
          for (Eigen::Index c = 0; c < mask.cols(); ++c) {
            mask(r, c) = rng->bernoulli(rate) ? 0.0 : keep_scale;
          }
        }
        a = a.cwiseProduct(mask);
        pass.masks[i] = std::move(mask);
      }
    }
    pass.pre.push_back(std::move(z));
    pass.post.push_back(std::move(a));
  }
  return pass;
}

}  // namespace

ForwardPass forward(const Network& net, const Matrix& batch) { return run_forward(net, batch, nullptr); }

ForwardPass forward(const Network& net, const Matrix& batch, RngStream& rng) {
  return run_forward(net, batch, &rng);
}

Matrix predict(const Network& net, const Matrix& batch) {
  check_input(net, batch);
  Matrix a = batch;
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    a = activate(affine(a, net.layer(i)), net.layer(i).activation);
    if (!a.allFinite()) throw NumericError("non-finite activation in layer " + std::to_string(i));
  }
  return a;
}

Gradients backward(const Network& net, const ForwardPass& pass, const Matrix& output_grad,
                   GradientWrt wrt) {
  const std::size_t count = net.layer_count();
  if (pass.revision != net.revision() || pass.pre.size() != count ||
      pass.post.size() != count + 1 || pass.masks.size() + 1 != count) {
    throw InvalidArgument("backward: activations do not belong to this network state");
  }
  for (std::size_t i = 0; i < count; ++i) {
    const auto& l = net.layer(i);
    if (static_cast<std::size_t>(pass.post[i].cols()) != l.in_dim() ||
        static_cast<std::size_t>(pass.pre[i].cols()) != l.out_dim()) {
      throw InvalidArgument("backward: stale activations for layer " + std::to_string(i));
    }
  }
  const Eigen::Index rows = pass.post.front().rows();
  if (output_grad.rows() != rows ||
      static_cast<std::size_t>(output_grad.cols()) != net.output_dim()) {
    throw DimensionError("backward: output gradient shape does not match the forward output");
  }

  Gradients g;
  g.weights.resize(count);
  g.biases.resize(count);
  Matrix upstream;  // gradient w.r.t. post[i + 1]
  for (std::size_t step = 0; step < count; ++step) {
    const std::size_t i = count - 1 - step;
    const auto& layer = net.layer(i);
    const bool last = i + 1 == count;
    Matrix dz;
    if (last && wrt == GradientWrt::kPreActivation) {
      dz = output_grad;
    } else {
      Matrix da = last ? output_grad : std::move(upstream);
      if (!last && pass.masks[i].size() > 0) da = da.cwiseProduct(pass.masks[i]);
      const Matrix& z = pass.pre[i];
      switch (layer.activation) {
        case Activation::kRelu:
          dz = da.cwiseProduct((z.array() > 0.0).cast<double>().matrix());
          break;
        case Activation::kTanh:
          dz = da.cwiseProduct((1.0 - z.array().tanh().square()).matrix());
          break;
        case Activation::kLinear:
          dz = std::move(da);
          break;
        case Activation::kSoftmax: {
          const Matrix& p = pass.post[i + 1];
          const Eigen::VectorXd inner = da.cwiseProduct(p).rowwise().sum();
          dz = p.cwiseProduct((da.colwise() - inner));
          break;
        }
      }
    }
    g.weights[i] = dz.transpose() * pass.post[i];
    g.biases[i] = dz.colwise().sum().transpose();
    if (i > 0) upstream = dz * layer.weights;
  }
  return g;
}

LossResult softmax_cross_entropy(const Matrix& logits, std::span<const std::size_t> labels) {
  const auto n = logits.rows();
  const auto classes = static_cast<std::size_t>(logits.cols());
  if (static_cast<std::size_t>(n) != labels.size()) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(n) + " rows");
  }
  if (n == 0) throw InvalidArgument("softmax_cross_entropy on an empty batch");
  LossResult out;
  out.grad = softmax(logits);
  double total = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    const std::size_t label = labels[static_cast<std::size_t>(r)];
    if (label >= classes) {
      throw InvalidArgument("label " + std::to_string(label) + " out of range for " +
                            std::to_string(classes) + " classes");
    }
    const double m = logits.row(r).maxCoeff();
    const double log_sum = std::log((logits.row(r).array() - m).exp().sum());
    total += -(logits(r, static_cast<Eigen::Index>(label)) - m - log_sum);
    out.grad(r, static_cast<Eigen::Index>(label)) -= 1.0;
  }
  out.grad /= static_cast<double>(n);
  out.loss = total / static_cast<double>(n);
  return out;
}

LossResult mse_loss(const Matrix& reconstruction, const Matrix& target) {
  if (reconstruction.rows() != target.rows() || reconstruction.cols() != target.cols()) {
    throw DimensionError("mse_loss: shapes differ");
  }
  if (reconstruction.size() == 0) throw InvalidArgument("mse_loss on empty matrices");
  const double count = static_cast<double>(reconstruction.size());
  Matrix diff = reconstruction - target;
  LossResult out;
  out.loss = diff.squaredNorm() / count;
  out.grad = (2.0 / count) * diff;
  return out;
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, std::uint64_t step, const AdamParams& hyper) {
  if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size()) {
    throw DimensionError("adam_update: block sizes differ");
  }
  if (step == 0) throw InvalidArgument("adam_update: step numbering starts at 1");
  const double t = static_cast<double>(step);
  const double correction1 = 1.0 - std::pow(hyper.beta1, t);
  const double correction2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g;
    v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g * g;
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    params[i] -= hyper.learning_rate * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
  }
}

AdamState::AdamState(const Network& net, AdamParams hyper) : hyper_(hyper) {
  for (const auto& l : net.layers()) {
    m_weights_.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    v_weights_.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
    m_biases_.push_back(Vector::Zero(l.biases.size()));
    v_biases_.push_back(Vector::Zero(l.biases.size()));
  }
}

namespace {

template <class Dense>
std::span<double> span_of(Dense& x) {
  return {x.data(), static_cast<std::size_t>(x.size())};
}

template <class Dense>
std::span<const double> cspan_of(const Dense& x) {
  return {x.data(), static_cast<std::size_t>(x.size())};
}

}  // namespace

void adam_step(Network& net, const Gradients& grads, AdamState& state) {
  const std::size_t count = net.layer_count();
  if (grads.weights.size() != count || grads.biases.size() != count ||
      state.m_weights_.size() != count) {
    throw DimensionError("adam_step: gradient/state layer count does not match the network");
  }
  for (std::size_t i = 0; i < count; ++i) {
    const auto& l = net.layer(i);
    if (grads.weights[i].rows() != l.weights.rows() || grads.weights[i].cols() != l.weights.cols() ||
        grads.biases[i].size() != l.biases.size() ||
        state.m_weights_[i].rows() != l.weights.rows() ||
        state.m_weights_[i].cols() != l.weights.cols()) {
      throw DimensionError("adam_step: shape mismatch in layer " + std::to_string(i));
    }
    if (!grads.weights[i].allFinite() || !grads.biases[i].allFinite()) {
      throw NumericError("adam_step: non-finite gradient in layer " + std::to_string(i));
    }
  }
  ++state.step_;
  for (std::size_t i = 0; i < count; ++i) {
    auto& l = net.mutable_layer(i);
    adam_update(span_of(l.weights), cspan_of(grads.weights[i]), span_of(state.m_weights_[i]),
                span_of(state.v_weights_[i]), state.step_, state.hyper_);
    adam_update(span_of(l.biases), cspan_of(grads.biases[i]), span_of(state.m_biases_[i]),
                span_of(state.v_biases_[i]), state.step_, state.hyper_);
  }
}

Matrix gather_rows(const Matrix& source, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), source.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = source.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

double run_epoch(Network& net, const Matrix& inputs, const BatchObjective& objective,
                 GradientWrt wrt, AdamState& adam, RngStream& rng, std::size_t batch_size) {
  const auto n = static_cast<std::size_t>(inputs.rows());
  if (n == 0) throw InvalidArgument("run_epoch on an empty training set");
  if (batch_size == 0) throw InvalidArgument("batch size must be positive");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);

  double total = 0.0;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t stop = std::min(n, start + batch_size);
    const std::span<const std::size_t> rows(order.data() + start, stop - start);
    const Matrix batch = gather_rows(inputs, rows);
    const ForwardPass pass = forward(net, batch, rng);
    LossResult loss = objective(pass, rows);
    if (!std::isfinite(loss.loss)) {
      throw NumericError("non-finite training loss at batch starting at position " +
                         std::to_string(start));
    }
    const Gradients grads = backward(net, pass, loss.grad, wrt);
    adam_step(net, grads, adam);
    total += loss.loss * static_cast<double>(rows.size());
  }
  return total / static_cast<double>(n);
}

}  // namespace wifiloc
