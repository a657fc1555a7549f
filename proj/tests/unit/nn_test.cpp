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

#include <cmath>
#include <sstream>
#include <string>

#include "gradcheck.hpp"
#include "oracles.hpp"
#include "wifiloc/error.hpp"
#include "wifiloc/nn.hpp"

namespace wifiloc {
namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, RngStream& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

DenseLayer identity_layer(std::size_t n, Activation act = Activation::kLinear) {
  DenseLayer l;
  l.weights = Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  l.biases = Vector::Zero(static_cast<Eigen::Index>(n));
  l.activation = act;
  return l;
}

Network random_net(const std::vector<std::size_t>& widths, Activation hidden, Activation out, RngStream& rng) {
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    auto l = make_dense_layer(widths[i], widths[i + 1], i + 2 == widths.size() ? out : hidden, rng);
    for (Eigen::Index j = 0; j < l.biases.size(); ++j) l.biases[j] = 0.1 * rng.normal();
    layers.push_back(std::move(l));
  }
  return Network(std::move(layers));
}

TEST(Forward, IdentityLayerCopiesInput) {
  RngStream rng(1);
  const Network net({identity_layer(4)});
  const Matrix x = random_matrix(3, 4, rng);
  EXPECT_EQ(forward(net, x).output(), x);
  EXPECT_EQ(predict(net, x), x);
}

TEST(Forward, ReluOfNegativeIsZero) {
  const Network net({identity_layer(3, Activation::kRelu)});
  const Matrix x = -Matrix::Ones(2, 3);
  EXPECT_EQ(forward(net, x).output(), Matrix::Zero(2, 3));
}

TEST(Forward, DimensionAndNonFiniteErrors) {
  const Network net({identity_layer(3)});
  EXPECT_THROW(forward(net, Matrix::Zero(1, 4)), DimensionError);
  Matrix bad = Matrix::Zero(1, 3);
  bad(0, 1) = std::numeric_limits<double>::infinity();
  try {
    forward(net, bad);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 0"), std::string::npos);
  }
}

TEST(Forward, InvertedDropoutPreservesExpectation) {
  Network net({identity_layer(50), identity_layer(50)}, {0.5});
  RngStream rng(42);
  Matrix x(1, 50);
  for (Eigen::Index i = 0; i < 50; ++i) x(0, i) = 1.0 + 0.1 * static_cast<double>(i);
  Matrix sum = Matrix::Zero(1, 50);
  const int draws = 10000;
  for (int d = 0; d < draws; ++d) {
    const auto pass = forward(net, x, rng);
    for (Eigen::Index i = 0; i < 50; ++i) {
      const double v = pass.post[1](0, i);
      ASSERT_TRUE(v == 0.0 || v == 2.0 * x(0, i));
    }
    sum += pass.output();
  }
  // Each entry is x * 2 * Bernoulli(0.5): sd of the mean is x / 100.
  for (Eigen::Index i = 0; i < 50; ++i) EXPECT_NEAR(sum(0, i) / draws, x(0, i), 5.0 * x(0, i) / 100.0);
}

TEST(Forward, RateZeroTrainMatchesInferWithoutDraws) {
  RngStream init(3);
  const Network net = random_net({5, 4, 3}, Activation::kRelu, Activation::kSoftmax, init);
  const Matrix x = random_matrix(6, 5, init);
  RngStream rng(9), untouched(9);
  const auto train = forward(net, x, rng);
  const auto infer = forward(net, x);
  EXPECT_EQ(train.output(), infer.output());
  EXPECT_EQ(rng.next_u64(), untouched.next_u64());
}

TEST(Forward, ChainEqualsComposition) {
  RngStream rng(4);
  const Network net = random_net({6, 5, 4, 3}, Activation::kTanh, Activation::kSoftmax, rng);
  const Matrix x = random_matrix(7, 6, rng);
  Matrix a = x;
  for (std::size_t i = 0; i < net.layer_count(); ++i) a = forward(net.slice(i, i + 1), a).output();
  EXPECT_EQ(a, forward(net, x).output());
  const auto ref = oracle::forward(net, oracle::to_rows(x));
  for (Eigen::Index r = 0; r < a.rows(); ++r)
    for (Eigen::Index c = 0; c < a.cols(); ++c) EXPECT_NEAR(a(r, c), ref[r][c], 1e-12);
}

TEST(Network, RejectsBadStructure) {
  RngStream rng(1);
  auto a = make_dense_layer(3, 4, Activation::kSoftmax, rng);
  auto b = make_dense_layer(4, 2, Activation::kLinear, rng);
  EXPECT_THROW(Network({a, b}), InvalidArgument);
  auto c = make_dense_layer(5, 2, Activation::kLinear, rng);
  EXPECT_THROW(Network({make_dense_layer(3, 4, Activation::kRelu, rng), c}), DimensionError);
  EXPECT_THROW(Network({make_dense_layer(3, 4, Activation::kRelu, rng), b}, {1.0}), InvalidArgument);
}

TEST(Softmax, RowsSumToOneAndStayInRange) {
  RngStream rng(8);
  // Large common offset: nothing underflows, every entry strictly inside (0, 1).
  Matrix shifted = random_matrix(20, 13, rng);
  shifted.array() += 1e4;
  // Spread of 1e4 between entries: exp underflows, so entries may reach 0 exactly.
  Matrix wide = random_matrix(20, 13, rng, 1e4);
  for (const Matrix* logits : std::vector<const Matrix*>{&shifted, &wide}) {
    const Matrix p = softmax(*logits);
    ASSERT_TRUE(p.allFinite());
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      EXPECT_NEAR(p.row(r).sum(), 1.0, 1e-9);
      for (Eigen::Index c = 0; c < p.cols(); ++c) {
        EXPECT_GE(p(r, c), 0.0);
        EXPECT_LE(p(r, c), 1.0);
        if (logits == &shifted) {
          EXPECT_GT(p(r, c), 0.0);
          EXPECT_LT(p(r, c), 1.0);
        }
      }
    }
  }
}

TEST(CrossEntropy, UniformAndSaturated) {
  const std::vector<std::size_t> labels{3, 12};
  EXPECT_NEAR(softmax_cross_entropy(Matrix::Zero(2, 13), labels).loss, std::log(13.0), 1e-15);
  EXPECT_NEAR(std::log(13.0), 2.5649, 5e-5);
  Matrix sat = Matrix::Zero(2, 13);
  sat(0, 3) = 1000.0;
  sat(1, 12) = 1000.0;
  EXPECT_NEAR(softmax_cross_entropy(sat, labels).loss, 0.0, 1e-12);
  EXPECT_THROW(softmax_cross_entropy(Matrix::Zero(1, 3), std::vector<std::size_t>{3}), InvalidArgument);
}

TEST(CrossEntropy, GradientMatchesFiniteDifferences) {
  RngStream rng(12);
  const Matrix logits = random_matrix(3, 4, rng);
  const std::vector<std::size_t> labels{0, 3, 1};
  const Matrix g = softmax_cross_entropy(logits, labels).grad;
  const double h = 1e-5;
  for (Eigen::Index r = 0; r < 3; ++r) {
    for (Eigen::Index c = 0; c < 4; ++c) {
      auto up = oracle::to_rows(logits), down = up;
      up[r][c] += h;
      down[r][c] -= h;
      const double fd = (oracle::cross_entropy_logits(up, labels) - oracle::cross_entropy_logits(down, labels)) / (2 * h);
      EXPECT_LT(oracle::relative_error(g(r, c), fd), 1e-6) << r << "," << c;
    }
  }
}

TEST(Mse, ExamplesAndFiniteDifferences) {
  RngStream rng(13);
  const Matrix t = random_matrix(2, 2, rng);
  const auto same = mse_loss(t, t);
  EXPECT_EQ(same.loss, 0.0);
  EXPECT_EQ(same.grad, Matrix::Zero(2, 2));
  EXPECT_DOUBLE_EQ(mse_loss(t + Matrix::Ones(2, 2), t).loss, 1.0);
  EXPECT_THROW(mse_loss(Matrix::Zero(2, 2), Matrix::Zero(2, 3)), DimensionError);

  const Matrix a = random_matrix(3, 5, rng), b = random_matrix(3, 5, rng);
  const Matrix g = mse_loss(a, b).grad;
  const double h = 1e-5;
  for (Eigen::Index r = 0; r < 3; ++r) {
    for (Eigen::Index c = 0; c < 5; ++c) {
      auto up = oracle::to_rows(a), down = up;
      up[r][c] += h;
      down[r][c] -= h;
      const auto tb = oracle::to_rows(b);
      const double fd = (oracle::mean_squared(up, tb) - oracle::mean_squared(down, tb)) / (2 * h);
      EXPECT_LT(oracle::relative_error(g(r, c), fd), 1e-6);
    }
  }
}

TEST(Backward, ZeroUpstreamGivesZeroGradients) {
  RngStream rng(2);
  const Network net = random_net({4, 3, 2}, Activation::kTanh, Activation::kLinear, rng);
  const auto pass = forward(net, random_matrix(5, 4, rng));
  const auto g = backward(net, pass, Matrix::Zero(5, 2));
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_TRUE(g.weights[i].isZero(0.0));
    EXPECT_TRUE(g.biases[i].isZero(0.0));
  }
}

TEST(Backward, TwoLayerTanhProbes) {
  RngStream rng(21);
  const Network net = random_net({3, 4, 2}, Activation::kTanh, Activation::kTanh, rng);
  const Matrix x = random_matrix(4, 3, rng), y = random_matrix(4, 2, rng);
  const auto pass = forward(net, x);
  const auto g = backward(net, pass, mse_loss(pass.output(), y).grad);
  const auto params = oracle::all_params(net);
  const auto objective = [&](const Network& n, std::vector<double>*) {
    return oracle::mean_squared(oracle::forward(n, oracle::to_rows(x)), oracle::to_rows(y));
  };
  for (int probe = 0; probe < 5; ++probe) {
    const auto& p = params[rng.below(params.size())];
    const auto fd = oracle::central_difference(net, p, 1e-5, objective);
    EXPECT_LT(oracle::relative_error(oracle::grad_of(g, p), fd.numeric), 1e-4);
  }
}

TEST(Backward, SmallNetworksBothLosses) {
  RngStream rng(77);
  for (auto hidden : {Activation::kRelu, Activation::kTanh, Activation::kLinear}) {
    for (auto loss : {oracle::Loss::kMse, oracle::Loss::kCrossEntropy}) {
      for (int trial = 0; trial < 3; ++trial) {
        const std::vector<std::size_t> widths{4, 6, 5, 3};
        const auto out = loss == oracle::Loss::kMse ? Activation::kLinear : Activation::kSoftmax;
        const Network net = random_net(widths, hidden, out, rng);
        const Matrix x = random_matrix(5, 4, rng), y = random_matrix(5, 3, rng);
        std::vector<std::size_t> labels(5);
        for (auto& l : labels) l = rng.below(3);
        const auto r = oracle::check_gradients(net, x, y, labels, loss);
        EXPECT_LT(r.worst, 1e-4);
        EXPECT_GT(r.probed, 0u);
      }
    }
  }
}

TEST(Backward, DuplicatedSampleDoublesContribution) {
  RngStream rng(5);
  const Network net = random_net({3, 4, 2}, Activation::kTanh, Activation::kLinear, rng);
  const Matrix x = random_matrix(1, 3, rng), up = random_matrix(1, 2, rng);
  Matrix x2(2, 3), up2(2, 2);
  x2 << x, x;
  up2 << up, up;
  const auto g1 = backward(net, forward(net, x), up);
  const auto g2 = backward(net, forward(net, x2), up2);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_TRUE(g2.weights[i].isApprox(2.0 * g1.weights[i], 1e-14));
    EXPECT_TRUE(g2.biases[i].isApprox(2.0 * g1.biases[i], 1e-14));
  }
}

TEST(Backward, RejectsStaleActivations) {
  RngStream rng(6);
  Network net = random_net({3, 2}, Activation::kLinear, Activation::kLinear, rng);
  const auto pass = forward(net, random_matrix(2, 3, rng));
  AdamState adam(net, {});
  const auto g = backward(net, pass, Matrix::Ones(2, 2));
  adam_step(net, g, adam);
  EXPECT_THROW(backward(net, pass, Matrix::Ones(2, 2)), InvalidArgument);
  const Network other = random_net({3, 4, 2}, Activation::kRelu, Activation::kLinear, rng);
  EXPECT_THROW(backward(other, pass, Matrix::Ones(2, 2)), InvalidArgument);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> p{1.5, -2.0}, g{0.0, 0.0}, m{0.0, 0.0}, v{0.0, 0.0};
  adam_update(p, g, m, v, 1, {});
  EXPECT_EQ(p, (std::vector<double>{1.5, -2.0}));
}

TEST(Adam, FirstScalarStep) {
  std::vector<double> p{0.0}, g{1.0}, m{0.0}, v{0.0};
  adam_update(p, g, m, v, 1, {});
  EXPECT_NEAR(p[0], -0.001 / (1.0 + 1e-8), 1e-18);
  EXPECT_LT(p[0], -0.000999999);
}

// Ten-line scalar Adam written from the textbook update.
double reference_adam(const std::vector<double>& grads) {
  double theta = 0, m = 0, v = 0;
  const double a = 0.001, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    m = b1 * m + (1 - b1) * grads[t - 1];
    v = b2 * v + (1 - b2) * grads[t - 1] * grads[t - 1];
    theta -= a * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
  }
  return theta;
}

TEST(Adam, MomentumCarriesThroughZeroSteps) {
  std::vector<double> p{0.0}, m{0.0}, v{0.0};
  const std::vector<double> grads{0.7, 0.0, 0.0};
  double after_first = 0.0;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    std::vector<double> g{grads[t - 1]};
    adam_update(p, g, m, v, t, {});
    if (t == 1) after_first = p[0];
  }
  EXPECT_LT(p[0], after_first);
  EXPECT_NEAR(p[0], reference_adam(grads), 1e-15);
}

TEST(Adam, StepCountAndNonFiniteGradient) {
  RngStream rng(7);
  Network net = random_net({2, 2}, Activation::kLinear, Activation::kLinear, rng);
  AdamState adam(net, {});
  EXPECT_EQ(adam.step_count(), 0u);
  auto g = backward(net, forward(net, Matrix::Ones(1, 2)), Matrix::Ones(1, 2));
  adam_step(net, g, adam);
  EXPECT_EQ(adam.step_count(), 1u);
  const Network before = net;
  g.weights[0](0, 0) = std::nan("");
  EXPECT_THROW(adam_step(net, g, adam), NumericError);
  EXPECT_EQ(adam.step_count(), 1u);
  EXPECT_TRUE(net == before);
}

TEST(Training, SameSeedSameParameters) {
  auto run = [] {
    RngStream rng(31);
    Network net = random_net({4, 8, 3}, Activation::kRelu, Activation::kSoftmax, rng);
    net.set_dropout_rate(0, 0.2);
    Matrix x = random_matrix(40, 4, rng);
    std::vector<std::size_t> labels(40);
    for (auto& l : labels) l = rng.below(3);
    AdamState adam(net, {});
    for (int epoch = 0; epoch < 5; ++epoch) {
      run_epoch(
          net, x,
          [&](const ForwardPass& pass, std::span<const std::size_t> rows) {
            std::vector<std::size_t> batch_labels;
            for (auto r : rows) batch_labels.push_back(labels[r]);
            return softmax_cross_entropy(pass.logits(), batch_labels);
          },
          GradientWrt::kPreActivation, adam, rng, 8);
    }
    return net;
  };
  const Network a = run(), b = run();
  EXPECT_TRUE(a == b);
}

TEST(Container, RoundTripIsBitExact) {
  RngStream rng(10);
  Network net = random_net({5, 4, 3, 2}, Activation::kTanh, Activation::kSoftmax, rng);
  net.set_dropout_rate(1, 0.15);
  std::stringstream buf;
  write_network(net, buf);
  const std::string bytes = buf.str();
  EXPECT_EQ(bytes.substr(0, 8), std::string("WFLNET\0\n", 8));
  const Network back = read_network(buf);
  EXPECT_TRUE(back == net);
  EXPECT_EQ(back.dropout_rates(), net.dropout_rates());
}

TEST(Container, RejectsCorruption) {
  RngStream rng(10);
  const Network net = random_net({3, 2}, Activation::kRelu, Activation::kLinear, rng);
  std::stringstream buf;
  write_network(net, buf);
  const std::string good = buf.str();

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  std::istringstream a(bad_magic);
  EXPECT_THROW(read_network(a), FormatError);

  std::istringstream b(good.substr(0, good.size() - 3));
  EXPECT_THROW(read_network(b), FormatError);

  std::string bad_version = good;
  bad_version[8] = 9;
  std::istringstream c(bad_version);
  EXPECT_THROW(read_network(c), FormatError);
}

}  // namespace
}  // namespace wifiloc
