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

#include <array>
#include <bit>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "wifiloc/error.hpp"
#include "wifiloc/nn.hpp"

namespace wifiloc {

namespace {

constexpr std::array<char, 8> kMagic = {'W', 'F', 'L', 'N', 'E', 'T', '\0', '\n'};
constexpr std::uint32_t kFormatVersion = 1;
constexpr std::uint8_t kLittleEndian = 1;
constexpr std::uint8_t kFloat64 = 8;
// Guards against absurd allocations from corrupt headers.
constexpr std::uint32_t kMaxDim = 1u << 24;

// Values are always written little-endian, whatever the host order.
template <class T>
void put(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                  std::conditional_t<sizeof(T) == 2, std::uint16_t,
                                                                     std::uint8_t>>>;
  const U bits = std::bit_cast<U>(value);
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <class T>
T get(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                               std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                  std::conditional_t<sizeof(T) == 2, std::uint16_t,
                                                                     std::uint8_t>>>;
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw FormatError("network container is truncated");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace

void write_network(const Network& net, std::ostream& out) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kFormatVersion);
  put<std::uint8_t>(out, kLittleEndian);
  put<std::uint8_t>(out, kFloat64);
  put<std::uint16_t>(out, 0);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(net.layer_count()));
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const auto& l = net.layer(i);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(l.in_dim()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(l.out_dim()));
    put<std::uint8_t>(out, static_cast<std::uint8_t>(l.activation));
    put<double>(out, i + 1 < net.layer_count() ? net.dropout_rate(i) : 0.0);
    for (Eigen::Index k = 0; k < l.weights.size(); ++k) put<double>(out, l.weights.data()[k]);
    for (Eigen::Index k = 0; k < l.biases.size(); ++k) put<double>(out, l.biases[k]);
  }
  if (!out) throw FormatError("failed writing network container");
}

Network read_network(std::istream& in) {
  std::array<char, kMagic.size()> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw FormatError("not a wifiloc network container");
  const auto version = get<std::uint32_t>(in);
  if (version != kFormatVersion) {
    throw FormatError("unsupported network container version " + std::to_string(version));
  }
  if (get<std::uint8_t>(in) != kLittleEndian) throw FormatError("unsupported byte order marker");
  if (get<std::uint8_t>(in) != kFloat64) throw FormatError("unsupported precision marker");
  (void)get<std::uint16_t>(in);
  const auto count = get<std::uint32_t>(in);
  if (count > 4096) throw FormatError("implausible layer count");

  std::vector<DenseLayer> layers;
  std::vector<double> rates;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto in_dim = get<std::uint32_t>(in);
    const auto out_dim = get<std::uint32_t>(in);
    if (in_dim == 0 || out_dim == 0 || in_dim > kMaxDim || out_dim > kMaxDim) {
      throw FormatError("implausible layer dimensions");
    }
    const auto tag = get<std::uint8_t>(in);
    if (tag > static_cast<std::uint8_t>(Activation::kSoftmax)) {
      throw FormatError("unknown activation tag " + std::to_string(tag));
    }
    const double rate = get<double>(in);
    DenseLayer l;
    l.activation = static_cast<Activation>(tag);
    l.weights.resize(out_dim, in_dim);
    for (Eigen::Index k = 0; k < l.weights.size(); ++k) l.weights.data()[k] = get<double>(in);
    l.biases.resize(out_dim);
    for (Eigen::Index k = 0; k < l.biases.size(); ++k) l.biases[k] = get<double>(in);
    if (i + 1 < count) rates.push_back(rate);
    layers.push_back(std::move(l));
  }
  try {
    return Network(std::move(layers), std::move(rates));
  } catch (const Error& e) {
    throw FormatError(std::string("network container is inconsistent: ") + e.what());
  }
}

}  // namespace wifiloc
