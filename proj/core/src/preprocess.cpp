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

#include "wifiloc/preprocess.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "wifiloc/error.hpp"

namespace wifiloc {

namespace {

using Mask = Eigen::Matrix<unsigned char, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// A constant column can leave roundoff-level variance behind when its value
// is not exactly representable as the mean; treat that as zero too.
double clamp_std(double variance, double mean) {
  const double s = std::sqrt(variance);
  return (s > 1e-12 * (1.0 + std::abs(mean)) && std::isfinite(s)) ? s : 1.0;
}

// Mean and population std of the selected entries. With nothing selected the
// statistics fall back to (fallback_mean, 1).
template <class Select>
std::pair<double, double> moments(Select&& each, double fallback_mean) {
  double sum = 0.0;
  std::size_t count = 0;
  each([&](double v) {
    sum += v;
    ++count;
  });
  if (count == 0) return {fallback_mean, 1.0};
  const double mean = sum / static_cast<double>(count);
  double sq = 0.0;
  each([&](double v) { sq += (v - mean) * (v - mean); });
  return {mean, clamp_std(sq / static_cast<double>(count), mean)};
}

}  // namespace

double sentinel_value(MissingPolicy policy) {
  return policy == MissingPolicy::kAs100 ? 100.0 : -110.0;
}

std::string_view to_string(MissingPolicy policy) {
  return policy == MissingPolicy::kAs100 ? "100" : "-110";
}

std::string_view to_string(ScalingMode mode) {
  return mode == ScalingMode::kJoint ? "joint" : "independent";
}

std::string_view to_string(SentinelStats stats) {
  return stats == SentinelStats::kInclude ? "include" : "exclude";
}

MissingPolicy parse_missing_policy(std::string_view text) {
  if (text == "100" || text == "as_100") return MissingPolicy::kAs100;
  if (text == "-110" || text == "as_minus_110") return MissingPolicy::kAsMinus110;
  throw ConfigError("unknown missing policy '" + std::string(text) + "' (use 100 or -110)");
}

ScalingMode parse_scaling_mode(std::string_view text) {
  if (text == "joint") return ScalingMode::kJoint;
  if (text == "independent") return ScalingMode::kIndependent;
  throw ConfigError("unknown scaling mode '" + std::string(text) + "'");
}

SentinelStats parse_sentinel_stats(std::string_view text) {
  if (text == "include") return SentinelStats::kInclude;
  if (text == "exclude") return SentinelStats::kExclude;
  throw ConfigError("unknown sentinel_stats '" + std::string(text) + "'");
}

std::vector<double> substitute_missing(std::span<const double> rss, MissingPolicy policy) {
  const double sentinel = sentinel_value(policy);
  std::vector<double> out(rss.begin(), rss.end());
  for (auto& v : out) {
    if (is_missing(v)) v = sentinel;
  }
  return out;
}

SignalMatrix::SignalMatrix(Matrix values, Mask missing, MissingPolicy policy)
    : values_(std::move(values)), missing_(std::move(missing)), policy_(policy) {}

SignalMatrix SignalMatrix::from_dataset(const Dataset& ds, MissingPolicy policy) {
  const auto rows = static_cast<Eigen::Index>(ds.size());
  const auto cols = static_cast<Eigen::Index>(ds.ap_count());
  const double sentinel = sentinel_value(policy);
  Matrix values(rows, cols);
  Mask missing(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& rss = ds[static_cast<std::size_t>(r)].rss;
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double v = rss[static_cast<std::size_t>(c)];
      const bool m = is_missing(v);
      missing(r, c) = m ? 1 : 0;
      values(r, c) = m ? sentinel : v;
    }
  }
  return SignalMatrix(std::move(values), std::move(missing), policy);
}

SignalMatrix SignalMatrix::from_raw(const Matrix& raw, MissingPolicy policy) {
  const double sentinel = sentinel_value(policy);
  Matrix values = raw;
  Mask missing(raw.rows(), raw.cols());
  for (Eigen::Index r = 0; r < raw.rows(); ++r) {
    for (Eigen::Index c = 0; c < raw.cols(); ++c) {
      const bool m = is_missing(raw(r, c));
      missing(r, c) = m ? 1 : 0;
      if (m) values(r, c) = sentinel;
    }
  }
  return SignalMatrix(std::move(values), std::move(missing), policy);
}

bool operator==(const ScalerParams& a, const ScalerParams& b) {
  return a.policy == b.policy && a.mode == b.mode && a.sentinel_stats == b.sentinel_stats &&
         a.width == b.width && a.means.size() == b.means.size() && a.means == b.means &&
         a.stds.size() == b.stds.size() && a.stds == b.stds;
}

ScalerParams fit_scaler(const SignalMatrix& train, ScalingMode mode, SentinelStats sentinel_stats) {
  if (train.rows() < 2) throw InvalidArgument("fit_scaler needs at least 2 rows");
  const Matrix& x = train.values();
  const auto& missing = train.missing();
  const bool skip_missing = sentinel_stats == SentinelStats::kExclude;
  const double sentinel = sentinel_value(train.policy());

  ScalerParams p;
  p.policy = train.policy();
  p.mode = mode;
  p.sentinel_stats = sentinel_stats;
  p.width = static_cast<std::size_t>(x.cols());

  if (mode == ScalingMode::kJoint) {
    const auto [mean, sd] = moments(
        [&](auto&& f) {
          for (Eigen::Index r = 0; r < x.rows(); ++r) {
            for (Eigen::Index c = 0; c < x.cols(); ++c) {
              if (!(skip_missing && missing(r, c))) f(x(r, c));
            }
          }
        },
        sentinel);
    p.means = Vector::Constant(1, mean);
    p.stds = Vector::Constant(1, sd);
  } else {
    p.means.resize(x.cols());
    p.stds.resize(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const auto [mean, sd] = moments(
          [&](auto&& f) {
            for (Eigen::Index r = 0; r < x.rows(); ++r) {
              if (!(skip_missing && missing(r, c))) f(x(r, c));
            }
          },
          sentinel);
      p.means[c] = mean;
      p.stds[c] = sd;
    }
  }
  return p;
}

std::vector<double> transform(const ScalerParams& scaler, std::span<const double> substituted) {
  if (substituted.size() != scaler.width) {
    throw DimensionError("transform: vector has " + std::to_string(substituted.size()) +
                         " entries, scaler was fitted on " + std::to_string(scaler.width));
  }
  std::vector<double> out(substituted.size());
  const bool joint = scaler.mode == ScalingMode::kJoint;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(joint ? 0 : i);
    out[i] = (substituted[i] - scaler.means[k]) / scaler.stds[k];
  }
  return out;
}

Matrix transform(const ScalerParams& scaler, const SignalMatrix& signals) {
  if (static_cast<std::size_t>(signals.cols()) != scaler.width) {
    throw DimensionError("transform: matrix has " + std::to_string(signals.cols()) +
                         " columns, scaler was fitted on " + std::to_string(scaler.width));
  }
  if (signals.policy() != scaler.policy) {
    throw InvalidArgument("transform: missing-value policy differs from the fitted scaler");
  }
  Matrix out(signals.rows(), signals.cols());
  const Matrix& x = signals.values();
  const bool joint = scaler.mode == ScalingMode::kJoint;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const Eigen::Index k = joint ? 0 : c;
      out(r, c) = (x(r, c) - scaler.means[k]) / scaler.stds[k];
    }
  }
  return out;
}

Matrix preprocess(const ScalerParams& scaler, const Dataset& ds) {
  return transform(scaler, SignalMatrix::from_dataset(ds, scaler.policy));
}

void write_scaler(const ScalerParams& scaler, std::ostream& out) {
  std::ostringstream s;
  s.precision(17);
  s << "format wifiloc-scaler\n"
    << "version 1\n"
    << "policy " << to_string(scaler.policy) << '\n'
    << "mode " << to_string(scaler.mode) << '\n'
    << "sentinel_stats " << to_string(scaler.sentinel_stats) << '\n'
    << "width " << scaler.width << '\n'
    << "count " << scaler.means.size() << '\n'
    << "means";
  for (Eigen::Index i = 0; i < scaler.means.size(); ++i) s << ' ' << scaler.means[i];
  s << "\nstds";
  for (Eigen::Index i = 0; i < scaler.stds.size(); ++i) s << ' ' << scaler.stds[i];
  s << '\n';
  out << s.str();
}

ScalerParams read_scaler(std::istream& in) {
  ScalerParams p;
  std::string line;
  std::size_t count = 0;
  bool have_format = false;
  auto read_values = [&](std::istringstream& ls, Vector& dst, const std::string& key) {
    std::vector<double> values;
    std::string token;
    while (ls >> token) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(token, &used));
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw FormatError("scaler document: bad number '" + token + "' in " + key);
      }
    }
    dst = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    std::string value;
    if (key == "format") {
      ls >> value;
      if (value != "wifiloc-scaler") throw FormatError("not a scaler document");
      have_format = true;
    } else if (key == "version") {
      ls >> value;
      if (value != "1") throw FormatError("unsupported scaler document version " + value);
    } else if (key == "policy") {
      ls >> value;
      p.policy = parse_missing_policy(value);
    } else if (key == "mode") {
      ls >> value;
      p.mode = parse_scaling_mode(value);
    } else if (key == "sentinel_stats") {
      ls >> value;
      p.sentinel_stats = parse_sentinel_stats(value);
    } else if (key == "width") {
      ls >> p.width;
    } else if (key == "count") {
      ls >> count;
    } else if (key == "means") {
      read_values(ls, p.means, key);
    } else if (key == "stds") {
      read_values(ls, p.stds, key);
    } else {
      throw FormatError("scaler document: unknown key '" + key + "'");
    }
  }
  if (!have_format) throw FormatError("scaler document has no format line");
  const std::size_t expected = p.mode == ScalingMode::kJoint ? 1 : p.width;
  if (count != expected || static_cast<std::size_t>(p.means.size()) != expected ||
      static_cast<std::size_t>(p.stds.size()) != expected) {
    throw FormatError("scaler document: statistics shape does not match mode and width");
  }
  for (Eigen::Index i = 0; i < p.stds.size(); ++i) {
    if (!(p.stds[i] > 0.0)) throw FormatError("scaler document: non-positive std");
  }
  return p;
}

}  // namespace wifiloc
