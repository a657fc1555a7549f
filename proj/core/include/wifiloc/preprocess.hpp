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

#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "wifiloc/dataset.hpp"
#include "wifiloc/matrix.hpp"

namespace wifiloc {

/// Numeric stand-in for an unobserved AP.
enum class MissingPolicy { kAs100, kAsMinus110 };

enum class ScalingMode { kJoint, kIndependent };

/// Whether substituted sentinel entries take part in the fitted statistics.
enum class SentinelStats { kInclude, kExclude };

double sentinel_value(MissingPolicy policy);

std::string_view to_string(MissingPolicy policy);
std::string_view to_string(ScalingMode mode);
std::string_view to_string(SentinelStats stats);
MissingPolicy parse_missing_policy(std::string_view text);
ScalingMode parse_scaling_mode(std::string_view text);
SentinelStats parse_sentinel_stats(std::string_view text);

/// Replaces every kMissing entry with the policy's sentinel value.
std::vector<double> substitute_missing(std::span<const double> rss, MissingPolicy policy);

/// Scans after missing-value substitution. This is the only input the scaler
/// accepts, so statistics can never be fitted on raw sentinel-bearing data.
class SignalMatrix {
 public:
  /// One row per record.
  static SignalMatrix from_dataset(const Dataset& ds, MissingPolicy policy);

  /// `raw` may contain kMissing entries.
  static SignalMatrix from_raw(const Matrix& raw, MissingPolicy policy);

  const Matrix& values() const noexcept { return values_; }
  /// 1 where the original entry was missing.
  const Eigen::Matrix<unsigned char, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& missing()
      const noexcept {
    return missing_;
  }
  MissingPolicy policy() const noexcept { return policy_; }
  Eigen::Index rows() const noexcept { return values_.rows(); }
  Eigen::Index cols() const noexcept { return values_.cols(); }

 private:
  SignalMatrix(Matrix values,
               Eigen::Matrix<unsigned char, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> missing,
               MissingPolicy policy);

  Matrix values_;
  Eigen::Matrix<unsigned char, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> missing_;
  MissingPolicy policy_;
};

/// Fitted standardization. JOINT holds a single mean/std, INDEPENDENT one
/// per AP column. Every std is strictly positive.
struct ScalerParams {
  MissingPolicy policy = MissingPolicy::kAsMinus110;
  ScalingMode mode = ScalingMode::kJoint;
  SentinelStats sentinel_stats = SentinelStats::kInclude;
  std::size_t width = 0;
  Vector means;
  Vector stds;

  friend bool operator==(const ScalerParams& a, const ScalerParams& b);
};

/// Population (1/n) statistics. Zero-variance columns get std 1, so they map
/// to a constant 0. Requires at least two rows.
ScalerParams fit_scaler(const SignalMatrix& train, ScalingMode mode,
                        SentinelStats sentinel_stats = SentinelStats::kInclude);

std::vector<double> transform(const ScalerParams& scaler, std::span<const double> substituted);
Matrix transform(const ScalerParams& scaler, const SignalMatrix& signals);

/// Raw scans (kMissing allowed) straight to model input.
Matrix preprocess(const ScalerParams& scaler, const Dataset& ds);

/// Plain-text key/value document; doubles are written with round-trip precision.
void write_scaler(const ScalerParams& scaler, std::ostream& out);
ScalerParams read_scaler(std::istream& in);

}  // namespace wifiloc
