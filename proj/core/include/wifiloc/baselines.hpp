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
#include <span>
#include <vector>

#include "wifiloc/matrix.hpp"

namespace wifiloc {

/// Preprocessed fingerprints with their class indices.
class ReferenceSet {
 public:
  ReferenceSet(Matrix vectors, std::vector<std::size_t> labels);

  const Matrix& vectors() const noexcept { return vectors_; }
  const std::vector<std::size_t>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(vectors_.cols()); }

 private:
  Matrix vectors_;
  std::vector<std::size_t> labels_;
};

inline constexpr double kWknnEpsilon = 1e-6;

/// Label of the closest reference (Euclidean); lowest reference index on ties.
std::size_t nearest_scan(const ReferenceSet& ref, std::span<const double> query);

/// Majority vote over the k nearest. Vote ties go to the smaller summed
/// distance, then the lowest class index.
std::size_t knn_predict(const ReferenceSet& ref, std::span<const double> query, std::size_t k);

/// Vote weighted by 1 / (d + kWknnEpsilon), same tie ladder as knn_predict.
std::size_t wknn_predict(const ReferenceSet& ref, std::span<const double> query, std::size_t k);

enum class BaselineMethod { kNearest, kKnn, kWknn };

/// Predicts every row of `queries`, fanning out over `threads` workers
/// (0 = hardware concurrency). Output does not depend on the worker count.
std::vector<std::size_t> predict_all(const ReferenceSet& ref, const Matrix& queries,
                                     BaselineMethod method, std::size_t k = 1,
                                     std::size_t threads = 0);

}  // namespace wifiloc
