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

#include "wifiloc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <thread>

#include "wifiloc/error.hpp"

namespace wifiloc {

ReferenceSet::ReferenceSet(Matrix vectors, std::vector<std::size_t> labels)
    : vectors_(std::move(vectors)), labels_(std::move(labels)) {
  if (static_cast<std::size_t>(vectors_.rows()) != labels_.size()) {
    throw DimensionError("reference set: vector and label counts differ");
  }
  if (labels_.empty()) throw InvalidArgument("reference set is empty");
}

namespace {

struct Neighbor {
  double distance;
  std::size_t index;
};

void check_query(const ReferenceSet& ref, std::span<const double> query) {
  if (query.size() != ref.dim()) {
    throw DimensionError("query has " + std::to_string(query.size()) + " entries, references have " +
                         std::to_string(ref.dim()));
  }
}

double squared_distance(const ReferenceSet& ref, std::size_t i, std::span<const double> query) {
  const auto q = Eigen::Map<const Eigen::RowVectorXd>(query.data(),
                                                      static_cast<Eigen::Index>(query.size()));
  return (ref.vectors().row(static_cast<Eigen::Index>(i)) - q).squaredNorm();
}

// The k closest references ordered by (distance, index).
std::vector<Neighbor> k_nearest(const ReferenceSet& ref, std::span<const double> query,
                                std::size_t k) {
  check_query(ref, query);
  if (k == 0) throw InvalidArgument("k must be at least 1");
  if (k > ref.size()) {
    throw InvalidArgument("k = " + std::to_string(k) + " exceeds the " +
                          std::to_string(ref.size()) + " references");
  }
  std::vector<Neighbor> all(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) all[i] = {squared_distance(ref, i, query), i};
  const auto closer = [](const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), closer);
  all.resize(k);
  for (auto& n : all) n.distance = std::sqrt(n.distance);
  return all;
}

struct Tally {
  double score = 0.0;
  double distance_sum = 0.0;
};

std::size_t vote(const ReferenceSet& ref, const std::vector<Neighbor>& neighbors, bool weighted) {
  std::map<std::size_t, Tally> tallies;
  for (const auto& n : neighbors) {
    auto& t = tallies[ref.labels()[n.index]];
    t.score += weighted ? 1.0 / (n.distance + kWknnEpsilon) : 1.0;
    t.distance_sum += n.distance;
  }
  // Map iteration is by ascending class, so strict comparisons keep the
  // lowest class index on a full tie.
  auto best = tallies.begin();
  for (auto it = std::next(tallies.begin()); it != tallies.end(); ++it) {
    const auto& [score, dist] = it->second;
    if (score > best->second.score ||
        (score == best->second.score && dist < best->second.distance_sum)) {
      best = it;
    }
  }
  return best->first;
}

}  // namespace

std::size_t nearest_scan(const ReferenceSet& ref, std::span<const double> query) {
  check_query(ref, query);
  std::size_t best = 0;
  double best_distance = squared_distance(ref, 0, query);
  for (std::size_t i = 1; i < ref.size(); ++i) {
    const double d = squared_distance(ref, i, query);
    if (d < best_distance) {
      best_distance = d;
      best = i;
    }
  }
  return ref.labels()[best];
}

std::size_t knn_predict(const ReferenceSet& ref, std::span<const double> query, std::size_t k) {
  return vote(ref, k_nearest(ref, query, k), false);
}

std::size_t wknn_predict(const ReferenceSet& ref, std::span<const double> query, std::size_t k) {
  return vote(ref, k_nearest(ref, query, k), true);
}

std::vector<std::size_t> predict_all(const ReferenceSet& ref, const Matrix& queries,
                                     BaselineMethod method, std::size_t k, std::size_t threads) {
  if (static_cast<std::size_t>(queries.cols()) != ref.dim()) {
    throw DimensionError("query matrix width does not match the reference set");
  }
  const auto n = static_cast<std::size_t>(queries.rows());
  std::vector<std::size_t> out(n);
  if (method != BaselineMethod::kNearest && (k == 0 || k > ref.size())) {
    throw InvalidArgument("k must lie in [1, " + std::to_string(ref.size()) + "]");
  }
  const auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t q = begin; q < end; ++q) {
      const std::span<const double> row(queries.row(static_cast<Eigen::Index>(q)).data(),
                                        static_cast<std::size_t>(queries.cols()));
      switch (method) {
        case BaselineMethod::kNearest: out[q] = nearest_scan(ref, row); break;
        case BaselineMethod::kKnn: out[q] = knn_predict(ref, row, k); break;
        case BaselineMethod::kWknn: out[q] = wknn_predict(ref, row, k); break;
      }
    }
  };
  std::size_t workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = std::min(workers, std::max<std::size_t>(1, n));
  if (workers <= 1) {
    run(0, n);
    return out;
  }
  std::vector<std::thread> pool;
  const std::size_t per = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = std::min(n, w * per);
    const std::size_t end = std::min(n, begin + per);
    pool.emplace_back(run, begin, end);
  }
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace wifiloc
