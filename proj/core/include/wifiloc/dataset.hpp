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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wifiloc {

inline constexpr std::size_t kUjiApCount = 520;
inline constexpr std::size_t kUjiTrainingRows = 19937;
inline constexpr std::size_t kUjiValidationRows = 1111;

/// Raw cell value the UJIIndoorLoc files use for "AP not observed".
inline constexpr double kUjiMissingCell = 100.0;

/// In-memory sentinel for an unobserved AP. Never a valid dBm reading.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double rss) { return rss != rss; }

/// One WiFi scan. `rss` holds dBm values or kMissing.
struct FingerprintRecord {
  std::vector<double> rss;
  double longitude = 0.0;
  double latitude = 0.0;
  int floor = 0;
  int building_id = 0;
  int space_id = 0;
  int relative_position = 0;
  int user_id = 0;
  int phone_id = 0;
  std::int64_t timestamp = 0;
};

enum class DatasetSource { kUjiTraining, kUjiValidation, kDerivedSplit, kSynthetic };

std::string_view to_string(DatasetSource source);

/// Immutable, ordered collection of scans sharing one RSS arity.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<FingerprintRecord> records, DatasetSource source);

  const std::vector<FingerprintRecord>& records() const noexcept { return records_; }
  const FingerprintRecord& operator[](std::size_t i) const { return records_[i]; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  std::size_t ap_count() const noexcept { return ap_count_; }
  DatasetSource source() const noexcept { return source_; }

  /// Records at `indices`, in the given order.
  Dataset subset(const std::vector<std::size_t>& indices, DatasetSource source) const;

  /// Concatenation of `a` then `b`. Arity must agree.
  static Dataset concat(const Dataset& a, const Dataset& b, DatasetSource source);

 private:
  std::vector<FingerprintRecord> records_;
  std::size_t ap_count_ = 0;
  DatasetSource source_ = DatasetSource::kSynthetic;
};

/// A (building, floor) location label.
struct LocationClass {
  int building = 0;
  int floor = 0;

  friend auto operator<=>(const LocationClass&, const LocationClass&) = default;
};

inline LocationClass location_of(const FingerprintRecord& r) { return {r.building_id, r.floor}; }

/// Bijection between the distinct (building, floor) pairs and contiguous
/// class indices, ordered lexicographically by (building, floor).
class ClassMap {
 public:
  ClassMap() = default;

  /// `pairs` must be strictly ascending.
  explicit ClassMap(std::vector<LocationClass> pairs);

  std::size_t size() const noexcept { return pairs_.size(); }
  const LocationClass& pair_at(std::size_t index) const { return pairs_.at(index); }
  std::optional<std::size_t> index_of(LocationClass pair) const;
  const std::vector<LocationClass>& pairs() const noexcept { return pairs_; }

  friend bool operator==(const ClassMap& a, const ClassMap& b) { return a.pairs_ == b.pairs_; }

 private:
  std::vector<LocationClass> pairs_;
  std::map<LocationClass, std::size_t> index_;
};

ClassMap build_class_map(const Dataset& ds);

/// Class index of every record; records whose pair is unknown to `map` throw.
std::vector<std::size_t> class_labels(const Dataset& ds, const ClassMap& map);

/// Reads the UJIIndoorLoc comma-separated format. The header decides how many
/// WAP columns there are (520 for the published files); the nine metadata
/// columns must follow them. Cell value 100 becomes kMissing.
Dataset load_ujiindoorloc(const std::filesystem::path& path,
                          DatasetSource source = DatasetSource::kUjiTraining);
Dataset read_ujiindoorloc(std::istream& in, std::string_view source_name, DatasetSource source);

/// Writes `ds` in the same format load_ujiindoorloc reads.
void write_ujiindoorloc(const Dataset& ds, std::ostream& out);

/// Validation size is floor(n * fraction), at least one record; training gets
/// the rest. Each part keeps the input's record order.
std::pair<Dataset, Dataset> split_train_validation(const Dataset& ds, double validation_fraction,
                                                   std::uint64_t seed, bool stratify = false);

struct SyntheticOptions {
  double missing_fraction = 0.3;
  double noise_sigma = 5.0;
  double center_min = -90.0;
  double center_max = -30.0;
};

/// Class-clustered scans for fixtures and smoke runs. Record i belongs to
/// class i % num_classes; class c maps to building c / 4, floor c % 4.
Dataset generate_synthetic(std::size_t num_records, std::size_t num_aps, std::size_t num_classes,
                           std::uint64_t seed, const SyntheticOptions& options = {});

}  // namespace wifiloc
