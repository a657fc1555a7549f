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

#include "wifiloc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "wifiloc/error.hpp"
#include "wifiloc/rng.hpp"

namespace wifiloc {

namespace {

constexpr std::size_t kMetadataColumns = 9;
constexpr const char* kMetadataNames[kMetadataColumns] = {
    "LONGITUDE", "LATITUDE", "FLOOR", "BUILDINGID", "SPACEID",
    "RELATIVEPOSITION", "USERID", "PHONEID", "TIMESTAMP"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

std::optional<double> parse_number(std::string_view cell) {
  if (cell.empty()) return std::nullopt;
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

int to_int(double v, std::string_view column, std::size_t row) {
  if (v != std::floor(v)) {
    throw IngestError("row " + std::to_string(row) + ": column " + std::string(column) +
                      " is not an integer");
  }
  return static_cast<int>(v);
}

}  // namespace

std::string_view to_string(DatasetSource source) {
  switch (source) {
    case DatasetSource::kUjiTraining: return "uji_training";
    case DatasetSource::kUjiValidation: return "uji_validation";
    case DatasetSource::kDerivedSplit: return "derived_split";
    case DatasetSource::kSynthetic: return "synthetic";
  }
  return "unknown";
}

Dataset::Dataset(std::vector<FingerprintRecord> records, DatasetSource source)
    : records_(std::move(records)), source_(source) {
  if (!records_.empty()) ap_count_ = records_.front().rss.size();
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (records_[i].rss.size() != ap_count_) {
      throw DimensionError("record " + std::to_string(i) + " has " +
                           std::to_string(records_[i].rss.size()) + " RSS entries, expected " +
                           std::to_string(ap_count_));
    }
  }
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices, DatasetSource source) const {
  std::vector<FingerprintRecord> picked;
  picked.reserve(indices.size());
  for (auto i : indices) picked.push_back(records_.at(i));
  Dataset out(std::move(picked), source);
  if (out.empty()) out.ap_count_ = ap_count_;
  return out;
}

Dataset Dataset::concat(const Dataset& a, const Dataset& b, DatasetSource source) {
  if (!a.empty() && !b.empty() && a.ap_count() != b.ap_count()) {
    throw DimensionError("cannot concatenate datasets with different AP counts");
  }
  std::vector<FingerprintRecord> all = a.records_;
  all.insert(all.end(), b.records_.begin(), b.records_.end());
  return Dataset(std::move(all), source);
}

ClassMap::ClassMap(std::vector<LocationClass> pairs) : pairs_(std::move(pairs)) {
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    if (i > 0 && !(pairs_[i - 1] < pairs_[i])) {
      throw InvalidArgument("class map pairs must be strictly ascending");
    }
    index_.emplace(pairs_[i], i);
  }
}

std::optional<std::size_t> ClassMap::index_of(LocationClass pair) const {
  const auto it = index_.find(pair);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ClassMap build_class_map(const Dataset& ds) {
  if (ds.empty()) throw InvalidArgument("cannot build a class map from an empty dataset");
  std::set<LocationClass> distinct;
  for (const auto& r : ds.records()) distinct.insert(location_of(r));
  return ClassMap(std::vector<LocationClass>(distinct.begin(), distinct.end()));
}

std::vector<std::size_t> class_labels(const Dataset& ds, const ClassMap& map) {
  std::vector<std::size_t> labels;
  labels.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto idx = map.index_of(location_of(ds[i]));
    if (!idx) {
      throw InvalidArgument("record " + std::to_string(i) + " has (building " +
                            std::to_string(ds[i].building_id) + ", floor " +
                            std::to_string(ds[i].floor) + ") which is not in the class map");
    }
    labels.push_back(*idx);
  }
  return labels;
}

Dataset load_ujiindoorloc(const std::filesystem::path& path, DatasetSource source) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open dataset file " + path.string());
  return read_ujiindoorloc(in, path.string(), source);
}

Dataset read_ujiindoorloc(std::istream& in, std::string_view source_name, DatasetSource source) {
  const std::string where(source_name);
  std::string line;
  if (!std::getline(in, line)) throw IngestError(where + ": empty file, header row expected");

  const auto header = split_csv(line);
  if (header.size() < kMetadataColumns + 1) {
    throw IngestError(where + ": header has " + std::to_string(header.size()) + " columns");
  }
  const std::size_t ap_count = header.size() - kMetadataColumns;
  for (std::size_t i = 0; i < ap_count; ++i) {
    if (header[i].substr(0, 3) != "WAP") {
      throw IngestError(where + ": header column " + std::to_string(i + 1) + " ('" +
                        std::string(header[i]) + "') is not a WAP column");
    }
  }
  for (std::size_t i = 0; i < kMetadataColumns; ++i) {
    if (header[ap_count + i] != kMetadataNames[i]) {
      throw IngestError(where + ": expected column '" + kMetadataNames[i] + "', found '" +
                        std::string(header[ap_count + i]) + "'");
    }
  }

  std::vector<FingerprintRecord> records;
  std::vector<double> meta(kMetadataColumns);
  std::size_t row = 1;  // header is row 1
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw IngestError(where + ": row " + std::to_string(row) + " has " +
                        std::to_string(cells.size()) + " columns, expected " +
                        std::to_string(header.size()));
    }
    FingerprintRecord rec;
    rec.rss.resize(ap_count);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto v = parse_number(cells[c]);
      if (!v) {
        throw IngestError(where + ": row " + std::to_string(row) + ", column " +
                          std::string(header[c]) + ": non-numeric cell '" +
                          std::string(cells[c]) + "'");
      }
      if (c < ap_count) {
        rec.rss[c] = (*v == kUjiMissingCell) ? kMissing : *v;
      } else {
        meta[c - ap_count] = *v;
      }
    }
    rec.longitude = meta[0];
    rec.latitude = meta[1];
    rec.floor = to_int(meta[2], "FLOOR", row);
    rec.building_id = to_int(meta[3], "BUILDINGID", row);
    rec.space_id = to_int(meta[4], "SPACEID", row);
    rec.relative_position = to_int(meta[5], "RELATIVEPOSITION", row);
    rec.user_id = to_int(meta[6], "USERID", row);
    rec.phone_id = to_int(meta[7], "PHONEID", row);
    rec.timestamp = static_cast<std::int64_t>(meta[8]);
    if (rec.floor < 0 || rec.building_id < 0) {
      throw IngestError(where + ": row " + std::to_string(row) + " has a negative floor or building");
    }
    records.push_back(std::move(rec));
  }
  return Dataset(std::move(records), source);
}

void write_ujiindoorloc(const Dataset& ds, std::ostream& out) {
  const std::size_t aps = ds.ap_count();
  for (std::size_t i = 0; i < aps; ++i) {
    out << "WAP" << std::setw(3) << std::setfill('0') << (i + 1) << ',';
  }
  out << std::setfill(' ');
  for (std::size_t i = 0; i < kMetadataColumns; ++i) {
    out << kMetadataNames[i] << (i + 1 < kMetadataColumns ? "," : "\n");
  }
  const auto old_precision = out.precision(17);
  for (const auto& r : ds.records()) {
    for (double v : r.rss) out << (is_missing(v) ? kUjiMissingCell : v) << ',';
    out << r.longitude << ',' << r.latitude << ',' << r.floor << ',' << r.building_id << ','
        << r.space_id << ',' << r.relative_position << ',' << r.user_id << ',' << r.phone_id << ','
        << r.timestamp << '\n';
  }
  out.precision(old_precision);
}

std::pair<Dataset, Dataset> split_train_validation(const Dataset& ds, double validation_fraction,
                                                   std::uint64_t seed, bool stratify) {
  const std::size_t n = ds.size();
  if (n < 2) throw InvalidArgument("split needs at least 2 records");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw InvalidArgument("validation fraction must lie in (0, 1)");
  }
  const std::size_t n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(static_cast<double>(n) * validation_fraction)));
  if (n_val >= n) throw InvalidArgument("validation fraction leaves no training records");

  RngStream rng(seed);
  std::vector<char> in_val(n, 0);
  if (!stratify) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t i = 0; i < n_val; ++i) in_val[order[i]] = 1;
  } else {
    // Per-class quotas by largest remainder so they add up to n_val.
    std::map<LocationClass, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[location_of(ds[i])].push_back(i);
    struct Quota {
      std::vector<std::size_t>* members;
      std::size_t take;
      double remainder;
    };
    std::vector<Quota> quotas;
    std::size_t assigned = 0;
    for (auto& [cls, members] : groups) {
      const double exact = static_cast<double>(members.size()) * static_cast<double>(n_val) /
                           static_cast<double>(n);
      const auto take = static_cast<std::size_t>(std::floor(exact));
      quotas.push_back({&members, take, exact - static_cast<double>(take)});
      assigned += take;
    }
    std::vector<std::size_t> by_remainder(quotas.size());
    for (std::size_t i = 0; i < quotas.size(); ++i) by_remainder[i] = i;
    std::stable_sort(by_remainder.begin(), by_remainder.end(), [&](std::size_t a, std::size_t b) {
      return quotas[a].remainder > quotas[b].remainder;
    });
    for (std::size_t i = 0; assigned < n_val && i < by_remainder.size(); ++i) {
      auto& q = quotas[by_remainder[i]];
      if (q.take < q.members->size()) {
        ++q.take;
        ++assigned;
      }
    }
    for (auto& q : quotas) {
      rng.shuffle(*q.members);
      for (std::size_t i = 0; i < q.take; ++i) in_val[(*q.members)[i]] = 1;
    }
  }

  std::vector<std::size_t> train_idx, val_idx;
  for (std::size_t i = 0; i < n; ++i) (in_val[i] ? val_idx : train_idx).push_back(i);
  return {ds.subset(train_idx, DatasetSource::kDerivedSplit),
          ds.subset(val_idx, DatasetSource::kDerivedSplit)};
}

Dataset generate_synthetic(std::size_t num_records, std::size_t num_aps, std::size_t num_classes,
                           std::uint64_t seed, const SyntheticOptions& options) {
  if (num_records == 0 || num_aps == 0 || num_classes == 0) {
    throw InvalidArgument("synthetic dataset dimensions must all be at least 1");
  }
  if (num_records < num_classes) {
    throw InvalidArgument("synthetic dataset needs at least one record per class");
  }
  if (!(options.missing_fraction >= 0.0 && options.missing_fraction < 1.0)) {
    throw InvalidArgument("missing fraction must lie in [0, 1)");
  }
  RngStream center_rng(derive_seed(seed, 0));
  std::vector<std::vector<double>> centers(num_classes, std::vector<double>(num_aps));
  for (auto& c : centers) {
    for (auto& v : c) v = center_rng.uniform(options.center_min, options.center_max);
  }

  RngStream rng(derive_seed(seed, 1));
  std::vector<FingerprintRecord> records(num_records);
  for (std::size_t i = 0; i < num_records; ++i) {
    const std::size_t cls = i % num_classes;
    auto& r = records[i];
    r.rss.resize(num_aps);
    for (std::size_t a = 0; a < num_aps; ++a) {
      const bool missing = rng.bernoulli(options.missing_fraction);
      const double noisy = std::round(centers[cls][a] + options.noise_sigma * rng.normal());
      r.rss[a] = missing ? kMissing : std::clamp(noisy, -104.0, 0.0);
    }
    r.building_id = static_cast<int>(cls / 4);
    r.floor = static_cast<int>(cls % 4);
    r.space_id = static_cast<int>(cls);
    r.longitude = 10.0 * static_cast<double>(r.building_id);
    r.latitude = 3.0 * static_cast<double>(r.floor);
    r.timestamp = static_cast<std::int64_t>(i);
  }
  return Dataset(std::move(records), DatasetSource::kSynthetic);
}

}  // namespace wifiloc
