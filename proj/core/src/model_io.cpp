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

#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "wifiloc/classifier.hpp"
#include "wifiloc/error.hpp"
#include "wifiloc/experiment.hpp"

namespace wifiloc {

namespace {

constexpr const char* kManifest = "manifest.json";
constexpr const char* kNetworkFile = "network.bin";
constexpr const char* kScalerFile = "scaler.txt";
constexpr const char* kClassesFile = "classes.txt";
constexpr const char* kHistoryFile = "history.tsv";

std::ofstream open_out(const std::filesystem::path& p, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(p, mode | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + p.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& p, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(p, mode);
  if (!in) throw FormatError("cannot read " + p.string());
  return in;
}

}  // namespace

void save_model(const TrainedModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / kNetworkFile, std::ios::binary);
    write_network(model.network, out);
  }
  {
    auto out = open_out(dir / kScalerFile);
    write_scaler(model.scaler, out);
  }
  {
    auto out = open_out(dir / kClassesFile);
    out << "index\tbuilding\tfloor\n";
    for (std::size_t i = 0; i < model.class_map.size(); ++i) {
      const auto& p = model.class_map.pair_at(i);
      out << i << '\t' << p.building << '\t' << p.floor << '\n';
    }
  }
  {
    auto out = open_out(dir / kHistoryFile);
    out << std::setprecision(17) << "epoch\ttrain_loss\tvalidation_accuracy\n";
    for (const auto& e : model.history) {
      out << e.epoch << '\t' << e.train_loss << '\t';
      if (e.validation_accuracy) {
        out << *e.validation_accuracy;
      } else {
        out << "NA";
      }
      out << '\n';
    }
  }
  nlohmann::ordered_json manifest;
  manifest["format"] = "wifiloc-model";
  manifest["version"] = 1;
  manifest["artifact_version"] = artifact_version();
  manifest["input_dim"] = model.network.input_dim();
  manifest["num_classes"] = model.class_map.size();
  std::vector<std::size_t> widths;
  if (!model.network.empty()) widths.push_back(model.network.input_dim());
  for (const auto& l : model.network.layers()) widths.push_back(l.out_dim());
  manifest["layer_widths"] = widths;
  manifest["selected_epoch"] = model.selected_epoch;
  manifest["files"] = {{"network", kNetworkFile},
                       {"scaler", kScalerFile},
                       {"classes", kClassesFile},
                       {"history", kHistoryFile}};
  auto out = open_out(dir / kManifest);
  out << manifest.dump(2) << '\n';
}

TrainedModel load_model(const std::filesystem::path& dir) {
  nlohmann::json manifest;
  try {
    auto in = open_in(dir / kManifest);
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("model manifest is not valid JSON: " + std::string(e.what()));
  }
  if (manifest.value("format", "") != "wifiloc-model" || manifest.value("version", 0) != 1) {
    throw FormatError("unsupported model bundle in " + dir.string());
  }

  TrainedModel model;
  {
    auto in = open_in(dir / kNetworkFile, std::ios::binary);
    model.network = read_network(in);
  }
  {
    auto in = open_in(dir / kScalerFile);
    model.scaler = read_scaler(in);
  }
  {
    auto in = open_in(dir / kClassesFile);
    std::string line;
    std::getline(in, line);
    std::vector<LocationClass> pairs;
    std::size_t index = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::size_t i = 0;
      LocationClass p;
      if (!(ls >> i >> p.building >> p.floor) || i != index) {
        throw FormatError("malformed class listing line: " + line);
      }
      pairs.push_back(p);
      ++index;
    }
    model.class_map = ClassMap(std::move(pairs));
  }
  {
    auto in = open_in(dir / kHistoryFile);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      EpochRecord e;
      std::string loss, acc;
      if (!(ls >> e.epoch >> loss >> acc)) throw FormatError("malformed history line: " + line);
      e.train_loss = std::stod(loss);
      if (acc != "NA") e.validation_accuracy = std::stod(acc);
      model.history.push_back(e);
    }
  }
  model.selected_epoch = manifest.value("selected_epoch", std::size_t{0});
  if (model.network.output_dim() != model.class_map.size()) {
    throw FormatError("model network output width does not match its class listing");
  }
  if (model.network.input_dim() != model.scaler.width) {
    throw FormatError("model network input width does not match its scaler");
  }
  return model;
}

}  // namespace wifiloc
