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

// JSON helpers shared by the experiment sources. Internal to the library.

#include <nlohmann/json.hpp>

#include "wifiloc/classifier.hpp"
#include "wifiloc/experiment.hpp"

namespace wifiloc::detail {

using Json = nlohmann::ordered_json;

Json config_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const Json& j);
Json report_json(const EvalReport& report, const ClassMap& map);
Json history_json(const std::vector<EpochRecord>& history);

}  // namespace wifiloc::detail
