/* Copyright 2026 The PARSE Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "parse/mathcore.hpp"
#include "parse/model.hpp"

namespace parse {

struct GradcheckOptions {
  int models = 5;
  double step = 1e-5;
  double tolerance = 1e-4;
  int batch = 3;
  bool style_mix = true;
  bool relations = true;
};

struct GroupReport {
  std::string group;
  GradReport report;
  std::size_t skipped = 0;  // probes straddling a kink
  double max_abs_grad = 0.0;
};

struct ModelGradReport {
  std::uint64_t seed = 0;
  std::vector<GroupReport> groups;
  double max_rel_err = 0.0;
};

struct GradcheckSummary {
  std::vector<ModelGradReport> models;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

// Small float64 model with randomized parameters used for gradient checks.
ModelConfig toy_config(bool relations);
Model<double> toy_model(const ModelConfig& config, std::uint64_t seed);

// Parameter group a tensor belongs to: backbone, bottleneck, temperature,
// vocab.<name>, lambda, omega or head.
std::string parameter_group(const std::string& tensor_name);

// Checks every scalar parameter of `count` random toy models against central
// differences of the full training objective.
GradcheckSummary run_gradcheck(std::uint64_t seed, const GradcheckOptions& options);

}  // namespace parse
