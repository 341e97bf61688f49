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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "parse/model.hpp"
#include "parse/serialize.hpp"
#include "parse/synthdata.hpp"

namespace parse {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  ModelConfig model = default_model();
  int batch = 32;
  double lr = 1e-3;
  int epochs = 10;
  std::uint64_t seed = 0;
  bool style_mix = true;
  bool deterministic = true;
  bool float64 = false;
  double val_fraction = 0.2;
  LossConfig loss;
  AdamConfig adam;

  static ModelConfig default_model() {
    ModelConfig m;
    m.primitives = 16;
    return m;
  }
  void validate() const;
};

Json to_json(const TrainConfig& c);
TrainConfig train_from_json(const Json& j, TrainConfig base = {});

struct EvalMetrics {
  std::size_t count = 0;
  double accuracy = 0.0;
  double loss = 0.0;  // mean cross-entropy
  std::vector<double> per_class_accuracy;
  std::vector<std::size_t> support;  // nonzero weights per class (relations head)
  double mean_support = 0.0;
};
Json to_json(const EvalMetrics& m);

template <typename Real>
EvalMetrics evaluate(const Model<Real>& model, const Dataset& data,
                     std::span<const std::size_t> indices);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double mean_support = 0.0;
  int mixed_batches = 0;
};
Json to_json(const EpochRecord& r);

struct TrainResult {
  Model<float> model;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Adam on all parameters; keeps the parameters of the epoch with the best
// validation accuracy (earlier epoch on ties). Epoch 0 is the initialization.
TrainResult train(const TrainConfig& config, const Dataset& data, const Split& split,
                  const EpochCallback& on_epoch = {});

// Planar batch of samples as model input.
template <typename Real>
std::vector<Real> gather_images(const Dataset& data, std::span<const std::size_t> indices);

struct LodoRow {
  Domain target = Domain::kSolid;
  int best_epoch = 0;
  double val_accuracy = 0.0;
  EvalMetrics test;
};

struct LodoResult {
  std::vector<LodoRow> rows;
  double mean_accuracy = 0.0;
};
Json to_json(const LodoResult& r);

// One training run per domain as target. `on_model` sees each trained model.
LodoResult lodo(const TrainConfig& config, const Dataset& data,
                const std::function<void(const LodoRow&, const TrainResult&)>& on_model = {},
                const std::function<void(Domain, const EpochRecord&)>& on_epoch = {});

}  // namespace parse
