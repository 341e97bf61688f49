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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "parse/backbone.hpp"
#include "parse/bottleneck.hpp"
#include "parse/catalog.hpp"
#include "parse/params.hpp"
#include "parse/predicates.hpp"
#include "parse/scoring.hpp"

namespace parse {

struct ModelConfig {
  BackboneConfig backbone;
  int primitives = 8;
  int classes = 8;
  int projection_kernel = 3;
  // false selects the No-Relations head: a linear classifier over the
  // concatenated descriptors <cx, cy, presence, ex, ey> of all primitives.
  bool relations = true;
  FamilySwitches families;
  VocabCounts counts;
  // Set by thresholded compaction: the head stores the sliced class-weight
  // matrix itself ("structure.weights") instead of Lambda, so rows are not
  // renormalized. Such models are inference-only.
  bool frozen_weights = false;

  void validate() const;
  ConvShape projection() const;
};

// Everything computed for one image on the inference path.
template <typename Real>
struct Inference {
  HeatmapStack<Real> heatmaps;
  Description<Real> description;
  std::vector<Real> activations;  // relations head only
  std::vector<Real> scores;       // s_c (relations head only)
  std::vector<Real> logits;
};

// Full pipeline: backbone -> concept bottleneck -> structural scoring (or the
// linear No-Relations head). All parameters live in one ParamStore.
template <typename Real>
class Model {
 public:
  Model(ModelConfig config, std::shared_ptr<const RelationCatalog> catalog);

  // Fresh model with the documented initialization drawn from `seed`.
  static Model create(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const RelationCatalog& catalog() const { return *catalog_; }
  std::shared_ptr<const RelationCatalog> catalog_ptr() const { return catalog_; }
  ParamStore<Real>& params() { return params_; }
  const ParamStore<Real>& params() const { return params_; }

  PredicateVocabulary<Real> vocabulary() const;
  Real temperature() const;
  Real omega() const;
  // Row-wise sparsemax of Lambda (classes x M); empty for the linear head.
  std::vector<Real> class_weight_matrix() const;

  // Backbone output F for one image (C x H_F x W_F).
  std::vector<Real> features(std::span<const Real> image) const;
  Inference<Real> infer(std::span<const Real> image) const;
  std::vector<Real> logits(std::span<const Real> image) const;
  // Logits for `count` images laid out back to back; weights computed once.
  std::vector<std::vector<Real>> logits_batch(std::span<const Real> images,
                                              std::size_t count) const;

  // Objective over a batch. When `grad` is non-null it is resized to match the
  // parameters and receives d loss / d params. `mix` applies style mixing.
  // `logits_out`, when given, receives the per-sample logits.
  LossBreakdown<Real> loss(std::span<const Real> images, std::span<const int> labels,
                           const LossConfig& loss_config, const StyleMixDraw* mix,
                           ParamStore<Real>* grad,
                           std::vector<std::vector<Real>>* logits_out = nullptr) const;

  std::size_t structural_parameter_count() const;

  // Same parameters in another precision (float -> double is exact).
  template <typename Other>
  Model<Other> cast() const {
    Model<Other> out(config_, catalog_);
    out.params() = params_.template cast<Other>();
    return out;
  }

  // Parameter indices by role.
  struct Slots {
    std::vector<std::size_t> block_weight, block_bias;
    std::size_t proj_weight = 0, proj_bias = 0, temperature_raw = 0;
    std::size_t kappa_above = 0, margin_above = 0, kappa_left = 0, margin_left = 0;
    std::size_t tau_h = 0, tau_v = 0, rho = 0, kappa_contains = 0, tau_d = 0;
    std::size_t psi = 0, beta = 0, phi_turn = 0, eta = 0, phi_orient = 0, gamma = 0;
    std::size_t lambda = 0, omega_raw = 0;
    std::size_t head_weight = 0, head_bias = 0;
  };
  const Slots& slots() const { return slots_; }

 private:
  struct Prepared {
    PredicateVocabulary<Real> vocab;
    Real temperature = 0;
    Real omega = 0;
    std::vector<Real> weights;
  };
  Prepared prepare() const;
  void head_forward(const Prepared& prep, Inference<Real>& out) const;
  Inference<Real> infer_prepared(const Prepared& prep, std::span<const Real> image) const;

  ModelConfig config_;
  std::shared_ptr<const RelationCatalog> catalog_;
  ParamStore<Real> params_;
  Slots slots_;
};

// Descriptor features fed to the No-Relations head, 5 per primitive.
template <typename Real>
std::vector<Real> descriptor_features(std::span<const Descriptor<Real>> descriptors);

// Index of the largest logit, first on ties.
template <typename Real>
int argmax(std::span<const Real> values);

}  // namespace parse
