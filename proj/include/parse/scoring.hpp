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

#include <span>
#include <vector>

#include "parse/predicates.hpp"

namespace parse {

struct LossConfig {
  double sparse = 1e-4;
  double bn = 0.1;
  double conc = 0.1;
  double ang = 1e-3;
};

// Row-wise sparsemax of the classes x relations log-weight matrix.
template <typename Real>
std::vector<Real> class_weights(std::span<const Real> lambda, int classes, std::size_t relations);

// s_c = sum_m W[c, m] a[m].
template <typename Real>
std::vector<Real> class_scores(std::span<const Real> weights, int classes,
                               std::span<const Real> activations);

// -log softmax(logits)_label; writes d/d logits scaled by `scale` when grad is non-empty.
template <typename Real>
Real cross_entropy(std::span<const Real> logits, int label, std::span<Real> grad = {},
                   Real scale = Real(1));

// Mean absolute value of lambda; accumulates scale * subgradient into grad.
template <typename Real>
Real sparsity_penalty(std::span<const Real> lambda, std::span<Real> grad = {},
                      Real scale = Real(1));

// Logit scale omega = softplus(raw).
template <typename Real>
Real omega_from_raw(Real raw);
template <typename Real>
Real omega_raw_init();

template <typename Real>
struct LossBreakdown {
  Real ce = 0;
  Real sparse = 0;
  Real diversity = 0;
  Real concentration = 0;
  Real angle = 0;
  Real total = 0;
};

// Training objective from already-computed forward quantities:
//   CE (batch mean) + l_sparse mean|Lambda| + l_bn (L_div + l_conc L_conc) + l_ang L_ang
// `probs` holds one K x cells block of normalized heatmaps per sample. Pass an
// empty `lambda` or null `vocab` to drop those terms (No-Relations head).
template <typename Real>
LossBreakdown<Real> total_loss(std::span<const std::vector<Real>> logits,
                               std::span<const int> labels, std::span<const Real> lambda,
                               std::span<const std::vector<Real>> probs, int primitives,
                               std::size_t cells, const PredicateVocabulary<Real>* vocab,
                               const LossConfig& config);

}  // namespace parse
