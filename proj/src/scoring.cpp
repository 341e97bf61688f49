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

#include "parse/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "parse/error.hpp"
#include "parse/mathcore.hpp"

namespace parse {

template <typename Real>
std::vector<Real> class_weights(std::span<const Real> lambda, int classes, std::size_t relations) {
  if (lambda.size() != std::size_t(classes) * relations)
    throw InvalidArgument("class_weights: shape mismatch");
  std::vector<Real> w(lambda.size());
  for (int c = 0; c < classes; ++c)
    sparsemax<Real>(lambda.subspan(c * relations, relations),
                    std::span<Real>(w).subspan(c * relations, relations));
  return w;
}

template <typename Real>
std::vector<Real> class_scores(std::span<const Real> weights, int classes,
                               std::span<const Real> activations) {
  const std::size_t M = activations.size();
  if (weights.size() != std::size_t(classes) * M)
    throw InvalidArgument("class_scores: weights are " + std::to_string(weights.size()) +
                          " entries, expected classes x " + std::to_string(M));
  std::vector<Real> s(classes, Real(0));
  for (int c = 0; c < classes; ++c) {
    const Real* row = weights.data() + c * M;
    Real acc = 0;
    for (std::size_t m = 0; m < M; ++m)
      if (row[m] != Real(0)) acc += row[m] * activations[m];
    s[c] = acc;
  }
  return s;
}

template <typename Real>
Real cross_entropy(std::span<const Real> logits, int label, std::span<Real> grad, Real scale) {
  if (label < 0 || std::size_t(label) >= logits.size())
    throw InvalidArgument("cross_entropy: label " + std::to_string(label) + " out of range");
  const Real mx = *std::max_element(logits.begin(), logits.end());
  Real sum = 0;
  for (Real l : logits) sum += std::exp(l - mx);
  const Real lse = mx + std::log(sum);
  if (!grad.empty()) {
    for (std::size_t c = 0; c < logits.size(); ++c) {
      const Real p = std::exp(logits[c] - lse);
      grad[c] += scale * (p - (int(c) == label ? Real(1) : Real(0)));
    }
  }
  return lse - logits[label];
}

template <typename Real>
Real sparsity_penalty(std::span<const Real> lambda, std::span<Real> grad, Real scale) {
  if (lambda.empty()) return Real(0);
  Real sum = 0;
  const Real n = Real(lambda.size());
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    sum += std::abs(lambda[i]);
    if (!grad.empty() && lambda[i] != Real(0))
      grad[i] += scale * (lambda[i] > Real(0) ? Real(1) : Real(-1)) / n;
  }
  return sum / n;
}

template <typename Real>
Real omega_from_raw(Real raw) {
  return softplus(raw);
}

template <typename Real>
Real omega_raw_init() {
  return softplus_inverse(Real(10));
}

template <typename Real>
LossBreakdown<Real> total_loss(std::span<const std::vector<Real>> logits,
                               std::span<const int> labels, std::span<const Real> lambda,
                               std::span<const std::vector<Real>> probs, int primitives,
                               std::size_t cells, const PredicateVocabulary<Real>* vocab,
                               const LossConfig& cfg) {
  if (logits.size() != labels.size() || probs.size() != labels.size() || labels.empty())
    throw InvalidArgument("total_loss: batch size mismatch");
  LossBreakdown<Real> out;
  const Real n = Real(labels.size());
  for (std::size_t b = 0; b < labels.size(); ++b) {
    out.ce += cross_entropy<Real>(logits[b], labels[b]) / n;
    out.diversity += loss_diversity<Real>(probs[b], primitives, cells) / n;
    out.concentration += loss_concentration<Real>(probs[b], primitives, cells) / n;
  }
  out.sparse = sparsity_penalty<Real>(lambda);
  if (vocab) out.angle = loss_angle_diversity<Real>(*vocab);
  out.total = out.ce + Real(cfg.sparse) * out.sparse +
              Real(cfg.bn) * (out.diversity + Real(cfg.conc) * out.concentration) +
              Real(cfg.ang) * out.angle;
  return out;
}

#define PARSE_INSTANTIATE_SCORING(Real)                                                         \
  template std::vector<Real> class_weights<Real>(std::span<const Real>, int, std::size_t);      \
  template std::vector<Real> class_scores<Real>(std::span<const Real>, int,                     \
                                                std::span<const Real>);                         \
  template Real cross_entropy<Real>(std::span<const Real>, int, std::span<Real>, Real);         \
  template Real sparsity_penalty<Real>(std::span<const Real>, std::span<Real>, Real);           \
  template Real omega_from_raw<Real>(Real);                                                     \
  template Real omega_raw_init<Real>();                                                         \
  template LossBreakdown<Real> total_loss<Real>(                                                \
      std::span<const std::vector<Real>>, std::span<const int>, std::span<const Real>,          \
      std::span<const std::vector<Real>>, int, std::size_t, const PredicateVocabulary<Real>*,   \
      const LossConfig&);

PARSE_INSTANTIATE_SCORING(float)
PARSE_INSTANTIATE_SCORING(double)

}  // namespace parse
