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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "parse/bottleneck.hpp"

namespace parse {

inline constexpr double kPositiveFloor = 1e-3;
inline constexpr double kEdgeFloor = 1e-6;
inline constexpr double kAcosMargin = 1e-6;
inline constexpr double kAngleDiversityEps = 0.01;

enum class Family : std::uint8_t {
  kPresence = 0,
  kAbove,
  kLeft,
  kHAlign,
  kVAlign,
  kNear,
  kContains,
  kTri,
  kTurn,
  kOrient,
  kEqDist,
};
inline constexpr int kFamilyCount = 11;

int family_arity(Family f);
std::string_view family_name(Family f);
Family family_from_name(std::string_view name);

// Numbers of angle targets per parameterized family.
struct VocabCounts {
  int tri = 3;     // psi_n
  int turn = 1;    // phi_l
  int orient = 4;  // varphi_m
  bool operator==(const VocabCounts&) const = default;
};

// Globally shared predicate shape parameters, held as constrained values.
// Angles are radians.
template <typename Real>
struct PredicateVocabulary {
  Real kappa_above = 5, margin_above = 0;
  Real kappa_left = 5, margin_left = 0;
  Real tau_h = Real(0.2), tau_v = Real(0.2), rho = Real(0.2);
  Real kappa_contains = 5;
  Real tau_d = Real(0.5);
  std::vector<Real> psi, beta;              // tri targets / widths
  std::vector<Real> phi_turn, eta;          // turn targets / widths
  std::vector<Real> phi_orient, gamma;      // orientation targets / widths

  static PredicateVocabulary defaults(const VocabCounts& counts);
  static PredicateVocabulary zeros(const VocabCounts& counts);
  VocabCounts counts() const {
    return {int(psi.size()), int(phi_turn.size()), int(phi_orient.size())};
  }
};

// Positive parameters are stored unconstrained: value = softplus(raw) + 1e-3.
template <typename Real>
Real positive_from_raw(Real raw);
template <typename Real>
Real positive_to_raw(Real value);
// d value / d raw
template <typename Real>
Real positive_raw_slope(Real raw);

// Edge quantities of the ordered chain/pair geometry.
template <typename Real>
struct RelationTrace {
  Real vij_x, vij_y, vjk_x, vjk_y, vik_x, vik_y;
  Real len_ij, len_jk, len_ik;
  Real interior_angle;  // at p_i, between v_ij and v_ik
  Real turn_angle;      // arccos(unit(v_ij) . unit(v_jk))
};

template <typename Real>
RelationTrace<Real> relation_trace(const Descriptor<Real>& zi, const Descriptor<Real>& zj,
                                   const Descriptor<Real>& zk);

// Direct closed-form kernels.
template <typename Real>
Real eval_presence(const Descriptor<Real>& z);

template <typename Real>
Real eval_binary(Family kind, const PredicateVocabulary<Real>& vocab, const Descriptor<Real>& zi,
                 const Descriptor<Real>& zj);

template <typename Real>
Real eval_ternary(Family kind, int instance, const PredicateVocabulary<Real>& vocab,
                  const Descriptor<Real>& zi, const Descriptor<Real>& zj,
                  const Descriptor<Real>& zk);

template <typename Real>
Real eval_quaternary(Family kind, int instance, const PredicateVocabulary<Real>& vocab,
                     const Descriptor<Real>& zi, const Descriptor<Real>& zj,
                     const Descriptor<Real>& zk, const Descriptor<Real>& zl);

// Inverse-distance repulsion between orientation targets in cosine space.
// Accumulates scale * d/d phi_orient into grad_phi_orient when non-empty.
template <typename Real>
Real loss_angle_diversity(const PredicateVocabulary<Real>& vocab,
                          std::span<Real> grad_phi_orient = {}, Real scale = Real(1));

// Pairwise edge cache used by the batched evaluator: for each ordered pair
// (i, j), v = c_j - c_i, n = max(|v|, eps_len), u = v / n, log n.
template <typename Real>
struct EdgeCache {
  int primitives = 0;
  std::vector<Real> vx, vy, raw_norm, norm, ux, uy, log_norm;
  std::size_t at(int i, int j) const { return std::size_t(i) * primitives + j; }
};

template <typename Real>
EdgeCache<Real> build_edges(std::span<const Descriptor<Real>> descriptors);

// Gradient buffers for the edge cache (same indexing).
template <typename Real>
struct EdgeGrad {
  std::vector<Real> ux, uy, log_norm;
  explicit EdgeGrad(int primitives)
      : ux(std::size_t(primitives) * primitives, Real(0)),
        uy(ux.size(), Real(0)),
        log_norm(ux.size(), Real(0)) {}
};

// Pushes edge gradients onto descriptor centers.
template <typename Real>
void edges_backward(const EdgeCache<Real>& edges, const EdgeGrad<Real>& grad,
                    std::span<DescriptorGrad<Real>> grad_desc);

// Clamped arccos and its derivative (0 inside the clamp region).
template <typename Real>
Real clamped_acos(Real x, Real* slope);

}  // namespace parse
