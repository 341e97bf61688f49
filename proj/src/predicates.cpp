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

#include "parse/predicates.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "parse/error.hpp"
#include "parse/mathcore.hpp"

namespace parse {

namespace {
constexpr std::array<std::string_view, kFamilyCount> kFamilyNames = {
    "presence", "above", "left", "h_align", "v_align", "near",
    "contains", "tri",   "turn", "orient",  "eqdist"};

template <typename Real>
Real degrees(double d) {
  return Real(d * std::numbers::pi / 180.0);
}

template <typename Real>
struct Unit {
  Real x, y, len;
};

template <typename Real>
Unit<Real> unit_vector(Real x, Real y) {
  const Real len = std::sqrt(x * x + y * y);
  const Real n = std::max(len, Real(kEdgeFloor));
  return {x / n, y / n, len};
}
}  // namespace

int family_arity(Family f) {
  switch (f) {
    case Family::kPresence:
      return 1;
    case Family::kAbove:
    case Family::kLeft:
    case Family::kHAlign:
    case Family::kVAlign:
    case Family::kNear:
    case Family::kContains:
      return 2;
    case Family::kTri:
    case Family::kTurn:
      return 3;
    case Family::kOrient:
    case Family::kEqDist:
      return 4;
  }
  return 0;
}

std::string_view family_name(Family f) { return kFamilyNames[static_cast<int>(f)]; }

Family family_from_name(std::string_view name) {
  for (int i = 0; i < kFamilyCount; ++i)
    if (kFamilyNames[i] == name) return static_cast<Family>(i);
  throw InvalidArgument("unknown predicate family " + std::string(name));
}

template <typename Real>
PredicateVocabulary<Real> PredicateVocabulary<Real>::defaults(const VocabCounts& counts) {
  PredicateVocabulary v;
  const double tri_init[] = {60.0, 90.0, 120.0};
  const double orient_init[] = {0.0, 60.0, 120.0, 180.0};
  for (int n = 0; n < counts.tri; ++n) {
    // Counts beyond the documented defaults are spread evenly over (0, 180).
    const double deg = counts.tri <= 3 ? tri_init[n] : 180.0 * (n + 1) / (counts.tri + 1);
    v.psi.push_back(degrees<Real>(deg));
    v.beta.push_back(Real(0.3));
  }
  for (int l = 0; l < counts.turn; ++l) {
    const double deg = counts.turn == 1 ? 90.0 : 180.0 * (l + 1) / (counts.turn + 1);
    v.phi_turn.push_back(degrees<Real>(deg));
    v.eta.push_back(Real(0.3));
  }
  for (int m = 0; m < counts.orient; ++m) {
    const double deg =
        counts.orient == 4 ? orient_init[m] : 180.0 * m / std::max(1, counts.orient - 1);
    v.phi_orient.push_back(degrees<Real>(deg));
    v.gamma.push_back(Real(0.3));
  }
  return v;
}

template <typename Real>
PredicateVocabulary<Real> PredicateVocabulary<Real>::zeros(const VocabCounts& counts) {
  PredicateVocabulary v;
  v.kappa_above = v.margin_above = v.kappa_left = v.margin_left = 0;
  v.tau_h = v.tau_v = v.rho = v.kappa_contains = v.tau_d = 0;
  v.psi.assign(counts.tri, Real(0));
  v.beta.assign(counts.tri, Real(0));
  v.phi_turn.assign(counts.turn, Real(0));
  v.eta.assign(counts.turn, Real(0));
  v.phi_orient.assign(counts.orient, Real(0));
  v.gamma.assign(counts.orient, Real(0));
  return v;
}

template <typename Real>
Real positive_from_raw(Real raw) {
  return softplus(raw) + Real(kPositiveFloor);
}

template <typename Real>
Real positive_to_raw(Real value) {
  return softplus_inverse(value - Real(kPositiveFloor));
}

template <typename Real>
Real positive_raw_slope(Real raw) {
  return sigmoid(raw);
}

template <typename Real>
Real clamped_acos(Real x, Real* slope) {
  const Real lo = Real(-1) + Real(kAcosMargin), hi = Real(1) - Real(kAcosMargin);
  if (x <= lo || x >= hi) {
    if (slope) *slope = 0;
    return std::acos(std::clamp(x, lo, hi));
  }
  if (slope) *slope = Real(-1) / std::sqrt(Real(1) - x * x);
  return std::acos(x);
}

template <typename Real>
RelationTrace<Real> relation_trace(const Descriptor<Real>& zi, const Descriptor<Real>& zj,
                                   const Descriptor<Real>& zk) {
  RelationTrace<Real> t;
  t.vij_x = zj.cx - zi.cx;
  t.vij_y = zj.cy - zi.cy;
  t.vjk_x = zk.cx - zj.cx;
  t.vjk_y = zk.cy - zj.cy;
  t.vik_x = zk.cx - zi.cx;
  t.vik_y = zk.cy - zi.cy;
  const Unit<Real> uij = unit_vector(t.vij_x, t.vij_y);
  const Unit<Real> ujk = unit_vector(t.vjk_x, t.vjk_y);
  const Unit<Real> uik = unit_vector(t.vik_x, t.vik_y);
  t.len_ij = uij.len;
  t.len_jk = ujk.len;
  t.len_ik = uik.len;
  t.interior_angle = clamped_acos<Real>(uij.x * uik.x + uij.y * uik.y, nullptr);
  t.turn_angle = clamped_acos<Real>(uij.x * ujk.x + uij.y * ujk.y, nullptr);
  return t;
}

template <typename Real>
Real eval_presence(const Descriptor<Real>& z) {
  return z.presence;
}

template <typename Real>
Real eval_binary(Family kind, const PredicateVocabulary<Real>& v, const Descriptor<Real>& zi,
                 const Descriptor<Real>& zj) {
  switch (kind) {
    case Family::kAbove:
      return sigmoid(v.kappa_above * (zj.cy - zi.cy - v.margin_above));
    case Family::kLeft:
      return sigmoid(v.kappa_left * (zj.cx - zi.cx - v.margin_left));
    case Family::kHAlign: {
      const Real d = zi.cy - zj.cy;
      return std::exp(-d * d / (Real(2) * v.tau_h * v.tau_h));
    }
    case Family::kVAlign: {
      const Real d = zi.cx - zj.cx;
      return std::exp(-d * d / (Real(2) * v.tau_v * v.tau_v));
    }
    case Family::kNear: {
      const Real dx = zi.cx - zj.cx, dy = zi.cy - zj.cy;
      return std::exp(-(dx * dx + dy * dy) / (Real(2) * v.rho * v.rho));
    }
    case Family::kContains: {
      const SoftBox<Real> bi = zi.box(), bj = zj.box();
      const Real m = std::min({bj.x1 - bi.x1, bj.y1 - bi.y1, bi.x2 - bj.x2, bi.y2 - bj.y2});
      return sigmoid(v.kappa_contains * m);
    }
    default:
      throw InvalidArgument("eval_binary: not a binary family");
  }
}

template <typename Real>
Real eval_ternary(Family kind, int instance, const PredicateVocabulary<Real>& v,
                  const Descriptor<Real>& zi, const Descriptor<Real>& zj,
                  const Descriptor<Real>& zk) {
  const RelationTrace<Real> t = relation_trace(zi, zj, zk);
  if (kind == Family::kTri) {
    if (instance < 0 || instance >= int(v.psi.size()))
      throw InvalidArgument("eval_ternary: tri instance out of range");
    return gaussian_bump(t.interior_angle, v.psi[instance], v.beta[instance]);
  }
  if (kind == Family::kTurn) {
    if (instance < 0 || instance >= int(v.phi_turn.size()))
      throw InvalidArgument("eval_ternary: turn instance out of range");
    return gaussian_bump(t.turn_angle, v.phi_turn[instance], v.eta[instance]);
  }
  throw InvalidArgument("eval_ternary: not a ternary family");
}

template <typename Real>
Real eval_quaternary(Family kind, int instance, const PredicateVocabulary<Real>& v,
                     const Descriptor<Real>& zi, const Descriptor<Real>& zj,
                     const Descriptor<Real>& zk, const Descriptor<Real>& zl) {
  const Real ax = zj.cx - zi.cx, ay = zj.cy - zi.cy;
  const Real bx = zl.cx - zk.cx, by = zl.cy - zk.cy;
  if (kind == Family::kOrient) {
    if (instance < 0 || instance >= int(v.phi_orient.size()))
      throw InvalidArgument("eval_quaternary: orient instance out of range");
    const Unit<Real> ua = unit_vector(ax, ay), ub = unit_vector(bx, by);
    const Real e = ua.x * ub.x + ua.y * ub.y - std::cos(v.phi_orient[instance]);
    const Real g = v.gamma[instance];
    return std::exp(-e * e / (Real(2) * g * g));
  }
  if (kind == Family::kEqDist) {
    const Real la = std::max(std::sqrt(ax * ax + ay * ay), Real(kEdgeFloor));
    const Real lb = std::max(std::sqrt(bx * bx + by * by), Real(kEdgeFloor));
    const Real r = std::log(la / lb);
    return std::exp(-r * r / (Real(2) * v.tau_d * v.tau_d));
  }
  throw InvalidArgument("eval_quaternary: not a quaternary family");
}

template <typename Real>
Real loss_angle_diversity(const PredicateVocabulary<Real>& v, std::span<Real> grad, Real scale) {
  const int n = int(v.phi_orient.size());
  if (n < 2) return Real(0);
  const Real pairs = Real(n) * Real(n - 1) / Real(2);
  const Real eps = Real(kAngleDiversityEps);
  Real total = 0;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      const Real d = std::cos(v.phi_orient[a]) - std::cos(v.phi_orient[b]);
      const Real q = d * d + eps;
      total += Real(1) / q;
      if (!grad.empty()) {
        // d(1/q)/dd = -2d/q^2; dd/dphi_a = -sin(phi_a), dd/dphi_b = sin(phi_b).
        const Real dd = -Real(2) * d / (q * q) * scale / pairs;
        grad[a] += dd * -std::sin(v.phi_orient[a]);
        grad[b] += dd * std::sin(v.phi_orient[b]);
      }
    }
  }
  return total / pairs;
}

template <typename Real>
EdgeCache<Real> build_edges(std::span<const Descriptor<Real>> d) {
  EdgeCache<Real> e;
  const int K = int(d.size());
  e.primitives = K;
  const std::size_t n = std::size_t(K) * K;
  e.vx.assign(n, 0);
  e.vy.assign(n, 0);
  e.raw_norm.assign(n, 0);
  e.norm.assign(n, Real(kEdgeFloor));
  e.ux.assign(n, 0);
  e.uy.assign(n, 0);
  e.log_norm.assign(n, std::log(Real(kEdgeFloor)));
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      if (i == j) continue;
      const std::size_t a = e.at(i, j);
      e.vx[a] = d[j].cx - d[i].cx;
      e.vy[a] = d[j].cy - d[i].cy;
      e.raw_norm[a] = std::sqrt(e.vx[a] * e.vx[a] + e.vy[a] * e.vy[a]);
      e.norm[a] = std::max(e.raw_norm[a], Real(kEdgeFloor));
      e.ux[a] = e.vx[a] / e.norm[a];
      e.uy[a] = e.vy[a] / e.norm[a];
      e.log_norm[a] = std::log(e.norm[a]);
    }
  }
  return e;
}

template <typename Real>
void edges_backward(const EdgeCache<Real>& e, const EdgeGrad<Real>& g,
                    std::span<DescriptorGrad<Real>> grad_desc) {
  const int K = e.primitives;
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      if (i == j) continue;
      const std::size_t a = e.at(i, j);
      const Real gux = g.ux[a], guy = g.uy[a], gl = g.log_norm[a];
      if (gux == Real(0) && guy == Real(0) && gl == Real(0)) continue;
      Real gvx, gvy;
      if (e.raw_norm[a] > Real(kEdgeFloor)) {
        const Real n = e.norm[a];
        const Real proj = gux * e.ux[a] + guy * e.uy[a];
        gvx = (gux - proj * e.ux[a]) / n + gl * e.vx[a] / (n * n);
        gvy = (guy - proj * e.uy[a]) / n + gl * e.vy[a] / (n * n);
      } else {
        gvx = gux / Real(kEdgeFloor);
        gvy = guy / Real(kEdgeFloor);
      }
      grad_desc[j].cx += gvx;
      grad_desc[j].cy += gvy;
      grad_desc[i].cx -= gvx;
      grad_desc[i].cy -= gvy;
    }
  }
}

#define PARSE_INSTANTIATE_PREDICATES(Real)                                                      \
  template struct PredicateVocabulary<Real>;                                                    \
  template Real positive_from_raw<Real>(Real);                                                  \
  template Real positive_to_raw<Real>(Real);                                                    \
  template Real positive_raw_slope<Real>(Real);                                                 \
  template Real clamped_acos<Real>(Real, Real*);                                                \
  template RelationTrace<Real> relation_trace<Real>(const Descriptor<Real>&,                    \
                                                    const Descriptor<Real>&,                    \
                                                    const Descriptor<Real>&);                   \
  template Real eval_presence<Real>(const Descriptor<Real>&);                                   \
  template Real eval_binary<Real>(Family, const PredicateVocabulary<Real>&,                     \
                                  const Descriptor<Real>&, const Descriptor<Real>&);            \
  template Real eval_ternary<Real>(Family, int, const PredicateVocabulary<Real>&,               \
                                   const Descriptor<Real>&, const Descriptor<Real>&,            \
                                   const Descriptor<Real>&);                                    \
  template Real eval_quaternary<Real>(Family, int, const PredicateVocabulary<Real>&,            \
                                      const Descriptor<Real>&, const Descriptor<Real>&,         \
                                      const Descriptor<Real>&, const Descriptor<Real>&);        \
  template Real loss_angle_diversity<Real>(const PredicateVocabulary<Real>&, std::span<Real>,   \
                                           Real);                                               \
  template EdgeCache<Real> build_edges<Real>(std::span<const Descriptor<Real>>);                \
  template void edges_backward<Real>(const EdgeCache<Real>&, const EdgeGrad<Real>&,             \
                                     std::span<DescriptorGrad<Real>>);

PARSE_INSTANTIATE_PREDICATES(float)
PARSE_INSTANTIATE_PREDICATES(double)

}  // namespace parse
