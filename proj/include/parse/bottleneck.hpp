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

#include "parse/layers.hpp"

namespace parse {

inline constexpr double kTemperatureMin = 0.05;
inline constexpr double kExtentVarianceEps = 1e-8;
inline constexpr double kExtentFloor = 1e-3;
inline constexpr double kExtentCeiling = 2.0;
inline constexpr double kConcentrationEps = 0.01;

template <typename Real>
struct SoftBox {
  Real x1, y1, x2, y2;
};

// Per-image, per-primitive descriptor: center in [-1,1]^2, presence in [0,1],
// extent (half-size of the soft box) in [kExtentFloor, kExtentCeiling].
template <typename Real>
struct Descriptor {
  Real cx = 0, cy = 0;
  Real presence = 0;
  Real ex = Real(kExtentFloor), ey = Real(kExtentFloor);

  SoftBox<Real> box() const { return {cx - ex, cy - ey, cx + ex, cy + ey}; }
};

// Same fields, holding d loss / d field.
template <typename Real>
using DescriptorGrad = Descriptor<Real>;

template <typename Real>
inline DescriptorGrad<Real> zero_descriptor_grad() {
  DescriptorGrad<Real> g;
  g.cx = g.cy = g.presence = g.ex = g.ey = Real(0);
  return g;
}

// K raw logit planes of size height x width plus the shared temperature.
template <typename Real>
struct HeatmapStack {
  int primitives = 0;
  int height = 0;
  int width = 0;
  std::vector<Real> logits;
  Real temperature = Real(0.5);

  std::size_t cells() const { return std::size_t(height) * width; }
  std::span<const Real> plane(int k) const {
    return std::span<const Real>(logits).subspan(std::size_t(k) * cells(), cells());
  }
};

// Temperature parameterization: T = T_min + softplus(raw).
template <typename Real>
Real temperature_from_raw(Real raw);
template <typename Real>
Real temperature_raw_init();

// Grid coordinate of cell (h, w): <2w/(W-1) - 1, 2h/(H-1) - 1>.
template <typename Real>
inline Real grid_x(int w, int width) {
  return Real(2) * Real(w) / Real(width - 1) - Real(1);
}
template <typename Real>
inline Real grid_y(int h, int height) {
  return Real(2) * Real(h) / Real(height - 1) - Real(1);
}

// g_cb: one convolution from backbone channels to K heatmap planes.
template <typename Real>
HeatmapStack<Real> project_features(const ConvShape& projection, std::span<const Real> features,
                                    std::span<const Real> weights, std::span<const Real> bias,
                                    Real temperature);

// Spatial softmax of logits / T over one plane.
template <typename Real>
void normalize_heatmap(std::span<const Real> logits, Real temperature, std::span<Real> out);

template <typename Real>
std::pair<Real, Real> soft_coordinates(std::span<const Real> prob, int height, int width);

// sigmoid(max logit); `argmax` receives the first (row-major) maximal cell.
template <typename Real>
Real presence(std::span<const Real> logits, std::size_t* argmax = nullptr);

template <typename Real>
std::pair<Real, Real> extent(std::span<const Real> prob, int height, int width, Real cx, Real cy);

template <typename Real>
struct Description {
  std::vector<Descriptor<Real>> descriptors;
  std::vector<SoftBox<Real>> boxes;
  std::vector<Real> prob;  // K x cells normalized maps
};

template <typename Real>
Description<Real> describe(const HeatmapStack<Real>& stack);

// Backward of `describe`: given d/d descriptor and optionally d/d prob (from the
// heatmap regularizers), writes d/d logits and returns d/d temperature.
template <typename Real>
Real describe_backward(const HeatmapStack<Real>& stack, const Description<Real>& desc,
                       std::span<const DescriptorGrad<Real>> grad_desc,
                       std::span<const Real> grad_prob, std::span<Real> grad_logits);

// Mean pairwise cosine similarity of the flattened normalized maps (in [0,1]).
// K < 2 returns 0 and sets *degenerate. Accumulates scale * gradient into grad
// when non-empty.
template <typename Real>
Real loss_diversity(std::span<const Real> prob, int primitives, std::size_t cells,
                    std::span<Real> grad = {}, Real scale = Real(1), bool* degenerate = nullptr);

// -(1/K) sum_k sum_cells p log(p + 0.01).
template <typename Real>
Real loss_concentration(std::span<const Real> prob, int primitives, std::size_t cells,
                        std::span<Real> grad = {}, Real scale = Real(1));

}  // namespace parse
