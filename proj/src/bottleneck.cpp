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

#include "parse/bottleneck.hpp"

#include <algorithm>
#include <cmath>

#include "parse/error.hpp"
#include "parse/mathcore.hpp"

namespace parse {

template <typename Real>
Real temperature_from_raw(Real raw) {
  return Real(kTemperatureMin) + softplus(raw);
}

template <typename Real>
Real temperature_raw_init() {
  return softplus_inverse(Real(0.5) - Real(kTemperatureMin));
}

template <typename Real>
HeatmapStack<Real> project_features(const ConvShape& projection, std::span<const Real> features,
                                    std::span<const Real> weights, std::span<const Real> bias,
                                    Real temperature) {
  if (features.size() != projection.in_size())
    throw InvalidArgument("project_features: feature map does not match configuration");
  if (projection.stride != 1) throw InvalidArgument("project_features: stride must be 1");
  HeatmapStack<Real> stack;
  stack.primitives = projection.out_channels;
  stack.height = projection.out_h();
  stack.width = projection.out_w();
  stack.temperature = temperature;
  stack.logits.resize(projection.out_size());
  std::vector<Real> scratch;
  conv2d_forward<Real>(projection, features, weights, bias, stack.logits, scratch);
  return stack;
}

template <typename Real>
void normalize_heatmap(std::span<const Real> logits, Real temperature, std::span<Real> out) {
  if (!(temperature >= Real(kTemperatureMin) * Real(0.999999)))
    throw InvalidArgument("normalize_heatmap: temperature below minimum");
  if (out.size() != logits.size() || logits.empty())
    throw InvalidArgument("normalize_heatmap: size mismatch");
  Real mx = logits[0];
  for (Real v : logits) mx = std::max(mx, v);
  Real sum = 0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - mx) / temperature);
    sum += out[i];
  }
  for (Real& v : out) v /= sum;
}

template <typename Real>
std::pair<Real, Real> soft_coordinates(std::span<const Real> prob, int height, int width) {
  if (height < 2 || width < 2)
    throw InvalidArgument("soft_coordinates: grid must be at least 2x2");
  if (prob.size() != std::size_t(height) * width)
    throw InvalidArgument("soft_coordinates: size mismatch");
  Real cx = 0, cy = 0;
  for (int h = 0; h < height; ++h) {
    const Real gy = grid_y<Real>(h, height);
    for (int w = 0; w < width; ++w) {
      const Real p = prob[std::size_t(h) * width + w];
      cx += p * grid_x<Real>(w, width);
      cy += p * gy;
    }
  }
  return {std::clamp(cx, Real(-1), Real(1)), std::clamp(cy, Real(-1), Real(1))};
}

template <typename Real>
Real presence(std::span<const Real> logits, std::size_t* argmax) {
  if (logits.empty()) throw InvalidArgument("presence: empty heatmap");
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i)
    if (logits[i] > logits[best]) best = i;
  if (argmax) *argmax = best;
  return sigmoid(logits[best]);
}

namespace {

template <typename Real>
Real extent_from_variance(Real var) {
  const Real d = Real(2) * std::sqrt(var + Real(kExtentVarianceEps));
  return std::clamp(d, Real(kExtentFloor), Real(kExtentCeiling));
}

template <typename Real>
bool extent_clamped(Real var) {
  const Real d = Real(2) * std::sqrt(var + Real(kExtentVarianceEps));
  return d <= Real(kExtentFloor) || d >= Real(kExtentCeiling);
}

template <typename Real>
std::pair<Real, Real> variances(std::span<const Real> prob, int height, int width, Real cx,
                                Real cy) {
  Real vx = 0, vy = 0;
  for (int h = 0; h < height; ++h) {
    const Real dy = grid_y<Real>(h, height) - cy;
    for (int w = 0; w < width; ++w) {
      const Real p = prob[std::size_t(h) * width + w];
      const Real dx = grid_x<Real>(w, width) - cx;
      vx += p * dx * dx;
      vy += p * dy * dy;
    }
  }
  return {vx, vy};
}

}  // namespace

template <typename Real>
std::pair<Real, Real> extent(std::span<const Real> prob, int height, int width, Real cx, Real cy) {
  if (prob.size() != std::size_t(height) * width) throw InvalidArgument("extent: size mismatch");
  const auto [vx, vy] = variances(prob, height, width, cx, cy);
  return {extent_from_variance(vx), extent_from_variance(vy)};
}

template <typename Real>
Description<Real> describe(const HeatmapStack<Real>& stack) {
  if (stack.height < 2 || stack.width < 2)
    throw InvalidArgument("describe: heatmap grid must be at least 2x2");
  if (stack.logits.size() != std::size_t(stack.primitives) * stack.cells())
    throw InvalidArgument("describe: logits size mismatch");
  Description<Real> out;
  const std::size_t cells = stack.cells();
  out.prob.resize(stack.logits.size());
  out.descriptors.resize(stack.primitives);
  out.boxes.resize(stack.primitives);
  for (int k = 0; k < stack.primitives; ++k) {
    std::span<Real> p(out.prob.data() + k * cells, cells);
    normalize_heatmap<Real>(stack.plane(k), stack.temperature, p);
    Descriptor<Real>& d = out.descriptors[k];
    std::tie(d.cx, d.cy) = soft_coordinates<Real>(p, stack.height, stack.width);
    d.presence = presence<Real>(stack.plane(k));
    std::tie(d.ex, d.ey) = extent<Real>(p, stack.height, stack.width, d.cx, d.cy);
    out.boxes[k] = d.box();
  }
  return out;
}

template <typename Real>
Real describe_backward(const HeatmapStack<Real>& stack, const Description<Real>& desc,
                       std::span<const DescriptorGrad<Real>> grad_desc,
                       std::span<const Real> grad_prob, std::span<Real> grad_logits) {
  const int H = stack.height, W = stack.width;
  const std::size_t cells = stack.cells();
  const Real T = stack.temperature;
  if (grad_logits.size() != stack.logits.size() ||
      grad_desc.size() != std::size_t(stack.primitives))
    throw InvalidArgument("describe_backward: size mismatch");
  Real grad_t = 0;
  std::vector<Real> gp(cells);
  for (int k = 0; k < stack.primitives; ++k) {
    const Real* p = desc.prob.data() + k * cells;
    const Descriptor<Real>& d = desc.descriptors[k];
    const DescriptorGrad<Real>& g = grad_desc[k];
    const auto [vx, vy] = variances(std::span<const Real>(p, cells), H, W, d.cx, d.cy);

    // d extent / d variance, zero where clamped.
    const Real gvx = extent_clamped(vx) ? Real(0)
                                        : g.ex / std::sqrt(vx + Real(kExtentVarianceEps));
    const Real gvy = extent_clamped(vy) ? Real(0)
                                        : g.ey / std::sqrt(vy + Real(kExtentVarianceEps));

    // var_x = sum_i p_i (g_i - c)^2 with c = sum_i p_i g_i, so
    // d var / d p_i = (g_i - c)^2 - 2 (sum_j p_j (g_j - c)) g_i.
    Real mx = 0, my = 0;
    for (int h = 0; h < H; ++h)
      for (int w = 0; w < W; ++w) {
        const Real pi = p[std::size_t(h) * W + w];
        mx += pi * (grid_x<Real>(w, W) - d.cx);
        my += pi * (grid_y<Real>(h, H) - d.cy);
      }
    const Real gcx = g.cx - Real(2) * gvx * mx;
    const Real gcy = g.cy - Real(2) * gvy * my;
    for (int h = 0; h < H; ++h) {
      const Real gy = grid_y<Real>(h, H);
      for (int w = 0; w < W; ++w) {
        const std::size_t i = std::size_t(h) * W + w;
        const Real gx = grid_x<Real>(w, W);
        const Real dx = gx - d.cx, dy = gy - d.cy;
        gp[i] = gcx * gx + gcy * gy + gvx * dx * dx + gvy * dy * dy;
        if (!grad_prob.empty()) gp[i] += grad_prob[k * cells + i];
      }
    }

    // Softmax backward over logits / T.
    Real dot = 0;
    for (std::size_t i = 0; i < cells; ++i) dot += p[i] * gp[i];
    const Real* logits = stack.logits.data() + k * cells;
    Real* gl = grad_logits.data() + k * cells;
    for (std::size_t i = 0; i < cells; ++i) {
      const Real gu = p[i] * (gp[i] - dot);
      gl[i] = gu / T;
      grad_t -= gu * logits[i] / (T * T);
    }

    // Presence: gradient to the first maximal cell only.
    std::size_t arg = 0;
    const Real sig = presence<Real>(stack.plane(k), &arg);
    gl[arg] += g.presence * sig * (Real(1) - sig);
  }
  return grad_t;
}

template <typename Real>
Real loss_diversity(std::span<const Real> prob, int primitives, std::size_t cells,
                    std::span<Real> grad, Real scale, bool* degenerate) {
  if (degenerate) *degenerate = primitives < 2;
  if (primitives < 2) return Real(0);
  std::vector<Real> norms(primitives);
  for (int k = 0; k < primitives; ++k) {
    Real s = 0;
    for (std::size_t i = 0; i < cells; ++i) s += prob[k * cells + i] * prob[k * cells + i];
    norms[k] = std::sqrt(s);
  }
  const Real pairs = Real(primitives) * Real(primitives - 1) / Real(2);
  Real total = 0;
  for (int a = 0; a < primitives; ++a) {
    for (int b = a + 1; b < primitives; ++b) {
      const Real* pa = prob.data() + a * cells;
      const Real* pb = prob.data() + b * cells;
      Real dot = 0;
      for (std::size_t i = 0; i < cells; ++i) dot += pa[i] * pb[i];
      const Real denom = norms[a] * norms[b];
      const Real cosine = dot / denom;
      total += cosine;
      if (!grad.empty()) {
        const Real coef = scale / pairs;
        Real* ga = grad.data() + a * cells;
        Real* gb = grad.data() + b * cells;
        for (std::size_t i = 0; i < cells; ++i) {
          ga[i] += coef * (pb[i] / denom - cosine * pa[i] / (norms[a] * norms[a]));
          gb[i] += coef * (pa[i] / denom - cosine * pb[i] / (norms[b] * norms[b]));
        }
      }
    }
  }
  return total / pairs;
}

template <typename Real>
Real loss_concentration(std::span<const Real> prob, int primitives, std::size_t cells,
                        std::span<Real> grad, Real scale) {
  const Real eps = Real(kConcentrationEps);
  Real total = 0;
  for (std::size_t i = 0; i < std::size_t(primitives) * cells; ++i) {
    const Real p = prob[i];
    total += p * std::log(p + eps);
    if (!grad.empty())
      grad[i] -= scale / Real(primitives) * (std::log(p + eps) + p / (p + eps));
  }
  return -total / Real(primitives);
}

#define PARSE_INSTANTIATE_BOTTLENECK(Real)                                                      \
  template Real temperature_from_raw<Real>(Real);                                               \
  template Real temperature_raw_init<Real>();                                                   \
  template HeatmapStack<Real> project_features<Real>(const ConvShape&, std::span<const Real>,   \
                                                     std::span<const Real>,                     \
                                                     std::span<const Real>, Real);              \
  template void normalize_heatmap<Real>(std::span<const Real>, Real, std::span<Real>);          \
  template std::pair<Real, Real> soft_coordinates<Real>(std::span<const Real>, int, int);       \
  template Real presence<Real>(std::span<const Real>, std::size_t*);                            \
  template std::pair<Real, Real> extent<Real>(std::span<const Real>, int, int, Real, Real);     \
  template Description<Real> describe<Real>(const HeatmapStack<Real>&);                         \
  template Real describe_backward<Real>(const HeatmapStack<Real>&, const Description<Real>&,     \
                                        std::span<const DescriptorGrad<Real>>,                  \
                                        std::span<const Real>, std::span<Real>);                \
  template Real loss_diversity<Real>(std::span<const Real>, int, std::size_t, std::span<Real>,  \
                                     Real, bool*);                                              \
  template Real loss_concentration<Real>(std::span<const Real>, int, std::size_t,               \
                                         std::span<Real>, Real);

PARSE_INSTANTIATE_BOTTLENECK(float)
PARSE_INSTANTIATE_BOTTLENECK(double)

}  // namespace parse
