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

#include "parse/backbone.hpp"

#include <algorithm>
#include <cmath>

#include "parse/error.hpp"

namespace parse {

ConvShape BackboneConfig::block(int b) const {
  ConvShape s;
  s.in_channels = b == 0 ? input_channels : widths[b - 1];
  s.out_channels = widths[b];
  s.kernel = kernel;
  s.stride = strides[b];
  s.bias = bias;
  s.in_h = input_h;
  s.in_w = input_w;
  for (int i = 0; i < b; ++i) {
    ConvShape prev = s;
    prev.stride = strides[i];
    prev.in_h = s.in_h;
    prev.in_w = s.in_w;
    s.in_h = prev.out_h();
    s.in_w = prev.out_w();
  }
  return s;
}

int BackboneConfig::feature_h() const { return block(blocks() - 1).out_h(); }
int BackboneConfig::feature_w() const { return block(blocks() - 1).out_w(); }

void BackboneConfig::validate() const {
  if (widths.empty() || widths.size() != strides.size())
    throw InvalidArgument("backbone: widths and strides must be non-empty and equal length");
  if (input_h < 2 || input_w < 2 || input_channels < 1)
    throw InvalidArgument("backbone: invalid input size");
  for (int w : widths)
    if (w < 1) throw InvalidArgument("backbone: widths must be positive");
  for (int s : strides)
    if (s < 1) throw InvalidArgument("backbone: strides must be positive");
  if (kernel < 1 || kernel % 2 == 0) throw InvalidArgument("backbone: kernel must be odd");
  if (style_hook < 1 || style_hook > blocks())
    throw InvalidArgument("backbone: style_hook must be in [1, blocks]");
  if (feature_h() < 2 || feature_w() < 2)
    throw InvalidArgument("backbone: feature map must be at least 2x2");
  if (style_mix_prob < 0 || style_mix_prob > 1 || !(style_mix_beta > 0))
    throw InvalidArgument("backbone: invalid style mixing settings");
}

namespace {

constexpr double kStdFloor = 1e-6;

template <typename Real>
void channel_stats(const Real* x, std::size_t cells, Real& mean, Real& stddev) {
  Real sum = 0;
  for (std::size_t i = 0; i < cells; ++i) sum += x[i];
  mean = sum / Real(cells);
  Real var = 0;
  for (std::size_t i = 0; i < cells; ++i) var += (x[i] - mean) * (x[i] - mean);
  stddev = std::sqrt(var / Real(cells));
}

bool passthrough(double lambda, std::span<const int> perm, int b) {
  return lambda == 1.0 || perm[b] == b;
}

void check(std::size_t size, int n, int c, std::size_t cells, std::span<const int> perm) {
  if (size != std::size_t(n) * c * cells || perm.size() != std::size_t(n))
    throw InvalidArgument("style_mix: shape mismatch");
  for (int p : perm)
    if (p < 0 || p >= n) throw InvalidArgument("style_mix: permutation index out of range");
}

}  // namespace

template <typename Real>
void style_mix(std::span<const Real> batch, int n, int channels, std::size_t cells, Real lambda,
               std::span<const int> perm, std::span<Real> out) {
  check(batch.size(), n, channels, cells, perm);
  if (out.size() != batch.size()) throw InvalidArgument("style_mix: output size mismatch");
  if (lambda < Real(0) || lambda > Real(1)) throw InvalidArgument("style_mix: lambda in [0,1]");
  std::vector<Real> mu(std::size_t(n) * channels), sd(mu.size());
  for (int b = 0; b < n; ++b)
    for (int c = 0; c < channels; ++c) {
      const std::size_t q = std::size_t(b) * channels + c;
      channel_stats(batch.data() + q * cells, cells, mu[q], sd[q]);
    }
  for (int b = 0; b < n; ++b) {
    for (int c = 0; c < channels; ++c) {
      const std::size_t q = std::size_t(b) * channels + c;
      const Real* x = batch.data() + q * cells;
      Real* y = out.data() + q * cells;
      if (passthrough(double(lambda), perm, b)) {
        std::copy(x, x + cells, y);
        continue;
      }
      const std::size_t p = std::size_t(perm[b]) * channels + c;
      const Real mix_mu = lambda * mu[q] + (Real(1) - lambda) * mu[p];
      const Real mix_sd = lambda * sd[q] + (Real(1) - lambda) * sd[p];
      const Real denom = std::max(sd[q], Real(kStdFloor));
      for (std::size_t i = 0; i < cells; ++i) y[i] = (x[i] - mu[q]) / denom * mix_sd + mix_mu;
    }
  }
}

template <typename Real>
void style_mix_backward(std::span<const Real> batch, int n, int channels, std::size_t cells,
                        Real lambda, std::span<const int> perm, std::span<const Real> grad_out,
                        std::span<Real> grad_in) {
  check(batch.size(), n, channels, cells, perm);
  if (grad_out.size() != batch.size() || grad_in.size() != batch.size())
    throw InvalidArgument("style_mix_backward: size mismatch");
  const std::size_t q_total = std::size_t(n) * channels;
  std::vector<Real> mu(q_total), sd(q_total), g_mu(q_total, 0), g_sd(q_total, 0);
  for (std::size_t q = 0; q < q_total; ++q) channel_stats(batch.data() + q * cells, cells, mu[q], sd[q]);

  for (int b = 0; b < n; ++b) {
    for (int c = 0; c < channels; ++c) {
      const std::size_t q = std::size_t(b) * channels + c;
      const Real* x = batch.data() + q * cells;
      const Real* go = grad_out.data() + q * cells;
      Real* gi = grad_in.data() + q * cells;
      if (passthrough(double(lambda), perm, b)) {
        std::copy(go, go + cells, gi);
        continue;
      }
      const std::size_t p = std::size_t(perm[b]) * channels + c;
      const Real mix_sd = lambda * sd[q] + (Real(1) - lambda) * sd[p];
      const bool floored = !(sd[q] > Real(kStdFloor));
      const Real denom = floored ? Real(kStdFloor) : sd[q];
      Real g_mix_mu = 0, g_mix_sd = 0, g_xhat_sum = 0, g_denom = 0;
      for (std::size_t i = 0; i < cells; ++i) {
        const Real xhat = (x[i] - mu[q]) / denom;
        g_mix_mu += go[i];
        g_mix_sd += go[i] * xhat;
        const Real g_xhat = go[i] * mix_sd;
        gi[i] = g_xhat / denom;
        g_xhat_sum += g_xhat;
        g_denom -= g_xhat * (x[i] - mu[q]) / (denom * denom);
      }
      g_mu[q] += -g_xhat_sum / denom + lambda * g_mix_mu;
      g_mu[p] += (Real(1) - lambda) * g_mix_mu;
      g_sd[q] += lambda * g_mix_sd + (floored ? Real(0) : g_denom);
      g_sd[p] += (Real(1) - lambda) * g_mix_sd;
    }
  }
  // Statistics -> inputs: d mu / dx_i = 1/n, d s / dx_i = (x_i - mu) / (n s).
  for (std::size_t q = 0; q < q_total; ++q) {
    const Real* x = batch.data() + q * cells;
    Real* gi = grad_in.data() + q * cells;
    const Real a = g_mu[q] / Real(cells);
    const Real b = sd[q] > Real(0) ? g_sd[q] / (Real(cells) * sd[q]) : Real(0);
    for (std::size_t i = 0; i < cells; ++i) gi[i] += a + b * (x[i] - mu[q]);
  }
}

template void style_mix<float>(std::span<const float>, int, int, std::size_t, float,
                               std::span<const int>, std::span<float>);
template void style_mix<double>(std::span<const double>, int, int, std::size_t, double,
                                std::span<const int>, std::span<double>);
template void style_mix_backward<float>(std::span<const float>, int, int, std::size_t, float,
                                        std::span<const int>, std::span<const float>,
                                        std::span<float>);
template void style_mix_backward<double>(std::span<const double>, int, int, std::size_t, double,
                                         std::span<const int>, std::span<const double>,
                                         std::span<double>);

}  // namespace parse
