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

namespace parse {

// Square-kernel convolution, zero padding kernel/2, CHW layout.
struct ConvShape {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 3;
  int stride = 1;
  int in_h = 0;
  int in_w = 0;
  bool bias = true;

  int pad() const { return kernel / 2; }
  int out_h() const { return (in_h + 2 * pad() - kernel) / stride + 1; }
  int out_w() const { return (in_w + 2 * pad() - kernel) / stride + 1; }
  std::size_t in_size() const { return std::size_t(in_channels) * in_h * in_w; }
  std::size_t out_size() const { return std::size_t(out_channels) * out_h() * out_w(); }
  std::size_t weight_size() const {
    return std::size_t(out_channels) * in_channels * kernel * kernel;
  }
};

// out = W * im2col(in) + b.  `weights` is [out][in][k][k] row-major.
template <typename Real>
void conv2d_forward(const ConvShape& s, std::span<const Real> in, std::span<const Real> weights,
                    std::span<const Real> bias, std::span<Real> out, std::vector<Real>& scratch);

// Accumulates into grad_weights / grad_bias; overwrites grad_in unless empty.
template <typename Real>
void conv2d_backward(const ConvShape& s, std::span<const Real> in, std::span<const Real> weights,
                     std::span<const Real> grad_out, std::span<Real> grad_in,
                     std::span<Real> grad_weights, std::span<Real> grad_bias,
                     std::vector<Real>& scratch);

template <typename Real>
void relu_inplace(std::span<Real> x) {
  for (Real& v : x) v = v > Real(0) ? v : Real(0);
}

// grad *= (activated > 0)
template <typename Real>
void relu_backward_inplace(std::span<const Real> activated, std::span<Real> grad) {
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!(activated[i] > Real(0))) grad[i] = Real(0);
}

}  // namespace parse
