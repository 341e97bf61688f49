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

#include "parse/layers.hpp"

#include <Eigen/Core>

#include "parse/error.hpp"

namespace parse {
namespace {

template <typename Real>
using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Real>
void im2col(const ConvShape& s, const Real* in, Real* col) {
  const int oh = s.out_h(), ow = s.out_w(), k = s.kernel, pad = s.pad();
  const int positions = oh * ow;
  for (int c = 0; c < s.in_channels; ++c) {
    const Real* plane = in + std::size_t(c) * s.in_h * s.in_w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        Real* row = col + (std::size_t(c) * k * k + ky * k + kx) * positions;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * s.stride + ky - pad;
          Real* dst = row + oy * ow;
          if (iy < 0 || iy >= s.in_h) {
            for (int ox = 0; ox < ow; ++ox) dst[ox] = Real(0);
            continue;
          }
          const Real* src = plane + std::size_t(iy) * s.in_w;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * s.stride + kx - pad;
            dst[ox] = (ix >= 0 && ix < s.in_w) ? src[ix] : Real(0);
          }
        }
      }
    }
  }
}

template <typename Real>
void col2im(const ConvShape& s, const Real* col, Real* in) {
  const int oh = s.out_h(), ow = s.out_w(), k = s.kernel, pad = s.pad();
  const int positions = oh * ow;
  std::fill(in, in + s.in_size(), Real(0));
  for (int c = 0; c < s.in_channels; ++c) {
    Real* plane = in + std::size_t(c) * s.in_h * s.in_w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const Real* row = col + (std::size_t(c) * k * k + ky * k + kx) * positions;
        for (int oy = 0; oy < oh; ++oy) {
          const int iy = oy * s.stride + ky - pad;
          if (iy < 0 || iy >= s.in_h) continue;
          Real* dst = plane + std::size_t(iy) * s.in_w;
          const Real* src = row + oy * ow;
          for (int ox = 0; ox < ow; ++ox) {
            const int ix = ox * s.stride + kx - pad;
            if (ix >= 0 && ix < s.in_w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

void check_shape(const ConvShape& s) {
  if (s.in_channels <= 0 || s.out_channels <= 0 || s.kernel <= 0 || s.kernel % 2 == 0 ||
      s.stride <= 0 || s.in_h <= 0 || s.in_w <= 0)
    throw InvalidArgument("conv2d: invalid shape");
}

}  // namespace

template <typename Real>
void conv2d_forward(const ConvShape& s, std::span<const Real> in, std::span<const Real> weights,
                    std::span<const Real> bias, std::span<Real> out, std::vector<Real>& scratch) {
  check_shape(s);
  if (in.size() != s.in_size() || weights.size() != s.weight_size() ||
      out.size() != s.out_size() || (s.bias && bias.size() != std::size_t(s.out_channels)))
    throw InvalidArgument("conv2d_forward: shape mismatch");
  const int rows = s.in_channels * s.kernel * s.kernel;
  const int positions = s.out_h() * s.out_w();
  scratch.resize(std::size_t(rows) * positions);
  im2col(s, in.data(), scratch.data());
  Eigen::Map<const RowMat<Real>> w(weights.data(), s.out_channels, rows);
  Eigen::Map<const RowMat<Real>> col(scratch.data(), rows, positions);
  Eigen::Map<RowMat<Real>> o(out.data(), s.out_channels, positions);
  o.noalias() = w * col;
  if (s.bias) {
    for (int c = 0; c < s.out_channels; ++c) o.row(c).array() += bias[c];
  }
}

template <typename Real>
void conv2d_backward(const ConvShape& s, std::span<const Real> in, std::span<const Real> weights,
                     std::span<const Real> grad_out, std::span<Real> grad_in,
                     std::span<Real> grad_weights, std::span<Real> grad_bias,
                     std::vector<Real>& scratch) {
  check_shape(s);
  const int rows = s.in_channels * s.kernel * s.kernel;
  const int positions = s.out_h() * s.out_w();
  if (grad_out.size() != s.out_size() || grad_weights.size() != s.weight_size())
    throw InvalidArgument("conv2d_backward: shape mismatch");
  scratch.resize(std::size_t(rows) * positions);
  im2col(s, in.data(), scratch.data());
  Eigen::Map<const RowMat<Real>> go(grad_out.data(), s.out_channels, positions);
  Eigen::Map<RowMat<Real>> col(scratch.data(), rows, positions);
  Eigen::Map<RowMat<Real>> gw(grad_weights.data(), s.out_channels, rows);
  gw.noalias() += go * col.transpose();
  if (s.bias && !grad_bias.empty()) {
    // Plain left-to-right sums: vectorized reductions would round differently
    // depending on buffer alignment.
    for (int c = 0; c < s.out_channels; ++c) {
      const Real* g = grad_out.data() + std::size_t(c) * positions;
      Real acc = 0;
      for (int p = 0; p < positions; ++p) acc += g[p];
      grad_bias[c] += acc;
    }
  }
  if (!grad_in.empty()) {
    Eigen::Map<const RowMat<Real>> w(weights.data(), s.out_channels, rows);
    col.noalias() = w.transpose() * go;
    col2im(s, scratch.data(), grad_in.data());
  }
}

template void conv2d_forward<float>(const ConvShape&, std::span<const float>,
                                    std::span<const float>, std::span<const float>,
                                    std::span<float>, std::vector<float>&);
template void conv2d_forward<double>(const ConvShape&, std::span<const double>,
                                     std::span<const double>, std::span<const double>,
                                     std::span<double>, std::vector<double>&);
template void conv2d_backward<float>(const ConvShape&, std::span<const float>,
                                     std::span<const float>, std::span<const float>,
                                     std::span<float>, std::span<float>, std::span<float>,
                                     std::vector<float>&);
template void conv2d_backward<double>(const ConvShape&, std::span<const double>,
                                      std::span<const double>, std::span<const double>,
                                      std::span<double>, std::span<double>, std::span<double>,
                                      std::vector<double>&);

}  // namespace parse
