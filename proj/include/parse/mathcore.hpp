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

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "parse/error.hpp"

namespace parse {

// Smooth scalar kernels -------------------------------------------------------

template <typename Real>
inline Real sigmoid(Real x) {
  if (x >= Real(0)) {
    const Real e = std::exp(-x);
    return Real(1) / (Real(1) + e);
  }
  const Real e = std::exp(x);
  return e / (Real(1) + e);
}

template <typename Real>
inline Real softplus(Real x) {
  // log(1 + e^x) without overflow for large |x|.
  return x > Real(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Inverse of softplus for y > 0.
template <typename Real>
inline Real softplus_inverse(Real y) {
  if (!(y > Real(0))) throw InvalidArgument("softplus_inverse: argument must be positive");
  return y > Real(30) ? y + std::log(-std::expm1(-y)) : std::log(std::expm1(y));
}

// exp(-(x - target)^2 / (2 width^2)); width must be positive.
template <typename Real>
inline Real gaussian_bump(Real x, Real target, Real width) {
  if (!(width > Real(0))) throw InvalidArgument("gaussian_bump: width must be positive");
  const Real d = x - target;
  return std::exp(-(d * d) / (Real(2) * width * width));
}

// Partial derivatives of gaussian_bump at (x, target, width).
template <typename Real>
struct BumpGrad {
  Real value, d_x, d_target, d_width;
};

template <typename Real>
inline BumpGrad<Real> gaussian_bump_grad(Real x, Real target, Real width) {
  const Real d = x - target;
  const Real w2 = width * width;
  const Real v = std::exp(-(d * d) / (Real(2) * w2));
  return {v, -v * d / w2, v * d / w2, v * d * d / (w2 * width)};
}

// Sparsemax -------------------------------------------------------------------

// Euclidean projection of z onto the probability simplex (sort-and-threshold).
// Inputs are shifted by their maximum first, so adding an exactly representable
// constant to every entry leaves the output bit-identical. Entries at or below
// the threshold come out as exact zeros.
template <typename Real>
void sparsemax(std::span<const Real> z, std::span<Real> out);

template <typename Real>
std::vector<Real> sparsemax(std::span<const Real> z);

// Jacobian-vector product of sparsemax given its output p: on the support
// g_i = u_i - mean_S(u), elsewhere 0.
template <typename Real>
void sparsemax_backward_from_output(std::span<const Real> p, std::span<const Real> upstream,
                                    std::span<Real> grad);

template <typename Real>
std::vector<Real> sparsemax_backward(std::span<const Real> z, std::span<const Real> upstream);

// Finite-difference gradient verification -------------------------------------

struct GradReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

// One scalar parameter under test: the loss closure reads *value.
struct FdParam {
  std::string name;
  double* value;
  double analytic;
};

// Central differences (f(x+h) - f(x-h)) / 2h per parameter, relative error
// |a - n| / max(|a|, |n|, 1e-8). Throws NumericError naming the parameter when
// the loss is non-finite at a probe point. Parameters are restored exactly.
GradReport finite_diff_check(const std::function<double()>& loss, std::span<FdParam> params,
                             double h = 1e-5);

double relative_error(double analytic, double numeric);

}  // namespace parse
