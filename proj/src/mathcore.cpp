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

#include "parse/mathcore.hpp"

#include <algorithm>
#include <numeric>

namespace parse {

template <typename Real>
void sparsemax(std::span<const Real> z, std::span<Real> out) {
  const std::size_t n = z.size();
  if (n == 0) throw InvalidArgument("sparsemax: empty input");
  if (out.size() != n) throw InvalidArgument("sparsemax: output size mismatch");
  Real zmax = z[0];
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(z[i])) throw InvalidArgument("sparsemax: non-finite input");
    zmax = std::max(zmax, z[i]);
  }
  std::vector<Real> shifted(n);
  for (std::size_t i = 0; i < n; ++i) shifted[i] = z[i] - zmax;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return shifted[a] > shifted[b] || (shifted[a] == shifted[b] && a < b);
  });

  // Largest k with 1 + k z_(k) > sum_{j<=k} z_(j).
  Real cumsum = 0;
  Real support_sum = 0;
  std::size_t support = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const Real zk = shifted[order[k]];
    cumsum += zk;
    if (Real(1) + Real(k + 1) * zk > cumsum) {
      support = k + 1;
      support_sum = cumsum;
    } else {
      break;
    }
  }
  const Real tau = (support_sum - Real(1)) / Real(support);
  for (std::size_t i = 0; i < n; ++i) {
    const Real v = shifted[i] - tau;
    out[i] = v > Real(0) ? v : Real(0);
  }
}

template <typename Real>
std::vector<Real> sparsemax(std::span<const Real> z) {
  std::vector<Real> out(z.size());
  sparsemax<Real>(z, out);
  return out;
}

template <typename Real>
void sparsemax_backward_from_output(std::span<const Real> p, std::span<const Real> upstream,
                                    std::span<Real> grad) {
  const std::size_t n = p.size();
  if (upstream.size() != n || grad.size() != n)
    throw InvalidArgument("sparsemax_backward: size mismatch");
  Real sum = 0;
  std::size_t support = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (p[i] > Real(0)) {
      sum += upstream[i];
      ++support;
    }
  }
  const Real mean = support > 0 ? sum / Real(support) : Real(0);
  for (std::size_t i = 0; i < n; ++i) grad[i] = p[i] > Real(0) ? upstream[i] - mean : Real(0);
}

template <typename Real>
std::vector<Real> sparsemax_backward(std::span<const Real> z, std::span<const Real> upstream) {
  const std::vector<Real> p = sparsemax<Real>(z);
  std::vector<Real> g(z.size());
  sparsemax_backward_from_output<Real>(p, upstream, g);
  return g;
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradReport finite_diff_check(const std::function<double()>& loss, std::span<FdParam> params,
                             double h) {
  if (!(h > 0.0)) throw InvalidArgument("finite_diff_check: step must be positive");
  GradReport report;
  for (FdParam& p : params) {
    const double saved = *p.value;
    *p.value = saved + h;
    const double fp = loss();
    *p.value = saved - h;
    const double fm = loss();
    *p.value = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericError("finite_diff_check: non-finite loss while probing " + p.name);
    const double numeric = (fp - fm) / (2.0 * h);
    const double err = relative_error(p.analytic, numeric);
    ++report.checked;
    if (report.checked == 1 || err > report.max_rel_err) {
      report.max_rel_err = err;
      report.worst_param = p.name;
      report.analytic = p.analytic;
      report.numeric = numeric;
    }
  }
  return report;
}

template void sparsemax<float>(std::span<const float>, std::span<float>);
template void sparsemax<double>(std::span<const double>, std::span<double>);
template std::vector<float> sparsemax<float>(std::span<const float>);
template std::vector<double> sparsemax<double>(std::span<const double>);
template void sparsemax_backward_from_output<float>(std::span<const float>, std::span<const float>,
                                                    std::span<float>);
template void sparsemax_backward_from_output<double>(std::span<const double>,
                                                     std::span<const double>, std::span<double>);
template std::vector<float> sparsemax_backward<float>(std::span<const float>,
                                                      std::span<const float>);
template std::vector<double> sparsemax_backward<double>(std::span<const double>,
                                                        std::span<const double>);

}  // namespace parse
