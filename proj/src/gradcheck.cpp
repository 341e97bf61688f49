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

#include "parse/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "parse/error.hpp"
#include "parse/rng.hpp"

namespace parse {

ModelConfig toy_config(bool relations) {
  ModelConfig c;
  c.backbone.input_h = 12;
  c.backbone.input_w = 12;
  c.backbone.widths = {4, 6};
  c.backbone.strides = {2, 1};
  c.backbone.style_hook = 1;
  c.primitives = 4;
  c.classes = 2;
  c.relations = relations;
  return c;
}

Model<double> toy_model(const ModelConfig& config, std::uint64_t seed) {
  auto m = Model<double>::create(config, seed);
  Rng rng(seed, stream_id(streams::kToy, 0));
  auto& p = m.params();
  const auto& s = m.slots();
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  const double deg = std::numbers::pi / 180.0;
  p[s.temperature_raw][0] = softplus_inverse(uni(0.3, 1.0) - kTemperatureMin);
  for (double& v : p[s.proj_bias]) v = uni(-0.2, 0.2);
  for (std::size_t b : s.block_bias)
    for (double& v : p[b]) v = uni(0.0, 0.2);
  if (!config.relations) {
    for (double& v : p[s.head_weight]) v = rng.normal(0.0, 1.0);
    for (double& v : p[s.head_bias]) v = rng.normal(0.0, 0.5);
    return m;
  }
  auto pos = [&](std::size_t slot, double lo, double hi) {
    for (double& v : p[slot]) v = positive_to_raw(uni(lo, hi));
  };
  pos(s.kappa_above, 2.0, 6.0);
  pos(s.kappa_left, 2.0, 6.0);
  pos(s.kappa_contains, 2.0, 6.0);
  p[s.margin_above][0] = uni(-0.2, 0.2);
  p[s.margin_left][0] = uni(-0.2, 0.2);
  pos(s.tau_h, 0.2, 0.6);
  pos(s.tau_v, 0.2, 0.6);
  pos(s.rho, 0.2, 0.6);
  pos(s.tau_d, 0.4, 1.0);
  for (double& v : p[s.psi]) v = uni(30.0, 150.0) * deg;
  for (double& v : p[s.phi_turn]) v = uni(30.0, 150.0) * deg;
  for (double& v : p[s.phi_orient]) v = uni(0.0, 180.0) * deg;
  pos(s.beta, 0.3, 0.8);
  pos(s.eta, 0.3, 0.8);
  pos(s.gamma, 0.3, 0.8);
  // Row 0 keeps a broad sparsemax support so every family carries weight;
  // the remaining rows are sparse.
  auto lambda = p[s.lambda];
  const std::size_t relations = lambda.size() / config.classes;
  for (std::size_t i = 0; i < lambda.size(); ++i)
    lambda[i] = rng.normal(0.0, i < relations ? 0.002 : 1.0);
  p[s.omega_raw][0] = softplus_inverse(uni(1.0, 3.0));
  return m;
}

std::string parameter_group(const std::string& name) {
  if (name.starts_with("backbone.")) return "backbone";
  if (name == "bottleneck.temperature_raw") return "temperature";
  if (name.starts_with("bottleneck.")) return "bottleneck";
  if (name.starts_with("vocab.")) {
    std::string v = name.substr(6);
    if (v.ends_with("_raw")) v.resize(v.size() - 4);
    return "vocab." + v;
  }
  if (name == "structure.lambda") return "lambda";
  if (name == "structure.omega_raw") return "omega";
  return "head";
}

namespace {

double central(const std::function<double()>& f, double* x, double h) {
  const double saved = *x;
  *x = saved + h;
  const double fp = f();
  *x = saved - h;
  const double fm = f();
  *x = saved;
  if (!std::isfinite(fp) || !std::isfinite(fm))
    throw NumericError("gradcheck: non-finite loss near probe point");
  return (fp - fm) / (2.0 * h);
}

ModelGradReport check_model(std::uint64_t seed, const GradcheckOptions& opt) {
  const ModelConfig config = toy_config(opt.relations);
  Model<double> model = toy_model(config, seed);
  Rng rng(seed, stream_id(streams::kToy, 1));
  const int n = opt.batch;
  std::vector<double> images(config.backbone.input_size() * n);
  for (double& v : images) v = rng.uniform();
  std::vector<int> labels(n);
  for (int& y : labels) y = int(rng.below(config.classes));
  StyleMixDraw draw;
  draw.lambda = 0.2 + 0.6 * rng.uniform();
  draw.perm.resize(n);
  for (int i = 0; i < n; ++i) draw.perm[i] = (i + 1) % n;
  const StyleMixDraw* mix = opt.style_mix && n > 1 ? &draw : nullptr;
  LossConfig cfg;
  cfg.sparse = 0.1;
  cfg.bn = 0.5;
  cfg.conc = 0.5;
  cfg.ang = 0.1;

  ParamStore<double> grad;
  model.loss(images, labels, cfg, mix, &grad);
  auto f = [&] { return double(model.loss(images, labels, cfg, mix, nullptr).total); };
  // Rounding noise of a central difference; step-halving disagreements below
  // it are not kinks.
  const double noise =
      1e3 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f())) / opt.step;

  ModelGradReport out;
  out.seed = seed;
  auto& params = model.params();
  for (std::size_t t = 0; t < params.size(); ++t) {
    const std::string group = parameter_group(params.tensor(t).name);
    auto it = std::find_if(out.groups.begin(), out.groups.end(),
                           [&](const GroupReport& g) { return g.group == group; });
    if (it == out.groups.end()) {
      out.groups.push_back({group, {}, 0, 0.0});
      it = out.groups.end() - 1;
    }
    auto values = params[t];
    for (std::size_t i = 0; i < values.size(); ++i) {
      double* x = &values[i];
      // mean|Lambda| has its kink at 0; a kink that close to x escapes the
      // step-halving test below.
      if (group == "lambda" && std::abs(*x) <= 2 * opt.step) {
        ++it->skipped;
        continue;
      }
      const double numeric = central(f, x, opt.step);
      // A kink inside the probe interval makes the estimate depend on the step.
      const double half = central(f, x, opt.step / 2);
      if (std::abs(numeric - half) > std::max(opt.tolerance / 10 * std::abs(numeric), noise)) {
        ++it->skipped;
        continue;
      }
      const double analytic = grad[t][i];
      const double err = relative_error(analytic, numeric);
      GradReport& r = it->report;
      ++r.checked;
      it->max_abs_grad = std::max(it->max_abs_grad, std::abs(analytic));
      if (r.checked == 1 || err > r.max_rel_err) {
        r.max_rel_err = err;
        r.worst_param = params.tensor(t).name + "[" + std::to_string(i) + "]";
        r.analytic = analytic;
        r.numeric = numeric;
      }
    }
    out.max_rel_err = std::max(out.max_rel_err, it->report.max_rel_err);
  }
  return out;
}

}  // namespace

GradcheckSummary run_gradcheck(std::uint64_t seed, const GradcheckOptions& opt) {
  if (opt.models < 1) throw InvalidArgument("gradcheck: need at least one model");
  if (!(opt.step > 0)) throw InvalidArgument("gradcheck: step must be positive");
  GradcheckSummary s;
  s.tolerance = opt.tolerance;
  s.passed = true;
  for (int m = 0; m < opt.models; ++m) {
    s.models.push_back(check_model(splitmix64_mix(seed + std::uint64_t(m)), opt));
    const auto& r = s.models.back();
    s.max_rel_err = std::max(s.max_rel_err, r.max_rel_err);
    for (const auto& g : r.groups) {
      const std::size_t total = g.report.checked + g.skipped;
      if (g.report.checked == 0 || !(g.max_abs_grad > 1e-10) || g.report.max_rel_err > opt.tolerance ||
          g.skipped * 20 > total)
        s.passed = false;
    }
  }
  return s;
}

}  // namespace parse
