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

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "parse/backbone.hpp"
#include "parse/error.hpp"
#include "parse/gradcheck.hpp"
#include "parse/mathcore.hpp"
#include "parse/model.hpp"
#include "parse/rng.hpp"

using namespace parse;

namespace {

std::vector<double> random_batch(Rng& rng, std::size_t n) {
  std::vector<double> x(n);
  for (double& v : x) v = rng.normal(0.5, 1.0);
  return x;
}

double channel_mean(const std::vector<double>& x, int b, int c, int channels, std::size_t cells) {
  const double* p = x.data() + (std::size_t(b) * channels + c) * cells;
  return std::accumulate(p, p + cells, 0.0) / double(cells);
}

}  // namespace

TEST_CASE("default backbone geometry") {
  BackboneConfig bb;
  CHECK(bb.feature_channels() == 64);
  CHECK(bb.feature_h() == 16);
  CHECK(bb.feature_w() == 16);
  BackboneConfig bad;
  bad.input_h = bad.input_w = 4;
  bad.strides = {2, 2, 2};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("backbone forward") {
  ModelConfig cfg;
  cfg.backbone.bias = false;
  cfg.relations = false;
  cfg.primitives = 4;
  Model<double> zero(cfg, nullptr);
  const std::vector<double> black(cfg.backbone.input_size(), 0.0);
  const auto f = zero.features(black);
  CHECK(f.size() == 64u * 16 * 16);
  for (double v : f) CHECK(v == 0.0);

  ModelConfig def;
  def.primitives = 4;
  def.relations = false;
  const auto m = Model<double>::create(def, 3);
  Rng rng(1, 0);
  std::vector<double> img(def.backbone.input_size());
  for (double& v : img) v = rng.uniform();
  const auto a = m.features(img), b = m.features(img);
  CHECK(a == b);
  for (double v : a) CHECK(std::isfinite(v));
  CHECK_THROWS_AS(m.features(std::span<const double>(img).first(100)), InvalidArgument);
}

TEST_CASE("style mix examples") {
  Rng rng(2, 0);
  const int N = 2, C = 3;
  const std::size_t cells = 10;
  const auto x = random_batch(rng, N * C * cells);
  std::vector<double> out(x.size());
  const std::vector<int> swap{1, 0}, ident{0, 1};
  style_mix<double>(x, N, C, cells, 1.0, swap, out);
  CHECK(out == x);
  style_mix<double>(x, N, C, cells, 0.0, ident, out);
  CHECK(out == x);
  for (double l : {0.0, 0.3, 0.9}) {
    style_mix<double>(x, N, C, cells, l, ident, out);
    CHECK(out == x);
  }
  style_mix<double>(x, N, C, cells, 0.5, swap, out);
  for (int c = 0; c < C; ++c) {
    const double avg = (channel_mean(x, 0, c, C, cells) + channel_mean(x, 1, c, C, cells)) / 2;
    CHECK(channel_mean(out, 0, c, C, cells) == doctest::Approx(avg).epsilon(1e-12));
    CHECK(channel_mean(out, 1, c, C, cells) == doctest::Approx(avg).epsilon(1e-12));
  }
  for (double v : out) CHECK(std::isfinite(v));
  // Constant channels (zero spread) stay finite.
  std::vector<double> flat(x.size(), 0.25), fout(x.size());
  style_mix<double>(flat, N, C, cells, 0.4, swap, fout);
  for (double v : fout) CHECK(std::isfinite(v));
}

TEST_CASE("style mix backward matches finite differences") {
  Rng rng(3, 0);
  const int N = 3, C = 2;
  const std::size_t cells = 7;
  const auto x = random_batch(rng, N * C * cells);
  const std::vector<int> perm{2, 0, 1};
  const double lam = 0.35;
  std::vector<double> up(x.size());
  for (double& v : up) v = rng.normal();
  std::vector<double> g(x.size());
  style_mix_backward<double>(x, N, C, cells, lam, perm, up, g);
  auto f = [&](const std::vector<double>& in) {
    std::vector<double> out(in.size());
    style_mix<double>(in, N, C, cells, lam, perm, out);
    return std::inner_product(out.begin(), out.end(), up.begin(), 0.0);
  };
  const double h = 1e-6;
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto p = x, m = x;
    p[i] += h;
    m[i] -= h;
    CHECK(relative_error(g[i], (f(p) - f(m)) / (2 * h)) <= 1e-5);
  }
}

TEST_CASE("two-layer backbone gradients pass the finite difference check") {
  GradcheckOptions o;
  o.models = 1;
  const auto r = run_gradcheck(17, o);
  bool saw_backbone = false;
  for (const auto& g : r.models[0].groups)
    if (g.group == "backbone") {
      saw_backbone = true;
      CHECK(g.report.max_rel_err <= 1e-4);
      CHECK(g.report.checked > 0);
    }
  CHECK(saw_backbone);
  CHECK(toy_config(true).backbone.blocks() == 2);
}
