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
#include <vector>

#include "parse/bottleneck.hpp"
#include "parse/error.hpp"
#include "parse/mathcore.hpp"
#include "parse/rng.hpp"
#include "suites.hpp"

using namespace parse;

namespace {

double plane_sum(const std::vector<double>& p) {
  double s = 0;
  for (double v : p) s += v;
  return s;
}

HeatmapStack<double> random_stack(Rng& rng, int K, int H, int W, double scale) {
  HeatmapStack<double> s;
  s.primitives = K;
  s.height = H;
  s.width = W;
  s.temperature = rng.uniform(0.2, 1.5);
  s.logits.resize(std::size_t(K) * H * W);
  for (double& v : s.logits) v = rng.normal(0.0, scale);
  return s;
}

}  // namespace

TEST_CASE("project_features examples") {
  ConvShape shape{4, 3, 3, 1, 6, 5, true};
  std::vector<double> f(shape.in_size(), 0.0), w(shape.weight_size(), 0.0), b(3, 0.0);
  auto zero = project_features<double>(shape, f, w, b, 0.5);
  for (double v : zero.logits) CHECK(v == 0.0);
  CHECK(zero.primitives == 3);
  CHECK(zero.height == 6);
  CHECK(zero.width == 5);

  ConvShape id{3, 3, 1, 1, 4, 4, true};
  Rng rng(1, 0);
  std::vector<double> g(id.in_size());
  for (double& v : g) v = rng.normal();
  std::vector<double> eye(9, 0.0), nob(3, 0.0);
  for (int c = 0; c < 3; ++c) eye[c * 3 + c] = 1.0;
  const auto same = project_features<double>(id, g, eye, nob, 0.5);
  CHECK(same.logits == g);

  std::vector<double> rf(shape.in_size()), rw(shape.weight_size()), rb(3);
  for (double& v : rf) v = rng.normal();
  for (double& v : rw) v = rng.normal();
  for (double& v : rb) v = rng.normal();
  const auto r = project_features<double>(shape, rf, rw, rb, 0.5);
  CHECK(r.logits.size() == 3u * 6 * 5);
  for (double v : r.logits) CHECK(std::isfinite(v));
  std::vector<double> short_f(shape.in_size() - 1);
  CHECK_THROWS_AS(project_features<double>(shape, short_f, rw, rb, 0.5), InvalidArgument);
}

TEST_CASE("normalize_heatmap examples") {
  std::vector<double> flat(16 * 16, 3.7), out(flat.size());
  normalize_heatmap<double>(flat, 0.3, out);
  for (double v : out) CHECK(v == doctest::Approx(1.0 / 256));
  std::vector<double> spike(16 * 16, 0.0);
  spike[37] = 100.0;
  normalize_heatmap<double>(spike, 1.0, out);
  CHECK(out[37] >= 1.0 - 1e-6);
  Rng rng(2, 0);
  std::vector<double> h(64), a(64), b(64), scaled(64);
  for (double& v : h) v = rng.normal();
  for (std::size_t i = 0; i < h.size(); ++i) scaled[i] = 2.5 * h[i];
  normalize_heatmap<double>(h, 0.7, a);
  normalize_heatmap<double>(scaled, 0.7 * 2.5, b);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
  std::vector<float> hf(300), of(300);
  for (float& v : hf) v = float(rng.normal(0.0, 4.0));
  normalize_heatmap<float>(hf, 0.05f, of);
  double s = 0;
  for (float v : of) s += v;
  CHECK(std::abs(s - 1.0) <= 1e-6);
}

TEST_CASE("soft_coordinates examples") {
  const int H = 5, W = 7;
  std::vector<double> p(H * W, 0.0);
  p[0] = 1.0;
  auto c = soft_coordinates<double>(p, H, W);
  CHECK(c.first == -1.0);
  CHECK(c.second == -1.0);
  std::fill(p.begin(), p.end(), 1.0 / (H * W));
  c = soft_coordinates<double>(p, H, W);
  CHECK(c.first == doctest::Approx(0.0));
  CHECK(c.second == doctest::Approx(0.0));
  std::fill(p.begin(), p.end(), 0.0);
  p[0] = 0.5;
  p[W - 1] = 0.5;
  c = soft_coordinates<double>(p, H, W);
  CHECK(c.first == doctest::Approx(0.0));
  CHECK(c.second == doctest::Approx(-1.0));
  std::vector<double> row(4, 0.25);
  CHECK_THROWS_AS(soft_coordinates<double>(row, 1, 4), InvalidArgument);
}

TEST_CASE("soft_coordinates converge to the peak at the minimum temperature") {
  Rng rng(3, 0);
  const int H = 8, W = 8;
  for (int t = 0; t < 50; ++t) {
    std::vector<double> l(H * W), p(H * W);
    for (double& v : l) v = rng.uniform(-1.0, 0.0);
    const int peak = int(rng.below(H * W));
    l[peak] = 5.0;
    normalize_heatmap<double>(l, kTemperatureMin, p);
    const auto c = soft_coordinates<double>(p, H, W);
    const double gx = grid_x<double>(peak % W, W), gy = grid_y<double>(peak / W, H);
    CHECK(std::hypot(c.first - gx, c.second - gy) <= 1e-3);
  }
}

TEST_CASE("presence examples") {
  std::vector<double> z(9, 0.0);
  CHECK(presence<double>(z) == 0.5);
  z[4] = 10.0;
  std::size_t arg = 99;
  CHECK(presence<double>(z, &arg) == doctest::Approx(0.9999546).epsilon(1e-7));
  CHECK(arg == 4);
  std::vector<double> n(9, -20.0);
  n[2] = -10.0;
  CHECK(presence<double>(n) == doctest::Approx(4.54e-5).epsilon(1e-3));
  std::vector<double> tie(4, 1.0);
  presence<double>(tie, &arg);
  CHECK(arg == 0);
}

TEST_CASE("extent examples") {
  const int H = 4, W = 4;
  std::vector<double> p(H * W, 0.0);
  p[5] = 1.0;
  const auto c = soft_coordinates<double>(p, H, W);
  auto e = extent<double>(p, H, W, c.first, c.second);
  CHECK(e.first == kExtentFloor);
  CHECK(e.second == kExtentFloor);
  std::vector<double> two(4, 0.0);
  two[0] = two[1] = 0.5;  // (h=0, w=0) and (h=0, w=1) on a 2x2 grid: g^x = -1, +1
  const auto c2 = soft_coordinates<double>(two, 2, 2);
  e = extent<double>(two, 2, 2, c2.first, c2.second);
  CHECK(e.first == doctest::Approx(2.0).epsilon(1e-8));
  std::fill(p.begin(), p.end(), 1.0 / 16);
  const auto cu = soft_coordinates<double>(p, H, W);
  e = extent<double>(p, H, W, cu.first, cu.second);
  CHECK(e.first == doctest::Approx(e.second).epsilon(1e-14));
}

TEST_CASE("describe composes the descriptor") {
  HeatmapStack<double> s;
  s.primitives = 1;
  s.height = 4;
  s.width = 4;
  s.temperature = 0.05;
  s.logits.assign(16, -50.0);
  s.logits[0] = 50.0;
  const auto d = describe(s);
  REQUIRE(d.descriptors.size() == 1);
  CHECK(d.descriptors[0].cx == doctest::Approx(-1.0));
  CHECK(d.descriptors[0].cy == doctest::Approx(-1.0));
  CHECK(d.descriptors[0].presence == sigmoid(50.0));
  CHECK(d.descriptors[0].ex == kExtentFloor);
  CHECK(d.boxes[0].x1 == doctest::Approx(-1.0 - kExtentFloor));
  CHECK(d.boxes[0].x2 == doctest::Approx(-1.0 + kExtentFloor));

  Rng rng(4, 0);
  for (int t = 0; t < 200; ++t) {
    const int K = 1 + int(rng.below(6));
    const auto stack = random_stack(rng, K, 2 + int(rng.below(10)), 2 + int(rng.below(10)), 3.0);
    const auto desc = describe(stack);
    REQUIRE(desc.descriptors.size() == std::size_t(K));
    for (int k = 0; k < K; ++k) {
      const auto& z = desc.descriptors[k];
      CHECK(z.cx >= -1.0);
      CHECK(z.cx <= 1.0);
      CHECK(z.cy >= -1.0);
      CHECK(z.cy <= 1.0);
      CHECK(z.presence >= 0.0);
      CHECK(z.presence <= 1.0);
      CHECK(z.ex >= kExtentFloor);
      CHECK(z.ex <= kExtentCeiling);
      CHECK(z.ey >= kExtentFloor);
      CHECK(z.ey <= kExtentCeiling);
      CHECK(desc.boxes[k].x1 <= desc.boxes[k].x2);
      CHECK(desc.boxes[k].y1 <= desc.boxes[k].y2);
      // Heatmap order: descriptor k is the one computed from plane k alone.
      std::vector<double> prob(stack.cells());
      normalize_heatmap<double>(stack.plane(k), stack.temperature, prob);
      const auto c = soft_coordinates<double>(prob, stack.height, stack.width);
      CHECK(z.cx == doctest::Approx(c.first).epsilon(1e-12));
      CHECK(plane_sum(prob) == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("describe backward matches finite differences") {
  Rng rng(5, 0);
  const double h = 1e-5;
  for (int t = 0; t < 10; ++t) {
    auto stack = random_stack(rng, 3, 5, 6, 1.0);
    std::vector<DescriptorGrad<double>> up(3);
    for (auto& g : up) {
      g.cx = rng.normal();
      g.cy = rng.normal();
      g.presence = rng.normal();
      g.ex = rng.normal();
      g.ey = rng.normal();
    }
    std::vector<double> up_prob(stack.logits.size());
    for (double& v : up_prob) v = rng.normal();
    auto objective = [&](const HeatmapStack<double>& s) {
      const auto d = describe(s);
      double f = 0;
      for (int k = 0; k < 3; ++k) {
        const auto& z = d.descriptors[k];
        f += up[k].cx * z.cx + up[k].cy * z.cy + up[k].presence * z.presence + up[k].ex * z.ex +
             up[k].ey * z.ey;
      }
      for (std::size_t i = 0; i < d.prob.size(); ++i) f += up_prob[i] * d.prob[i];
      return f;
    };
    const auto desc = describe(stack);
    std::vector<double> g(stack.logits.size());
    const double gt = describe_backward<double>(stack, desc, up, up_prob, g);
    for (std::size_t i = 0; i < stack.logits.size(); ++i) {
      // Presence is checked only where the argmax cannot change under the probe.
      const std::size_t k = i / stack.cells();
      double top = -1e9, second = -1e9;
      for (double v : stack.plane(int(k))) {
        if (v > top) {
          second = top;
          top = v;
        } else if (v > second) {
          second = v;
        }
      }
      if (top - second <= 10 * h) continue;
      auto plus = stack, minus = stack;
      plus.logits[i] += h;
      minus.logits[i] -= h;
      const double numeric = (objective(plus) - objective(minus)) / (2 * h);
      CAPTURE(i);
      CAPTURE(g[i]);
      CAPTURE(numeric);
      CHECK(relative_error(g[i], numeric) <= 1e-4);
    }
    auto plus = stack, minus = stack;
    plus.temperature += h;
    minus.temperature -= h;
    CHECK(relative_error(gt, (objective(plus) - objective(minus)) / (2 * h)) <= 1e-4);
  }
}

TEST_CASE("temperature parameterization") {
  CHECK(temperature_from_raw(temperature_raw_init<double>()) == doctest::Approx(0.5));
  CHECK(temperature_from_raw(-100.0) >= kTemperatureMin);
  CHECK(temperature_from_raw(-100.0) == doctest::Approx(kTemperatureMin));
}

TEST_CASE("loss_diversity examples") {
  const std::size_t cells = 9;
  std::vector<double> same(3 * cells);
  Rng rng(6, 0);
  for (std::size_t i = 0; i < cells; ++i) same[i] = rng.uniform(0.01, 1.0);
  for (int k = 1; k < 3; ++k)
    for (std::size_t i = 0; i < cells; ++i) same[k * cells + i] = same[i];
  CHECK(loss_diversity<double>(same, 3, cells) == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<double> disjoint(3 * cells, 0.0);
  for (int k = 0; k < 3; ++k) disjoint[k * cells + k] = 1.0;
  CHECK(loss_diversity<double>(disjoint, 3, cells) == 0.0);
  const std::vector<double> half{1, 1, 0, 1, 0, 1};
  CHECK(loss_diversity<double>(half, 2, 3) == doctest::Approx(0.5).epsilon(1e-12));
  bool degenerate = false;
  CHECK(loss_diversity<double>(std::span<const double>(same).first(cells), 1, cells, {}, 1.0,
                               &degenerate) == 0.0);
  CHECK(degenerate);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> r(4 * cells);
    for (double& v : r) v = rng.uniform(0.0, 1.0);
    const double d = loss_diversity<double>(r, 4, cells);
    CHECK(d >= 0.0);
    CHECK(d <= 1.0 + 1e-12);
  }
}

TEST_CASE("loss_concentration examples") {
  std::vector<double> onehot(16, 0.0);
  onehot[3] = 1.0;
  CHECK(loss_concentration<double>(onehot, 1, 16) ==
        doctest::Approx(-std::log(1.01)).epsilon(1e-12));
  CHECK(std::abs(loss_concentration<double>(onehot, 1, 16) - (-std::log(1.01))) <= 1e-6);
  std::vector<double> uniform(16, 1.0 / 16);
  CHECK(std::abs(loss_concentration<double>(uniform, 1, 16) - (-std::log(0.0725))) <= 1e-6);
  for (int H = 2; H <= 12; ++H)
    for (int W = 2; W <= 12; ++W) {
      const std::size_t n = std::size_t(H) * W;
      std::vector<double> o(n, 0.0), u(n, 1.0 / double(n));
      o[n / 2] = 1.0;
      CHECK(loss_concentration<double>(o, 1, n) < loss_concentration<double>(u, 1, n));
    }
}

TEST_CASE("regularizer reference values") {
  const auto r = suites::regularizer_values();
  MESSAGE(r.detail);
  CHECK(r.passed);
}

TEST_CASE("heatmap regularizer gradients match finite differences") {
  Rng rng(7, 0);
  const std::size_t cells = 6;
  const int K = 3;
  std::vector<double> p(K * cells);
  for (double& v : p) v = rng.uniform(0.05, 1.0);
  std::vector<double> gd(p.size(), 0.0), gc(p.size(), 0.0);
  loss_diversity<double>(p, K, cells, gd);
  loss_concentration<double>(p, K, cells, gc);
  const double h = 1e-6;
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto a = p, b = p;
    a[i] += h;
    b[i] -= h;
    const double nd = (loss_diversity<double>(a, K, cells) - loss_diversity<double>(b, K, cells)) / (2 * h);
    const double nc =
        (loss_concentration<double>(a, K, cells) - loss_concentration<double>(b, K, cells)) / (2 * h);
    CHECK(relative_error(gd[i], nd) <= 1e-5);
    CHECK(relative_error(gc[i], nc) <= 1e-5);
  }
}
