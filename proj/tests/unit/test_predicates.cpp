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
#include <numbers>
#include <vector>

#include "parse/mathcore.hpp"
#include "parse/predicates.hpp"
#include "parse/rng.hpp"
#include "suites.hpp"

using namespace parse;

namespace {

constexpr double kPi = std::numbers::pi;

Descriptor<double> at(double x, double y, double ex = 0.1, double ey = 0.1, double p = 0.9) {
  Descriptor<double> z;
  z.cx = x;
  z.cy = y;
  z.ex = ex;
  z.ey = ey;
  z.presence = p;
  return z;
}

Descriptor<double> random_descriptor(Rng& rng) {
  return at(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(kExtentFloor, 1.0),
            rng.uniform(kExtentFloor, 1.0), rng.uniform(0, 1));
}

}  // namespace

TEST_CASE("presence predicate is the identity") {
  for (double p : {1.0, 0.0, 0.37}) CHECK(eval_presence(at(0, 0, 0.1, 0.1, p)) == p);
}

TEST_CASE("binary predicate examples") {
  auto v = PredicateVocabulary<double>::defaults({});
  CHECK(eval_binary(Family::kNear, v, at(0.2, -0.4), at(0.2, -0.4)) == 1.0);
  v.kappa_above = 4;
  v.margin_above = 0.1;
  CHECK(eval_binary(Family::kAbove, v, at(0, 0), at(0, 0.6)) ==
        doctest::Approx(0.88080).epsilon(1e-5));
  CHECK(eval_binary(Family::kAbove, v, at(0, 0), at(0, 0.6)) == doctest::Approx(sigmoid(2.0)));
  v.kappa_contains = 10;
  CHECK(eval_binary(Family::kContains, v, at(0, 0, 0.5, 0.5), at(0, 0, 0.2, 0.2)) ==
        doctest::Approx(sigmoid(3.0)).epsilon(1e-12));
  CHECK(eval_binary(Family::kHAlign, v, at(-0.7, 0.3), at(0.9, 0.3)) == 1.0);
  CHECK(eval_binary(Family::kVAlign, v, at(0.3, -0.7), at(0.3, 0.9)) == 1.0);
  v.kappa_left = 3;
  v.margin_left = 0.0;
  CHECK(eval_binary(Family::kLeft, v, at(0, 0), at(0.5, 0)) == doctest::Approx(sigmoid(1.5)));
  CHECK(eval_binary(Family::kNear, v, at(0, 0), at(0.2, 0)) ==
        doctest::Approx(std::exp(-0.04 / (2 * 0.04))));
  CHECK(eval_binary(Family::kHAlign, v, at(0, 0), at(0, 0.2)) == doctest::Approx(std::exp(-0.5)));
}

TEST_CASE("ternary and quaternary predicate examples") {
  auto v = PredicateVocabulary<double>::defaults({});
  v.psi[0] = kPi / 3;
  const auto a = at(0, 0), b = at(1, 0), c = at(0.5, std::sqrt(3.0) / 2);
  CHECK(eval_ternary(Family::kTri, 0, v, a, b, c) == doctest::Approx(1.0).epsilon(1e-12));
  v.phi_turn[0] = 0.0;
  const double turn = eval_ternary(Family::kTurn, 0, v, at(-0.5, 0.1), at(0, 0.1), at(0.5, 0.1));
  // Collinear chains sit at the arccos clamp; the score is 1 up to that margin.
  CHECK(turn == doctest::Approx(1.0).epsilon(1e-4));
  v.psi[0] = kPi / 3;
  v.beta[0] = kPi / 6;
  CHECK(eval_ternary(Family::kTri, 0, v, at(0, 0), at(1, 0), at(0, 1)) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-9));

  v.phi_orient[0] = 0.0;
  CHECK(eval_quaternary(Family::kOrient, 0, v, at(0, 0), at(0.5, 0.2), at(-0.3, -0.6),
                        at(0.2, -0.4)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(eval_quaternary(Family::kEqDist, 0, v, at(0, 0), at(0.3, 0.4), at(-1, -1), at(-0.5, -1)) ==
        doctest::Approx(1.0).epsilon(1e-12));
  v.tau_d = 1.0;
  const double e = std::exp(1.0);
  CHECK(eval_quaternary(Family::kEqDist, 0, v, at(0, 0), at(0.1, 0), at(0, 0.5), at(0.1 * e, 0.5)) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("relation trace") {
  const auto t = relation_trace(at(0, 0), at(1, 0), at(0, 1));
  CHECK(t.interior_angle == doctest::Approx(kPi / 2));
  CHECK(t.turn_angle == doctest::Approx(3 * kPi / 4));
  CHECK(t.len_ij == doctest::Approx(1.0));
  CHECK(t.len_jk == doctest::Approx(std::sqrt(2.0)));
  Rng rng(1, 0);
  for (int i = 0; i < 1000; ++i) {
    const auto r = relation_trace(random_descriptor(rng), random_descriptor(rng), random_descriptor(rng));
    CHECK(r.interior_angle >= 0.0);
    CHECK(r.interior_angle <= kPi);
    CHECK(r.turn_angle >= 0.0);
    CHECK(r.turn_angle <= kPi);
  }
}

TEST_CASE("angle diversity examples") {
  auto v = PredicateVocabulary<double>::defaults({0, 0, 2});
  v.phi_orient = {0.0, kPi};
  CHECK(loss_angle_diversity(v) == doctest::Approx(1.0 / 4.01).epsilon(1e-12));
  v.phi_orient = {0.7, 0.7};
  CHECK(std::abs(loss_angle_diversity(v) - 100.0) <= 1e-9);
  double prev = 1e9;
  for (double a = 0.05; a < kPi; a += 0.05) {
    v.phi_orient = {0.0, a};
    const double d = loss_angle_diversity(v);
    CHECK(d < prev);
    prev = d;
  }
  auto one = PredicateVocabulary<double>::defaults({3, 1, 1});
  CHECK(loss_angle_diversity(one) == 0.0);
  // Only orientation targets enter: moving psi and phi_turn changes nothing.
  auto base = PredicateVocabulary<double>::defaults({});
  auto moved = base;
  moved.psi[0] += 0.4;
  moved.phi_turn[0] -= 0.3;
  CHECK(loss_angle_diversity(base) == loss_angle_diversity(moved));
  std::vector<double> g(base.phi_orient.size(), 0.0);
  loss_angle_diversity(base, std::span<double>(g));
  const double h = 1e-6;
  for (std::size_t m = 0; m < g.size(); ++m) {
    auto p = base, q = base;
    p.phi_orient[m] += h;
    q.phi_orient[m] -= h;
    CHECK(relative_error(g[m], (loss_angle_diversity(p) - loss_angle_diversity(q)) / (2 * h)) <=
          1e-6);
  }
}

TEST_CASE("positive parameter mapping") {
  for (double y : {0.002, 0.2, 5.0, 40.0}) CHECK(positive_from_raw(positive_to_raw(y)) == doctest::Approx(y));
  CHECK(positive_from_raw(-60.0) >= kPositiveFloor);
  const double h = 1e-6;
  for (double r : {-3.0, 0.0, 2.5})
    CHECK(positive_raw_slope(r) ==
          doctest::Approx((positive_from_raw(r + h) - positive_from_raw(r - h)) / (2 * h)));
}

TEST_CASE("predicate property suite over random configurations") {
  const auto r = suites::predicate_properties(10000, 42);
  MESSAGE(r.detail);
  CHECK(r.passed);
}
