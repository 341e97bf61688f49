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

#include "parse/error.hpp"
#include "parse/rng.hpp"
#include "parse/scoring.hpp"

using namespace parse;

TEST_CASE("class_weights examples") {
  const std::vector<double> zeros(2 * 5, 0.0);
  for (double v : class_weights<double>(zeros, 2, 5)) CHECK(v == doctest::Approx(0.2));
  std::vector<double> lam(2 * 5, -2.0);
  lam[0] = 10;
  lam[5] = 0.9;
  lam[6] = 0.5;
  lam[7] = 0.1;
  const auto w = class_weights<double>(lam, 2, 5);
  CHECK(w[0] == 1.0);
  for (int m = 1; m < 5; ++m) CHECK(w[m] == 0.0);
  CHECK(w[5] == doctest::Approx(0.7));
  CHECK(w[6] == doctest::Approx(0.3));
  CHECK(w[7] == 0.0);
  CHECK(w[8] == 0.0);
  CHECK_THROWS_AS(class_weights<double>(std::span<const double>(lam).first(9), 2, 5), InvalidArgument);
}

TEST_CASE("class_scores examples") {
  std::vector<double> w(3 * 4, 0.0);
  w[2] = 1.0;
  w[4] = w[5] = w[6] = w[7] = 0.25;
  w[8] = 0.5;
  w[11] = 0.5;
  const std::vector<double> a{0.1, 0.2, 0.8, 0.4};
  const auto s = class_scores<double>(w, 3, a);
  CHECK(s[0] == doctest::Approx(0.8));
  CHECK(s[1] == doctest::Approx(0.375));
  CHECK(s[2] == doctest::Approx(0.25));
  const std::vector<double> ones(4, 1.0);
  for (double v : class_scores<double>(w, 3, ones)) CHECK(v == doctest::Approx(1.0));
  CHECK_THROWS_AS(class_scores<double>(w, 3, std::span<const double>(a).first(3)), InvalidArgument);

  Rng rng(1, 0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> lam(4 * 30), act(30);
    for (double& v : lam) v = rng.normal();
    for (double& v : act) v = rng.uniform();
    const auto W = class_weights<double>(lam, 4, 30);
    const auto sc = class_scores<double>(W, 4, act);
    for (int c = 0; c < 4; ++c) {
      double dot = 0;
      for (int m = 0; m < 30; ++m) dot += W[c * 30 + m] * act[m];
      CHECK(sc[c] == doctest::Approx(dot).epsilon(1e-13));
      CHECK(sc[c] >= 0.0);
      CHECK(sc[c] <= 1.0 + 1e-12);
    }
    // A constant added to a row changes nothing.
    auto shifted = lam;
    for (int m = 0; m < 30; ++m) shifted[30 + m] += 0.75;
    const auto moved = class_scores<double>(class_weights<double>(shifted, 4, 30), 4, act);
    for (int c = 0; c < 4; ++c) CHECK(moved[c] == doctest::Approx(sc[c]).epsilon(1e-12));
  }
}

TEST_CASE("cross entropy examples") {
  const std::vector<double> even{0, 0};
  CHECK(cross_entropy<double>(even, 0) == doctest::Approx(std::log(2.0)));
  const std::vector<double> big{50, 0, 0};
  CHECK(cross_entropy<double>(big, 0) < 1e-20);
  const std::vector<double> two{2, 0};
  CHECK(cross_entropy<double>(two, 0) == doctest::Approx(-std::log(std::exp(2.0) / (std::exp(2.0) + 1))).epsilon(1e-12));
  CHECK(cross_entropy<double>(two, 0) == doctest::Approx(0.12693).epsilon(1e-4));
  CHECK_THROWS_AS(cross_entropy<double>(two, 2), InvalidArgument);
  CHECK_THROWS_AS(cross_entropy<double>(two, -1), InvalidArgument);
  std::vector<double> g(3, 0.0);
  const std::vector<double> l{0.3, -1.2, 2.0};
  cross_entropy<double>(l, 1, g);
  const double h = 1e-6;
  for (int i = 0; i < 3; ++i) {
    auto p = l, m = l;
    p[i] += h;
    m[i] -= h;
    CHECK(g[i] == doctest::Approx((cross_entropy<double>(p, 1) - cross_entropy<double>(m, 1)) / (2 * h)));
  }
}

TEST_CASE("sparsity penalty examples") {
  const std::vector<double> z(6, 0.0), twos(6, 2.0), m{1, -3, 0, 2};
  CHECK(sparsity_penalty<double>(z) == 0.0);
  CHECK(sparsity_penalty<double>(twos) == 2.0);
  CHECK(sparsity_penalty<double>(m) == 1.5);
  std::vector<double> g(4, 0.0);
  sparsity_penalty<double>(m, g);
  CHECK(g[0] == 0.25);
  CHECK(g[1] == -0.25);
  CHECK(g[2] == 0.0);
  CHECK(g[3] == 0.25);
}

TEST_CASE("logit scale") {
  CHECK(omega_from_raw(omega_raw_init<double>()) == doctest::Approx(10.0));
  CHECK(omega_from_raw(-30.0) > 0.0);
}

TEST_CASE("total loss composition") {
  Rng rng(2, 0);
  const int K = 2, C = 3;
  const std::size_t cells = 4;
  std::vector<std::vector<double>> logits(2, std::vector<double>(C));
  for (auto& l : logits)
    for (double& v : l) v = rng.normal();
  const std::vector<int> labels{1, 2};
  std::vector<std::vector<double>> probs(2, std::vector<double>(K * cells, 0.25));
  probs[1][0] = 0.7;
  probs[1][1] = 0.1;
  probs[1][2] = 0.1;
  probs[1][3] = 0.1;
  const std::vector<double> lam(C * 5, 2.0);
  const auto vocab = PredicateVocabulary<double>::defaults({});
  const double ce = (cross_entropy<double>(logits[0], 1) + cross_entropy<double>(logits[1], 2)) / 2;

  LossConfig off{0, 0, 0, 0};
  auto r = total_loss<double>(logits, labels, lam, probs, K, cells, &vocab, off);
  CHECK(std::abs(r.total - ce) <= 1e-7);
  CHECK(r.ce == doctest::Approx(ce));

  LossConfig sparse_only{1, 0, 0, 0};
  r = total_loss<double>(logits, labels, lam, probs, K, cells, &vocab, sparse_only);
  CHECK(r.total == doctest::Approx(ce + 2.0).epsilon(1e-12));

  LossConfig all{0.3, 0.5, 0.2, 0.1};
  r = total_loss<double>(logits, labels, lam, probs, K, cells, &vocab, all);
  CHECK(r.total == doctest::Approx(r.ce + 0.3 * r.sparse + 0.5 * (r.diversity + 0.2 * r.concentration) +
                                   0.1 * r.angle)
                       .epsilon(1e-12));
  CHECK(r.angle == doctest::Approx(loss_angle_diversity(vocab)));

  // No-Relations head: no Lambda and no vocabulary.
  r = total_loss<double>(logits, labels, {}, probs, K, cells, nullptr, all);
  CHECK(r.sparse == 0.0);
  CHECK(r.angle == 0.0);
  CHECK(r.total == doctest::Approx(r.ce + 0.5 * (r.diversity + 0.2 * r.concentration)));
}
