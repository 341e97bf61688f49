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
#include <set>
#include <vector>

#include "parse/catalog.hpp"
#include "parse/error.hpp"
#include "parse/mathcore.hpp"
#include "parse/rng.hpp"
#include "suites.hpp"

using namespace parse;

namespace {

std::vector<Descriptor<double>> random_descriptors(Rng& rng, int K) {
  std::vector<Descriptor<double>> d(K);
  for (auto& z : d) {
    z.cx = rng.uniform(-1, 1);
    z.cy = rng.uniform(-1, 1);
    z.presence = rng.uniform(0, 1);
    z.ex = rng.uniform(0.01, 0.8);
    z.ey = rng.uniform(0.01, 0.8);
  }
  return d;
}

double direct(const CatalogEntry& e, const PredicateVocabulary<double>& v,
              const std::vector<Descriptor<double>>& d) {
  const auto& i = e.idx;
  switch (e.arity()) {
    case 1: return eval_presence(d[i[0]]);
    case 2: return eval_binary(e.family, v, d[i[0]], d[i[1]]);
    case 3: return eval_ternary(e.family, e.instance, v, d[i[0]], d[i[1]], d[i[2]]);
    default: return eval_quaternary(e.family, e.instance, v, d[i[0]], d[i[1]], d[i[2]], d[i[3]]);
  }
}

}  // namespace

TEST_CASE("catalog size at K=3 and K=1") {
  const auto c3 = RelationCatalog::build(3, {});
  CHECK(c3.size() == 42);
  CHECK(c3.count(Family::kPresence) == 3);
  CHECK(c3.count(Family::kAbove) + c3.count(Family::kLeft) + c3.count(Family::kContains) == 18);
  CHECK(c3.count(Family::kHAlign) + c3.count(Family::kVAlign) + c3.count(Family::kNear) == 9);
  CHECK(c3.count(Family::kTri) == 9);
  CHECK(c3.count(Family::kTurn) == 3);
  CHECK(c3.count(Family::kOrient) + c3.count(Family::kEqDist) == 0);
  CHECK(closed_form_size(3, {}) == 42);
  CHECK(RelationCatalog::build(1, {}).size() == 1);
  CHECK_THROWS_AS(RelationCatalog::build(0, {}), InvalidArgument);
}

TEST_CASE("closed form equals exhaustive enumeration for K = 4..20") {
  for (int K = 4; K <= 20; ++K) {
    const auto oracle = suites::oracle_entries(K, {});
    const auto cat = RelationCatalog::build(K, {});
    CAPTURE(K);
    CHECK(closed_form_size(K, {}) == oracle.size());
    CHECK(cat.size() == oracle.size());
    // Same entries in the documented order.
    REQUIRE(cat.entries() == oracle);
  }
  // Other vocabulary counts and family subsets follow the same closed form.
  for (VocabCounts counts : {VocabCounts{1, 2, 3}, VocabCounts{0, 0, 0}, VocabCounts{5, 1, 2}}) {
    const auto oracle = suites::oracle_entries(7, counts);
    CHECK(closed_form_size(7, counts) == oracle.size());
    CHECK(RelationCatalog::build(7, counts).size() == oracle.size());
  }
  FamilySwitches only_binary{false, true, false, false};
  CHECK(RelationCatalog::build(6, {}, only_binary).size() == 6 * 5 * 3 + 15 * 3);
  CHECK(closed_form_size(6, {}, only_binary) == 6 * 5 * 3 + 15 * 3);
}

TEST_CASE("catalog correctness suite") {
  const auto r = suites::catalog_correctness();
  MESSAGE(r.detail);
  CHECK(r.passed);
}

TEST_CASE("index and tuple form a bijection at K=16") {
  const auto cat = RelationCatalog::build(16, {});
  CHECK(cat.size() == closed_form_size(16, {}));
  MESSAGE("M(K=16, default counts) = " << cat.size());
  CHECK(cat.size() == 100636);
  std::set<std::uint64_t> keys;
  for (std::size_t m = 0; m < cat.size(); ++m) {
    const auto& e = cat.entry(m);
    REQUIRE(cat.index_of(e) == m);
    for (int a = 0; a < e.arity(); ++a) {
      REQUIRE(e.idx[a] < 16);
      for (int b = a + 1; b < e.arity(); ++b) REQUIRE(e.idx[a] != e.idx[b]);
    }
    keys.insert(e.key());
  }
  CHECK(keys.size() == cat.size());
  CatalogEntry bogus;
  bogus.family = Family::kNear;
  bogus.idx = {3, 1, 0, 0};  // near is canonical only with i < j
  CHECK_FALSE(cat.contains(bogus));
  CHECK_THROWS_AS(cat.index_of(bogus), InvalidArgument);
}

TEST_CASE("fingerprint") {
  const auto a = RelationCatalog::build(16, {}), b = RelationCatalog::build(16, {});
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(a.fingerprint() != RelationCatalog::build(15, {}).fingerprint());
  CHECK(a.fingerprint().size() == 16);
  for (char c : a.fingerprint()) CHECK(((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')));
  CHECK(a.fingerprint() == hex64(fnv1a64(a.canonical_listing())));
  CHECK(hex64(fnv1a64("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a64("a")) == "af63dc4c8601ec8c");
}

TEST_CASE("restrict keeps the chosen entries") {
  const auto cat = RelationCatalog::build(5, {});
  const std::vector<std::size_t> keep{0, 7, 30, 100, cat.size() - 1};
  const auto sub = cat.restrict(keep);
  CHECK(sub.compacted());
  REQUIRE(sub.size() == keep.size());
  for (std::size_t n = 0; n < keep.size(); ++n) CHECK(sub.entry(n) == cat.entry(keep[n]));
  CHECK(sub.fingerprint() != cat.fingerprint());
}

TEST_CASE("activations match direct kernel calls") {
  Rng rng(3, 0);
  for (int K : {1, 3, 5, 8}) {
    const auto cat = RelationCatalog::build(K, {});
    for (int t = 0; t < 5; ++t) {
      const auto d = random_descriptors(rng, K);
      auto v = PredicateVocabulary<double>::defaults({});
      v.margin_above = rng.uniform(-0.2, 0.2);
      v.psi[1] = rng.uniform(0.5, 2.5);
      const auto a = evaluate_activations<double>(cat, v, d);
      REQUIRE(a.size() == cat.size());
      for (std::size_t m = 0; m < cat.size(); ++m) {
        REQUIRE(a[m] >= 0.0);
        REQUIRE(a[m] <= 1.0);
        REQUIRE(a[m] == doctest::Approx(direct(cat.entry(m), v, d)).epsilon(1e-12));
      }
    }
  }
  const auto one = RelationCatalog::build(1, {});
  std::vector<Descriptor<double>> single(1);
  single[0].presence = 0.42;
  CHECK(evaluate_activations<double>(one, PredicateVocabulary<double>::defaults({}), single) ==
        std::vector<double>{0.42});
  const auto cat = RelationCatalog::build(4, {});
  auto same = random_descriptors(rng, 4);
  for (auto& z : same) {
    z.cx = 0.1;
    z.cy = -0.3;
  }
  const auto a = evaluate_activations<double>(cat, PredicateVocabulary<double>::defaults({}), same);
  for (std::size_t m = 0; m < cat.size(); ++m)
    if (cat.entry(m).family == Family::kNear) CHECK(a[m] == 1.0);
  CHECK_THROWS_AS(evaluate_activations<double>(cat, PredicateVocabulary<double>::defaults({}),
                                               std::span<const Descriptor<double>>(same).first(3)),
                  InvalidArgument);
}

TEST_CASE("activation gradients match finite differences") {
  Rng rng(8, 0);
  const int K = 5;
  const auto cat = RelationCatalog::build(K, {});
  const double h = 1e-6;
  for (int t = 0; t < 3; ++t) {
    const auto d = random_descriptors(rng, K);
    auto v = PredicateVocabulary<double>::defaults({});
    std::vector<double> w(cat.size());
    for (double& x : w) x = rng.normal();
    auto objective = [&](const std::vector<Descriptor<double>>& dd,
                         const PredicateVocabulary<double>& vv) {
      const auto a = evaluate_activations<double>(cat, vv, dd);
      double s = 0;
      for (std::size_t m = 0; m < a.size(); ++m) s += w[m] * a[m];
      return s;
    };
    std::vector<DescriptorGrad<double>> gd(K, zero_descriptor_grad<double>());
    auto gv = PredicateVocabulary<double>::zeros({});
    activations_backward<double>(cat, v, d, w, gd, gv);
    for (int k = 0; k < K; ++k) {
      for (double Descriptor<double>::*field :
           {&Descriptor<double>::cx, &Descriptor<double>::cy, &Descriptor<double>::presence,
            &Descriptor<double>::ex, &Descriptor<double>::ey}) {
        auto p = d, m = d;
        p[k].*field += h;
        m[k].*field -= h;
        const double numeric = (objective(p, v) - objective(m, v)) / (2 * h);
        CHECK(relative_error(gd[k].*field, numeric) <= 1e-5);
      }
    }
    for (double PredicateVocabulary<double>::*field :
         {&PredicateVocabulary<double>::kappa_above, &PredicateVocabulary<double>::margin_above,
          &PredicateVocabulary<double>::kappa_left, &PredicateVocabulary<double>::margin_left,
          &PredicateVocabulary<double>::tau_h, &PredicateVocabulary<double>::tau_v,
          &PredicateVocabulary<double>::rho, &PredicateVocabulary<double>::kappa_contains,
          &PredicateVocabulary<double>::tau_d}) {
      auto p = v, m = v;
      p.*field += h;
      m.*field -= h;
      CHECK(relative_error(gv.*field, (objective(d, p) - objective(d, m)) / (2 * h)) <= 1e-5);
    }
    for (auto field : {&PredicateVocabulary<double>::psi, &PredicateVocabulary<double>::beta,
                       &PredicateVocabulary<double>::phi_turn, &PredicateVocabulary<double>::eta,
                       &PredicateVocabulary<double>::phi_orient,
                       &PredicateVocabulary<double>::gamma})
      for (std::size_t n = 0; n < (v.*field).size(); ++n) {
        auto p = v, m = v;
        (p.*field)[n] += h;
        (m.*field)[n] -= h;
        CHECK(relative_error((gv.*field)[n], (objective(d, p) - objective(d, m)) / (2 * h)) <= 1e-5);
      }
  }
}
