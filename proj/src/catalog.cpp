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

#include "parse/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "parse/error.hpp"
#include "parse/mathcore.hpp"

namespace parse {

bool FamilySwitches::enabled(Family f) const {
  switch (family_arity(f)) {
    case 1:
      return presence;
    case 2:
      return binary;
    case 3:
      return ternary;
    case 4:
      return quaternary;
  }
  return false;
}

std::uint64_t CatalogEntry::key() const {
  return (std::uint64_t(family) << 48) | (std::uint64_t(instance) << 32) |
         (std::uint64_t(idx[0]) << 24) | (std::uint64_t(idx[1]) << 16) |
         (std::uint64_t(idx[2]) << 8) | std::uint64_t(idx[3]);
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string entry_label(const CatalogEntry& e) {
  std::string s(family_name(e.family));
  s += '/';
  s += std::to_string(e.instance);
  s += ':';
  for (int r = 0; r < e.arity(); ++r) {
    if (r) s += ',';
    s += std::to_string(e.idx[r]);
  }
  return s;
}

namespace {

std::uint64_t choose2(std::uint64_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

void push(std::vector<CatalogEntry>& out, Family f, int inst, int i, int j = 0, int k = 0,
          int l = 0) {
  CatalogEntry e;
  e.family = f;
  e.instance = static_cast<std::uint8_t>(inst);
  e.idx = {static_cast<std::uint8_t>(i), static_cast<std::uint8_t>(j),
           static_cast<std::uint8_t>(k), static_cast<std::uint8_t>(l)};
  out.push_back(e);
}

}  // namespace

std::uint64_t closed_form_size(int primitives, const VocabCounts& counts,
                               const FamilySwitches& sw) {
  const std::uint64_t K = primitives;
  std::uint64_t m = 0;
  if (sw.presence) m += K;
  if (sw.binary && K >= 2) m += 3 * K * (K - 1) + 3 * choose2(K);
  if (sw.ternary && K >= 3) m += std::uint64_t(counts.tri + counts.turn) * K * choose2(K - 1);
  if (sw.quaternary && K >= 4) {
    m += std::uint64_t(counts.orient) * choose2(K) * (K - 2) * (K - 3);
    m += choose2(K) * choose2(K - 2) / 2;
  }
  return m;
}

RelationCatalog RelationCatalog::build(int K, const VocabCounts& counts,
                                       const FamilySwitches& sw) {
  if (K <= 0) throw InvalidArgument("build_catalog: K must be at least 1");
  if (K > 255) throw InvalidArgument("build_catalog: K must be at most 255");
  if (counts.tri < 0 || counts.turn < 0 || counts.orient < 0 || counts.tri > 255 ||
      counts.turn > 255 || counts.orient > 255)
    throw InvalidArgument("build_catalog: invalid vocabulary counts");
  RelationCatalog c;
  c.primitives_ = K;
  c.counts_ = counts;
  c.switches_ = sw;
  auto& out = c.entries_;
  out.reserve(closed_form_size(K, counts, sw));

  if (sw.presence)
    for (int i = 0; i < K; ++i) push(out, Family::kPresence, 0, i);

  if (sw.binary) {
    for (Family f : {Family::kAbove, Family::kLeft, Family::kHAlign, Family::kVAlign,
                     Family::kNear, Family::kContains}) {
      const bool symmetric =
          f == Family::kHAlign || f == Family::kVAlign || f == Family::kNear;
      for (int i = 0; i < K; ++i)
        for (int j = symmetric ? i + 1 : 0; j < K; ++j)
          if (i != j) push(out, f, 0, i, j);
    }
  }

  if (sw.ternary) {
    for (int n = 0; n < counts.tri; ++n)
      for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j)
          for (int k = j + 1; k < K; ++k)
            if (j != i && k != i) push(out, Family::kTri, n, i, j, k);
    for (int t = 0; t < counts.turn; ++t)
      for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j)
          for (int k = i + 1; k < K; ++k)
            if (j != i && j != k) push(out, Family::kTurn, t, i, j, k);
  }

  if (sw.quaternary) {
    for (int m = 0; m < counts.orient; ++m)
      for (int i = 0; i < K; ++i)
        for (int j = i + 1; j < K; ++j)
          for (int k = 0; k < K; ++k)
            for (int l = 0; l < K; ++l)
              if (k != l && k != i && k != j && l != i && l != j)
                push(out, Family::kOrient, m, i, j, k, l);
    for (int i = 0; i < K; ++i)
      for (int j = i + 1; j < K; ++j)
        for (int k = i + 1; k < K; ++k)
          for (int l = k + 1; l < K; ++l)
            if (k != j && l != j) push(out, Family::kEqDist, 0, i, j, k, l);
  }
  c.finalize();
  return c;
}

RelationCatalog RelationCatalog::from_entries(int K, const VocabCounts& counts,
                                              const FamilySwitches& sw,
                                              std::vector<CatalogEntry> entries,
                                              bool compacted) {
  if (K <= 0 || K > 255) throw InvalidArgument("catalog: K out of range");
  RelationCatalog c;
  c.primitives_ = K;
  c.counts_ = counts;
  c.switches_ = sw;
  c.compacted_ = compacted;
  for (const CatalogEntry& e : entries) {
    const int r = e.arity();
    for (int a = 0; a < r; ++a) {
      if (e.idx[a] >= K) throw InvalidArgument("catalog entry index out of range");
      for (int b = a + 1; b < r; ++b)
        if (e.idx[a] == e.idx[b]) throw InvalidArgument("catalog entry repeats a primitive");
    }
    const int instances = e.family == Family::kTri      ? counts.tri
                          : e.family == Family::kTurn   ? counts.turn
                          : e.family == Family::kOrient ? counts.orient
                                                        : 1;
    if (e.instance >= instances) throw InvalidArgument("catalog entry instance out of range");
  }
  c.entries_ = std::move(entries);
  c.finalize();
  return c;
}

void RelationCatalog::finalize() {
  index_.clear();
  index_.reserve(entries_.size() * 2);
  for (std::size_t m = 0; m < entries_.size(); ++m) {
    if (!index_.emplace(entries_[m].key(), m).second)
      throw InvalidArgument("catalog: duplicate entry " + entry_label(entries_[m]));
  }
  fingerprint_ = hex64(fnv1a64(canonical_listing()));
}

std::size_t RelationCatalog::index_of(const CatalogEntry& e) const {
  auto it = index_.find(e.key());
  if (it == index_.end()) throw InvalidArgument("entry not in catalog: " + entry_label(e));
  return it->second;
}

RelationCatalog RelationCatalog::restrict(std::span<const std::size_t> indices) const {
  std::vector<CatalogEntry> kept;
  kept.reserve(indices.size());
  std::size_t prev = 0;
  for (std::size_t n = 0; n < indices.size(); ++n) {
    if (indices[n] >= entries_.size()) throw InvalidArgument("restrict: index out of range");
    if (n > 0 && indices[n] <= prev) throw InvalidArgument("restrict: indices must be sorted");
    prev = indices[n];
    kept.push_back(entries_[indices[n]]);
  }
  return from_entries(primitives_, counts_, switches_, std::move(kept), true);
}

std::string RelationCatalog::canonical_listing() const {
  std::string s = "parse-catalog canon=" + std::to_string(kCanonicalizationVersion) +
                  " K=" + std::to_string(primitives_) + " tri=" + std::to_string(counts_.tri) +
                  " turn=" + std::to_string(counts_.turn) +
                  " orient=" + std::to_string(counts_.orient) + " families=" +
                  (switches_.presence ? "p" : "-") + (switches_.binary ? "b" : "-") +
                  (switches_.ternary ? "t" : "-") + (switches_.quaternary ? "q" : "-") +
                  " compacted=" + (compacted_ ? "1" : "0") + "\n";
  s.reserve(s.size() + entries_.size() * 16);
  for (const CatalogEntry& e : entries_) {
    s += entry_label(e);
    s += '\n';
  }
  return s;
}

std::size_t RelationCatalog::count(Family f) const {
  return std::size_t(std::count_if(entries_.begin(), entries_.end(),
                                   [f](const CatalogEntry& e) { return e.family == f; }));
}

namespace {

// Shared forward/backward sweep so both paths see bit-identical activations.
template <typename Real, bool kBackward>
void sweep(const RelationCatalog& catalog, const PredicateVocabulary<Real>& v,
           std::span<const Descriptor<Real>> d, std::span<Real> act,
           std::span<const Real> grad_act, std::span<DescriptorGrad<Real>> gd,
           PredicateVocabulary<Real>* gv) {
  const EdgeCache<Real> e = build_edges<Real>(d);
  EdgeGrad<Real> ge(kBackward ? catalog.primitives() : 0);
  std::vector<Real> cos_orient(v.phi_orient.size()), sin_orient(v.phi_orient.size());
  for (std::size_t m = 0; m < v.phi_orient.size(); ++m) {
    cos_orient[m] = std::cos(v.phi_orient[m]);
    sin_orient[m] = std::sin(v.phi_orient[m]);
  }
  const std::size_t M = catalog.size();
  for (std::size_t m = 0; m < M; ++m) {
    const CatalogEntry& en = catalog.entry(m);
    const int i = en.idx[0], j = en.idx[1], k = en.idx[2], l = en.idx[3];
    const Real g = kBackward ? grad_act[m] : Real(0);
    if (kBackward && g == Real(0)) continue;
    Real s = 0;
    switch (en.family) {
      case Family::kPresence:
        s = d[i].presence;
        if constexpr (kBackward) gd[i].presence += g;
        break;
      case Family::kAbove:
      case Family::kLeft: {
        const bool above = en.family == Family::kAbove;
        const Real kappa = above ? v.kappa_above : v.kappa_left;
        const Real margin = above ? v.margin_above : v.margin_left;
        const Real diff = above ? d[j].cy - d[i].cy : d[j].cx - d[i].cx;
        s = sigmoid(kappa * (diff - margin));
        if constexpr (kBackward) {
          const Real gx = g * s * (Real(1) - s);
          if (above) {
            gv->kappa_above += gx * (diff - margin);
            gv->margin_above -= gx * kappa;
            gd[j].cy += gx * kappa;
            gd[i].cy -= gx * kappa;
          } else {
            gv->kappa_left += gx * (diff - margin);
            gv->margin_left -= gx * kappa;
            gd[j].cx += gx * kappa;
            gd[i].cx -= gx * kappa;
          }
        }
        break;
      }
      case Family::kHAlign:
      case Family::kVAlign: {
        const bool h = en.family == Family::kHAlign;
        const Real tau = h ? v.tau_h : v.tau_v;
        const Real diff = h ? d[i].cy - d[j].cy : d[i].cx - d[j].cx;
        const Real t2 = tau * tau;
        s = std::exp(-diff * diff / (Real(2) * t2));
        if constexpr (kBackward) {
          const Real gdiff = -g * s * diff / t2;
          (h ? gv->tau_h : gv->tau_v) += g * s * diff * diff / (t2 * tau);
          if (h) {
            gd[i].cy += gdiff;
            gd[j].cy -= gdiff;
          } else {
            gd[i].cx += gdiff;
            gd[j].cx -= gdiff;
          }
        }
        break;
      }
      case Family::kNear: {
        const Real dx = d[i].cx - d[j].cx, dy = d[i].cy - d[j].cy;
        const Real r2 = v.rho * v.rho;
        const Real dist2 = dx * dx + dy * dy;
        s = std::exp(-dist2 / (Real(2) * r2));
        if constexpr (kBackward) {
          const Real c = -g * s / r2;
          gd[i].cx += c * dx;
          gd[j].cx -= c * dx;
          gd[i].cy += c * dy;
          gd[j].cy -= c * dy;
          gv->rho += g * s * dist2 / (r2 * v.rho);
        }
        break;
      }
      case Family::kContains: {
        const Descriptor<Real>& a = d[i];
        const Descriptor<Real>& b = d[j];
        const Real margins[4] = {(b.cx - b.ex) - (a.cx - a.ex), (b.cy - b.ey) - (a.cy - a.ey),
                                 (a.cx + a.ex) - (b.cx + b.ex), (a.cy + a.ey) - (b.cy + b.ey)};
        int arg = 0;
        for (int q = 1; q < 4; ++q)
          if (margins[q] < margins[arg]) arg = q;
        const Real mn = margins[arg];
        s = sigmoid(v.kappa_contains * mn);
        if constexpr (kBackward) {
          const Real gs = g * s * (Real(1) - s);
          gv->kappa_contains += gs * mn;
          const Real gm = gs * v.kappa_contains;
          switch (arg) {
            case 0:
              gd[j].cx += gm, gd[j].ex -= gm, gd[i].cx -= gm, gd[i].ex += gm;
              break;
            case 1:
              gd[j].cy += gm, gd[j].ey -= gm, gd[i].cy -= gm, gd[i].ey += gm;
              break;
            case 2:
              gd[i].cx += gm, gd[i].ex += gm, gd[j].cx -= gm, gd[j].ex -= gm;
              break;
            default:
              gd[i].cy += gm, gd[i].ey += gm, gd[j].cy -= gm, gd[j].ey -= gm;
              break;
          }
        }
        break;
      }
      case Family::kTri:
      case Family::kTurn: {
        const bool tri = en.family == Family::kTri;
        const std::size_t a = e.at(i, j);
        const std::size_t b = tri ? e.at(i, k) : e.at(j, k);
        const Real dot = e.ux[a] * e.ux[b] + e.uy[a] * e.uy[b];
        Real slope = 0;
        const Real angle = clamped_acos<Real>(dot, kBackward ? &slope : nullptr);
        const int n = en.instance;
        const Real target = tri ? v.psi[n] : v.phi_turn[n];
        const Real width = tri ? v.beta[n] : v.eta[n];
        const BumpGrad<Real> bg = gaussian_bump_grad(angle, target, width);
        s = bg.value;
        if constexpr (kBackward) {
          (tri ? gv->psi[n] : gv->phi_turn[n]) += g * bg.d_target;
          (tri ? gv->beta[n] : gv->eta[n]) += g * bg.d_width;
          const Real gdot = g * bg.d_x * slope;
          ge.ux[a] += gdot * e.ux[b];
          ge.uy[a] += gdot * e.uy[b];
          ge.ux[b] += gdot * e.ux[a];
          ge.uy[b] += gdot * e.uy[a];
        }
        break;
      }
      case Family::kOrient: {
        const std::size_t a = e.at(i, j), b = e.at(k, l);
        const int n = en.instance;
        const Real dot = e.ux[a] * e.ux[b] + e.uy[a] * e.uy[b];
        const Real err = dot - cos_orient[n];
        const Real g2 = v.gamma[n] * v.gamma[n];
        s = std::exp(-err * err / (Real(2) * g2));
        if constexpr (kBackward) {
          const Real gerr = -g * s * err / g2;
          gv->phi_orient[n] += gerr * sin_orient[n];
          gv->gamma[n] += g * s * err * err / (g2 * v.gamma[n]);
          ge.ux[a] += gerr * e.ux[b];
          ge.uy[a] += gerr * e.uy[b];
          ge.ux[b] += gerr * e.ux[a];
          ge.uy[b] += gerr * e.uy[a];
        }
        break;
      }
      case Family::kEqDist: {
        const std::size_t a = e.at(i, j), b = e.at(k, l);
        const Real r = e.log_norm[a] - e.log_norm[b];
        const Real t2 = v.tau_d * v.tau_d;
        s = std::exp(-r * r / (Real(2) * t2));
        if constexpr (kBackward) {
          const Real gr = -g * s * r / t2;
          ge.log_norm[a] += gr;
          ge.log_norm[b] -= gr;
          gv->tau_d += g * s * r * r / (t2 * v.tau_d);
        }
        break;
      }
    }
    if constexpr (!kBackward) act[m] = s;
  }
  if constexpr (kBackward) edges_backward<Real>(e, ge, gd);
}

}  // namespace

template <typename Real>
std::vector<Real> evaluate_activations(const RelationCatalog& catalog,
                                       const PredicateVocabulary<Real>& vocab,
                                       std::span<const Descriptor<Real>> descriptors) {
  if (int(descriptors.size()) != catalog.primitives())
    throw InvalidArgument("evaluate_activations: expected " +
                          std::to_string(catalog.primitives()) + " descriptors, got " +
                          std::to_string(descriptors.size()));
  if (!(vocab.counts() == catalog.counts()))
    throw InvalidArgument("evaluate_activations: vocabulary counts do not match catalog");
  std::vector<Real> a(catalog.size());
  sweep<Real, false>(catalog, vocab, descriptors, a, {}, {}, nullptr);
  return a;
}

template <typename Real>
void activations_backward(const RelationCatalog& catalog, const PredicateVocabulary<Real>& vocab,
                          std::span<const Descriptor<Real>> descriptors,
                          std::span<const Real> grad_activations,
                          std::span<DescriptorGrad<Real>> grad_descriptors,
                          PredicateVocabulary<Real>& grad_vocab) {
  if (int(descriptors.size()) != catalog.primitives() ||
      grad_descriptors.size() != descriptors.size() ||
      grad_activations.size() != catalog.size())
    throw InvalidArgument("activations_backward: size mismatch");
  if (!(grad_vocab.counts() == catalog.counts()))
    throw InvalidArgument("activations_backward: gradient vocabulary counts mismatch");
  sweep<Real, true>(catalog, vocab, descriptors, {}, grad_activations, grad_descriptors,
                    &grad_vocab);
}

template std::vector<float> evaluate_activations<float>(const RelationCatalog&,
                                                        const PredicateVocabulary<float>&,
                                                        std::span<const Descriptor<float>>);
template std::vector<double> evaluate_activations<double>(const RelationCatalog&,
                                                          const PredicateVocabulary<double>&,
                                                          std::span<const Descriptor<double>>);
template void activations_backward<float>(const RelationCatalog&,
                                          const PredicateVocabulary<float>&,
                                          std::span<const Descriptor<float>>,
                                          std::span<const float>,
                                          std::span<DescriptorGrad<float>>,
                                          PredicateVocabulary<float>&);
template void activations_backward<double>(const RelationCatalog&,
                                           const PredicateVocabulary<double>&,
                                           std::span<const Descriptor<double>>,
                                           std::span<const double>,
                                           std::span<DescriptorGrad<double>>,
                                           PredicateVocabulary<double>&);

}  // namespace parse
