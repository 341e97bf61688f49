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

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "parse/predicates.hpp"

namespace parse {

inline constexpr int kCanonicalizationVersion = 1;

// Which predicate blocks are enumerated.
struct FamilySwitches {
  bool presence = true;
  bool binary = true;
  bool ternary = true;
  bool quaternary = true;
  bool operator==(const FamilySwitches&) const = default;
  bool enabled(Family f) const;
};

// One predicate application: family, angle instance (0 for unparameterized
// families) and the ordered tuple of distinct primitive indices.
struct CatalogEntry {
  Family family = Family::kPresence;
  std::uint8_t instance = 0;
  std::array<std::uint8_t, 4> idx{};

  int arity() const { return family_arity(family); }
  std::uint64_t key() const;
  bool operator==(const CatalogEntry&) const = default;
};

// Immutable enumeration of predicate applications with a flat 0..M-1 index.
//
// Order: presence, binary (above, left, h_align, v_align, near, contains),
// ternary (tri per instance, turn per instance), quaternary (orient per
// instance, eqdist); within a family instance, lexicographic tuple order.
//
// Canonical tuples:
//   above/left/contains  all ordered pairs i != j
//   h_align/v_align/near i < j
//   tri(n)               apex i, j < k
//   turn(l)              chain i -> j -> k with i < k
//   orient(m)            first edge i < j, second edge any ordered (k, l)
//   eqdist               unordered pair of disjoint edges (i<j) < (k<l)
class RelationCatalog {
 public:
  static RelationCatalog build(int primitives, const VocabCounts& counts,
                               const FamilySwitches& switches = {});
  // Explicit entry list (compacted catalogs).
  static RelationCatalog from_entries(int primitives, const VocabCounts& counts,
                                      const FamilySwitches& switches,
                                      std::vector<CatalogEntry> entries, bool compacted);

  int primitives() const { return primitives_; }
  const VocabCounts& counts() const { return counts_; }
  const FamilySwitches& switches() const { return switches_; }
  bool compacted() const { return compacted_; }
  std::size_t size() const { return entries_.size(); }
  const CatalogEntry& entry(std::size_t m) const { return entries_.at(m); }
  const std::vector<CatalogEntry>& entries() const { return entries_; }
  // Throws InvalidArgument when the entry is not part of this catalog.
  std::size_t index_of(const CatalogEntry& e) const;
  bool contains(const CatalogEntry& e) const { return index_.count(e.key()) > 0; }

  // Sub-catalog over the given (sorted, unique) indices, flagged compacted.
  RelationCatalog restrict(std::span<const std::size_t> indices) const;

  std::string canonical_listing() const;
  // 64-bit FNV-1a of canonical_listing(), 16 lowercase hex characters.
  const std::string& fingerprint() const { return fingerprint_; }

  std::size_t count(Family f) const;

 private:
  RelationCatalog() = default;
  void finalize();

  int primitives_ = 0;
  VocabCounts counts_;
  FamilySwitches switches_;
  bool compacted_ = false;
  std::vector<CatalogEntry> entries_;
  std::unordered_map<std::uint64_t, std::size_t> index_;
  std::string fingerprint_;
};

// Closed-form M for the canonical enumeration.
std::uint64_t closed_form_size(int primitives, const VocabCounts& counts,
                               const FamilySwitches& switches = {});

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

std::string entry_label(const CatalogEntry& e);

// a(X): one activation per catalog entry.
template <typename Real>
std::vector<Real> evaluate_activations(const RelationCatalog& catalog,
                                       const PredicateVocabulary<Real>& vocab,
                                       std::span<const Descriptor<Real>> descriptors);

// Accumulates d/d descriptors and d/d vocabulary values given d/d a.
template <typename Real>
void activations_backward(const RelationCatalog& catalog, const PredicateVocabulary<Real>& vocab,
                          std::span<const Descriptor<Real>> descriptors,
                          std::span<const Real> grad_activations,
                          std::span<DescriptorGrad<Real>> grad_descriptors,
                          PredicateVocabulary<Real>& grad_vocab);

}  // namespace parse
