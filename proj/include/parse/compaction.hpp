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

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "parse/model.hpp"

namespace parse {

struct CompactionPlan {
  double tau = 0.0;
  std::vector<std::size_t> active;       // sorted surviving relation indices
  std::vector<std::int64_t> new_index;   // old -> new, -1 when removed
  std::string source_fingerprint;
  std::size_t source_size = 0;
};

// Columns m with max_c W[c, m] > tau. W is classes x relations, row-major.
CompactionPlan active_set(std::span<const double> weights, int classes, std::size_t relations,
                          double tau);

template <typename Real>
CompactionPlan plan_compaction(const Model<Real>& model, double tau);

// Restricts the catalog to the plan and slices the Lambda columns. With
// tau = 0 the removed columns carried no weight and every logit is unchanged.
// With tau > 0 the model keeps the sliced class-weight rows without
// renormalization (frozen, inference-only), so each class score drops by at
// most the removed mass times max(a).
template <typename Real>
Model<Real> compact(const Model<Real>& model, const CompactionPlan& plan);

struct CompactionReport {
  double tau = 0.0;
  std::size_t relations_before = 0, relations_after = 0;
  std::size_t structural_before = 0, structural_after = 0;
  double reduction = 0.0;  // fraction of predicate applications removed
  std::size_t samples = 0;
  double agreement = 1.0;
  double max_logit_deviation = 0.0;
};

// Logit and top-1 comparison over `count` images laid out back to back.
template <typename Real>
CompactionReport verify_equivalence(const Model<Real>& original, const Model<Real>& compacted,
                                    std::span<const Real> images, std::size_t count);

}  // namespace parse
