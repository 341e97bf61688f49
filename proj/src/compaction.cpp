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

#include "parse/compaction.hpp"

#include <algorithm>
#include <cmath>

#include "parse/error.hpp"

namespace parse {

CompactionPlan active_set(std::span<const double> weights, int classes, std::size_t relations,
                          double tau) {
  if (!(tau >= 0.0)) throw InvalidArgument("compaction: threshold must be >= 0");
  if (classes < 1 || weights.size() != std::size_t(classes) * relations)
    throw InvalidArgument("compaction: weight matrix shape mismatch");
  CompactionPlan plan;
  plan.tau = tau;
  plan.source_size = relations;
  plan.new_index.assign(relations, -1);
  for (std::size_t m = 0; m < relations; ++m) {
    double best = 0.0;
    for (int c = 0; c < classes; ++c) best = std::max(best, weights[c * relations + m]);
    if (best > tau) {
      plan.new_index[m] = std::int64_t(plan.active.size());
      plan.active.push_back(m);
    }
  }
  return plan;
}

template <typename Real>
CompactionPlan plan_compaction(const Model<Real>& model, double tau) {
  if (!model.config().relations)
    throw InvalidArgument("compaction: model has no structural scoring layer");
  const std::vector<Real> w = model.class_weight_matrix();
  const std::vector<double> wd(w.begin(), w.end());
  CompactionPlan plan = active_set(wd, model.config().classes, model.catalog().size(), tau);
  plan.source_fingerprint = model.catalog().fingerprint();
  return plan;
}

template <typename Real>
Model<Real> compact(const Model<Real>& model, const CompactionPlan& plan) {
  if (!model.config().relations)
    throw InvalidArgument("compaction: model has no structural scoring layer");
  if (plan.source_fingerprint != model.catalog().fingerprint() ||
      plan.source_size != model.catalog().size())
    throw InvalidArgument("compaction: plan was built for catalog " + plan.source_fingerprint +
                          ", model has " + model.catalog().fingerprint());
  auto catalog = std::make_shared<const RelationCatalog>(model.catalog().restrict(plan.active));
  // Above zero the dropped columns may carry mass; the sliced weight rows are
  // kept as they are instead of re-deriving them from Lambda.
  ModelConfig config = model.config();
  const bool freeze = plan.tau > 0.0 || config.frozen_weights;
  std::vector<Real> weights;
  if (freeze) weights = model.class_weight_matrix();
  config.frozen_weights = freeze;
  Model<Real> out(config, catalog);
  const auto& src = model.params();
  auto& dst = out.params();
  const std::size_t lambda = model.slots().lambda;
  const std::size_t M = model.catalog().size();
  const std::size_t keep = plan.active.size();
  for (std::size_t t = 0; t < src.size(); ++t) {
    if (t == lambda) {
      const std::span<const Real> from =
          freeze ? std::span<const Real>(weights) : std::span<const Real>(src[t]);
      auto to = dst[t];
      for (int c = 0; c < model.config().classes; ++c)
        for (std::size_t n = 0; n < keep; ++n) to[c * keep + n] = from[c * M + plan.active[n]];
    } else {
      dst.tensor(t).data = src.tensor(t).data;
    }
  }
  return out;
}

template <typename Real>
CompactionReport verify_equivalence(const Model<Real>& original, const Model<Real>& compacted,
                                    std::span<const Real> images, std::size_t count) {
  CompactionReport r;
  r.relations_before = original.catalog().size();
  r.relations_after = compacted.catalog().size();
  r.structural_before = original.structural_parameter_count();
  r.structural_after = compacted.structural_parameter_count();
  r.reduction = r.relations_before
                    ? 1.0 - double(r.relations_after) / double(r.relations_before)
                    : 0.0;
  r.samples = count;
  const auto a = original.logits_batch(images, count);
  const auto b = compacted.logits_batch(images, count);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < count; ++i) {
    if (argmax<Real>(a[i]) == argmax<Real>(b[i])) ++agree;
    for (std::size_t c = 0; c < a[i].size(); ++c)
      r.max_logit_deviation =
          std::max(r.max_logit_deviation, double(std::abs(a[i][c] - b[i][c])));
  }
  r.agreement = count ? double(agree) / double(count) : 1.0;
  return r;
}

template CompactionPlan plan_compaction<float>(const Model<float>&, double);
template CompactionPlan plan_compaction<double>(const Model<double>&, double);
template Model<float> compact<float>(const Model<float>&, const CompactionPlan&);
template Model<double> compact<double>(const Model<double>&, const CompactionPlan&);
template CompactionReport verify_equivalence<float>(const Model<float>&, const Model<float>&,
                                                    std::span<const float>, std::size_t);
template CompactionReport verify_equivalence<double>(const Model<double>&, const Model<double>&,
                                                     std::span<const double>, std::size_t);

}  // namespace parse
