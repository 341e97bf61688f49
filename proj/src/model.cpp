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

#include "parse/model.hpp"

#include <algorithm>
#include <cmath>

#include "parse/error.hpp"
#include "parse/mathcore.hpp"
#include "parse/rng.hpp"

namespace parse {

void ModelConfig::validate() const {
  backbone.validate();
  if (primitives < 1 || primitives > 255) throw InvalidArgument("model: K must be in [1, 255]");
  if (classes < 2) throw InvalidArgument("model: at least two classes are required");
  if (projection_kernel < 1 || projection_kernel % 2 == 0)
    throw InvalidArgument("model: projection kernel must be odd");
  if (counts.tri < 0 || counts.turn < 0 || counts.orient < 0)
    throw InvalidArgument("model: negative vocabulary counts");
  if (relations && !(families.presence || families.binary || families.ternary ||
                     families.quaternary))
    throw InvalidArgument("model: relations head needs at least one predicate family");
  if (frozen_weights && !relations)
    throw InvalidArgument("model: frozen class weights require the relations head");
}

ConvShape ModelConfig::projection() const {
  ConvShape s;
  s.in_channels = backbone.feature_channels();
  s.out_channels = primitives;
  s.kernel = projection_kernel;
  s.stride = 1;
  s.in_h = backbone.feature_h();
  s.in_w = backbone.feature_w();
  s.bias = true;
  return s;
}

template <typename Real>
std::vector<Real> descriptor_features(std::span<const Descriptor<Real>> d) {
  std::vector<Real> z;
  z.reserve(d.size() * 5);
  for (const auto& x : d) {
    z.push_back(x.cx);
    z.push_back(x.cy);
    z.push_back(x.presence);
    z.push_back(x.ex);
    z.push_back(x.ey);
  }
  return z;
}

template <typename Real>
int argmax(std::span<const Real> v) {
  int best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = int(i);
  return best;
}

template <typename Real>
Model<Real>::Model(ModelConfig config, std::shared_ptr<const RelationCatalog> catalog)
    : config_(std::move(config)), catalog_(std::move(catalog)) {
  config_.validate();
  if (!catalog_) {
    const FamilySwitches sw = config_.relations ? config_.families : FamilySwitches{false, false, false, false};
    catalog_ = std::make_shared<const RelationCatalog>(
        RelationCatalog::build(config_.primitives, config_.counts, sw));
  }
  if (catalog_->primitives() != config_.primitives || !(catalog_->counts() == config_.counts))
    throw InvalidArgument("model: catalog does not match configuration");
  if (config_.relations && catalog_->size() == 0)
    throw InvalidArgument("model: relations head with an empty catalog");

  auto& p = params_;
  const BackboneConfig& bb = config_.backbone;
  for (int b = 0; b < bb.blocks(); ++b) {
    const ConvShape s = bb.block(b);
    const std::string prefix = "backbone.block" + std::to_string(b);
    slots_.block_weight.push_back(
        p.add(prefix + ".weight", {s.out_channels, s.in_channels, s.kernel, s.kernel}));
    if (bb.bias) slots_.block_bias.push_back(p.add(prefix + ".bias", {s.out_channels}));
  }
  const ConvShape proj = config_.projection();
  slots_.proj_weight =
      p.add("bottleneck.weight", {proj.out_channels, proj.in_channels, proj.kernel, proj.kernel});
  slots_.proj_bias = p.add("bottleneck.bias", {proj.out_channels});
  slots_.temperature_raw = p.add("bottleneck.temperature_raw", {1});

  if (config_.relations) {
    const VocabCounts& c = config_.counts;
    slots_.kappa_above = p.add("vocab.kappa_above_raw", {1});
    slots_.margin_above = p.add("vocab.margin_above", {1});
    slots_.kappa_left = p.add("vocab.kappa_left_raw", {1});
    slots_.margin_left = p.add("vocab.margin_left", {1});
    slots_.tau_h = p.add("vocab.tau_h_raw", {1});
    slots_.tau_v = p.add("vocab.tau_v_raw", {1});
    slots_.rho = p.add("vocab.rho_raw", {1});
    slots_.kappa_contains = p.add("vocab.kappa_contains_raw", {1});
    slots_.tau_d = p.add("vocab.tau_d_raw", {1});
    slots_.psi = p.add("vocab.psi", {c.tri});
    slots_.beta = p.add("vocab.beta_raw", {c.tri});
    slots_.phi_turn = p.add("vocab.phi_turn", {c.turn});
    slots_.eta = p.add("vocab.eta_raw", {c.turn});
    slots_.phi_orient = p.add("vocab.phi_orient", {c.orient});
    slots_.gamma = p.add("vocab.gamma_raw", {c.orient});
    slots_.lambda = p.add(config_.frozen_weights ? "structure.weights" : "structure.lambda",
                          {config_.classes, int(catalog_->size())});
    slots_.omega_raw = p.add("structure.omega_raw", {1});
  } else {
    slots_.head_weight = p.add("head.weight", {config_.classes, 5 * config_.primitives});
    slots_.head_bias = p.add("head.bias", {config_.classes});
  }
}

template <typename Real>
Model<Real> Model<Real>::create(const ModelConfig& config, std::uint64_t seed) {
  if (config.frozen_weights)
    throw InvalidArgument("model: frozen class weights come only from compaction");
  Model m(config, nullptr);
  auto& p = m.params_;
  auto gaussian_fill = [&](std::size_t slot, double stddev) {
    Rng rng(seed, stream_id(streams::kInit, slot));
    for (Real& v : p[slot]) v = Real(rng.normal(0.0, stddev));
  };
  const BackboneConfig& bb = config.backbone;
  for (int b = 0; b < bb.blocks(); ++b) {
    const ConvShape s = bb.block(b);
    gaussian_fill(m.slots_.block_weight[b], std::sqrt(2.0 / (s.in_channels * s.kernel * s.kernel)));
  }
  const ConvShape proj = config.projection();
  gaussian_fill(m.slots_.proj_weight,
                std::sqrt(1.0 / (proj.in_channels * proj.kernel * proj.kernel)));
  p[m.slots_.temperature_raw][0] = temperature_raw_init<Real>();

  if (config.relations) {
    const auto v = PredicateVocabulary<Real>::defaults(config.counts);
    auto set_pos = [&](std::size_t slot, Real value) { p[slot][0] = positive_to_raw(value); };
    set_pos(m.slots_.kappa_above, v.kappa_above);
    p[m.slots_.margin_above][0] = v.margin_above;
    set_pos(m.slots_.kappa_left, v.kappa_left);
    p[m.slots_.margin_left][0] = v.margin_left;
    set_pos(m.slots_.tau_h, v.tau_h);
    set_pos(m.slots_.tau_v, v.tau_v);
    set_pos(m.slots_.rho, v.rho);
    set_pos(m.slots_.kappa_contains, v.kappa_contains);
    set_pos(m.slots_.tau_d, v.tau_d);
    for (int n = 0; n < config.counts.tri; ++n) {
      p[m.slots_.psi][n] = v.psi[n];
      p[m.slots_.beta][n] = positive_to_raw(v.beta[n]);
    }
    for (int n = 0; n < config.counts.turn; ++n) {
      p[m.slots_.phi_turn][n] = v.phi_turn[n];
      p[m.slots_.eta][n] = positive_to_raw(v.eta[n]);
    }
    for (int n = 0; n < config.counts.orient; ++n) {
      p[m.slots_.phi_orient][n] = v.phi_orient[n];
      p[m.slots_.gamma][n] = positive_to_raw(v.gamma[n]);
    }
    gaussian_fill(m.slots_.lambda, 0.01);
    p[m.slots_.omega_raw][0] = omega_raw_init<Real>();
  } else {
    gaussian_fill(m.slots_.head_weight, std::sqrt(1.0 / (5.0 * config.primitives)));
  }
  return m;
}

template <typename Real>
PredicateVocabulary<Real> Model<Real>::vocabulary() const {
  if (!config_.relations) return PredicateVocabulary<Real>::zeros(config_.counts);
  const auto& p = params_;
  const auto& s = slots_;
  PredicateVocabulary<Real> v;
  v.kappa_above = positive_from_raw(p.scalar(s.kappa_above));
  v.margin_above = p.scalar(s.margin_above);
  v.kappa_left = positive_from_raw(p.scalar(s.kappa_left));
  v.margin_left = p.scalar(s.margin_left);
  v.tau_h = positive_from_raw(p.scalar(s.tau_h));
  v.tau_v = positive_from_raw(p.scalar(s.tau_v));
  v.rho = positive_from_raw(p.scalar(s.rho));
  v.kappa_contains = positive_from_raw(p.scalar(s.kappa_contains));
  v.tau_d = positive_from_raw(p.scalar(s.tau_d));
  for (Real r : p[s.psi]) v.psi.push_back(r);
  for (Real r : p[s.beta]) v.beta.push_back(positive_from_raw(r));
  for (Real r : p[s.phi_turn]) v.phi_turn.push_back(r);
  for (Real r : p[s.eta]) v.eta.push_back(positive_from_raw(r));
  for (Real r : p[s.phi_orient]) v.phi_orient.push_back(r);
  for (Real r : p[s.gamma]) v.gamma.push_back(positive_from_raw(r));
  return v;
}

template <typename Real>
Real Model<Real>::temperature() const {
  return temperature_from_raw(params_.scalar(slots_.temperature_raw));
}

template <typename Real>
Real Model<Real>::omega() const {
  return config_.relations ? omega_from_raw(params_.scalar(slots_.omega_raw)) : Real(1);
}

template <typename Real>
std::vector<Real> Model<Real>::class_weight_matrix() const {
  if (!config_.relations) return {};
  if (config_.frozen_weights) {
    const auto w = params_[slots_.lambda];
    return std::vector<Real>(w.begin(), w.end());
  }
  return class_weights<Real>(params_[slots_.lambda], config_.classes, catalog_->size());
}

template <typename Real>
std::size_t Model<Real>::structural_parameter_count() const {
  return config_.relations ? std::size_t(config_.classes) * catalog_->size() : 0;
}

template <typename Real>
typename Model<Real>::Prepared Model<Real>::prepare() const {
  Prepared prep;
  prep.vocab = vocabulary();
  prep.temperature = temperature();
  prep.omega = omega();
  prep.weights = class_weight_matrix();
  return prep;
}

template <typename Real>
void Model<Real>::head_forward(const Prepared& prep, Inference<Real>& out) const {
  const int C = config_.classes;
  if (config_.relations) {
    out.activations =
        evaluate_activations<Real>(*catalog_, prep.vocab, out.description.descriptors);
    out.scores = class_scores<Real>(prep.weights, C, out.activations);
    out.logits.resize(C);
    for (int c = 0; c < C; ++c) out.logits[c] = prep.omega * out.scores[c];
  } else {
    const std::vector<Real> z = descriptor_features<Real>(out.description.descriptors);
    const auto w = params_[slots_.head_weight];
    const auto b = params_[slots_.head_bias];
    out.logits.assign(C, Real(0));
    for (int c = 0; c < C; ++c) {
      Real acc = b[c];
      for (std::size_t f = 0; f < z.size(); ++f) acc += w[c * z.size() + f] * z[f];
      out.logits[c] = acc;
    }
  }
}

template <typename Real>
std::vector<Real> Model<Real>::features(std::span<const Real> image) const {
  const BackboneConfig& bb = config_.backbone;
  if (image.size() != bb.input_size())
    throw InvalidArgument("model: image has " + std::to_string(image.size()) +
                          " values, expected " + std::to_string(bb.input_size()));
  std::vector<Real> x(image.begin(), image.end()), y, scratch;
  for (int b = 0; b < bb.blocks(); ++b) {
    const ConvShape s = bb.block(b);
    y.resize(s.out_size());
    conv2d_forward<Real>(s, x, params_[slots_.block_weight[b]],
                         bb.bias ? params_[slots_.block_bias[b]] : std::span<const Real>{}, y,
                         scratch);
    relu_inplace<Real>(y);
    std::swap(x, y);
  }
  return x;
}

template <typename Real>
Inference<Real> Model<Real>::infer_prepared(const Prepared& prep,
                                            std::span<const Real> image) const {
  const std::vector<Real> x = features(image);
  Inference<Real> out;
  out.heatmaps = project_features<Real>(config_.projection(), x, params_[slots_.proj_weight],
                                        params_[slots_.proj_bias], prep.temperature);
  out.description = describe<Real>(out.heatmaps);
  head_forward(prep, out);
  return out;
}

template <typename Real>
Inference<Real> Model<Real>::infer(std::span<const Real> image) const {
  return infer_prepared(prepare(), image);
}

template <typename Real>
std::vector<Real> Model<Real>::logits(std::span<const Real> image) const {
  return infer(image).logits;
}

template <typename Real>
std::vector<std::vector<Real>> Model<Real>::logits_batch(std::span<const Real> images,
                                                         std::size_t count) const {
  const std::size_t n = config_.backbone.input_size();
  if (images.size() != n * count) throw InvalidArgument("logits_batch: size mismatch");
  const Prepared prep = prepare();
  std::vector<std::vector<Real>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(infer_prepared(prep, images.subspan(i * n, n)).logits);
  return out;
}

template <typename Real>
LossBreakdown<Real> Model<Real>::loss(std::span<const Real> images, std::span<const int> labels,
                                      const LossConfig& cfg, const StyleMixDraw* mix,
                                      ParamStore<Real>* grad,
                                      std::vector<std::vector<Real>>* logits_out) const {
  if (config_.frozen_weights)
    throw InvalidArgument("loss: model with frozen class weights is inference-only");
  const BackboneConfig& bb = config_.backbone;
  const int N = int(labels.size());
  const std::size_t in_size = bb.input_size();
  if (N == 0 || images.size() != in_size * N)
    throw InvalidArgument("loss: images do not match batch of " + std::to_string(N));
  for (int y : labels)
    if (y < 0 || y >= config_.classes) throw InvalidArgument("loss: label out of range");
  if (mix && mix->perm.size() != std::size_t(N))
    throw InvalidArgument("loss: style mix permutation does not match batch");

  const Prepared prep = prepare();
  const int C = config_.classes;
  const int K = config_.primitives;
  const std::size_t M = catalog_->size();
  const int hook = bb.style_hook;
  const bool want_grad = grad != nullptr;
  if (want_grad) *grad = params_.zeros_like();
  if (logits_out) logits_out->assign(N, {});

  // Stage 1: blocks before the style-mixing hook, kept for the backward pass.
  std::vector<std::vector<std::vector<Real>>> early(N);
  std::vector<Real> scratch;
  for (int b = 0; b < N; ++b) {
    std::span<const Real> x = images.subspan(b * in_size, in_size);
    early[b].resize(hook);
    for (int blk = 0; blk < hook; ++blk) {
      const ConvShape s = bb.block(blk);
      auto& y = early[b][blk];
      y.resize(s.out_size());
      conv2d_forward<Real>(s, x, params_[slots_.block_weight[blk]],
                           bb.bias ? params_[slots_.block_bias[blk]] : std::span<const Real>{},
                           y, scratch);
      relu_inplace<Real>(y);
      x = y;
    }
  }
  const ConvShape hook_shape = bb.block(hook - 1);
  const std::size_t hook_size = hook_shape.out_size();
  const std::size_t hook_cells = std::size_t(hook_shape.out_h()) * hook_shape.out_w();
  std::vector<Real> hook_batch(hook_size * N);
  for (int b = 0; b < N; ++b)
    std::copy(early[b][hook - 1].begin(), early[b][hook - 1].end(),
              hook_batch.begin() + b * hook_size);
  std::vector<Real> mixed;
  if (mix) {
    mixed.resize(hook_batch.size());
    style_mix<Real>(hook_batch, N, hook_shape.out_channels, hook_cells, Real(mix->lambda),
                    mix->perm, mixed);
  } else {
    mixed = hook_batch;
  }

  LossBreakdown<Real> out;
  std::vector<Real> grad_mixed(want_grad ? mixed.size() : 0, Real(0));
  std::vector<Real> grad_weights(want_grad && config_.relations ? std::size_t(C) * M : 0,
                                 Real(0));
  PredicateVocabulary<Real> grad_vocab = PredicateVocabulary<Real>::zeros(config_.counts);
  Real grad_temperature = 0, grad_omega = 0;
  const ConvShape proj = config_.projection();
  const Real inv_n = Real(1) / Real(N);

  // Stage 2: remainder of the network, loss and per-sample backward.
  for (int b = 0; b < N; ++b) {
    std::vector<std::vector<Real>> acts(bb.blocks() - hook);
    std::span<const Real> x(mixed.data() + b * hook_size, hook_size);
    for (int blk = hook; blk < bb.blocks(); ++blk) {
      const ConvShape s = bb.block(blk);
      auto& y = acts[blk - hook];
      y.resize(s.out_size());
      conv2d_forward<Real>(s, x, params_[slots_.block_weight[blk]],
                           bb.bias ? params_[slots_.block_bias[blk]] : std::span<const Real>{},
                           y, scratch);
      relu_inplace<Real>(y);
      x = y;
    }
    const std::span<const Real> features = x;
    Inference<Real> inf;
    inf.heatmaps = project_features<Real>(proj, features, params_[slots_.proj_weight],
                                          params_[slots_.proj_bias], prep.temperature);
    inf.description = describe<Real>(inf.heatmaps);
    head_forward(prep, inf);
    if (logits_out) (*logits_out)[b] = inf.logits;

    std::vector<Real> g_logits(C, Real(0));
    out.ce += cross_entropy<Real>(inf.logits, labels[b], want_grad ? std::span<Real>(g_logits)
                                                                    : std::span<Real>{},
                                  inv_n) *
              inv_n;
    const std::size_t cells = inf.heatmaps.cells();
    std::vector<Real> g_prob(want_grad ? std::size_t(K) * cells : 0, Real(0));
    out.diversity += loss_diversity<Real>(inf.description.prob, K, cells, g_prob,
                                          Real(cfg.bn) * inv_n) *
                     inv_n;
    out.concentration += loss_concentration<Real>(inf.description.prob, K, cells, g_prob,
                                                  Real(cfg.bn * cfg.conc) * inv_n) *
                         inv_n;
    if (!want_grad) continue;

    std::vector<DescriptorGrad<Real>> g_desc(K, zero_descriptor_grad<Real>());
    if (config_.relations) {
      std::vector<Real> g_scores(C);
      for (int c = 0; c < C; ++c) {
        grad_omega += g_logits[c] * inf.scores[c];
        g_scores[c] = g_logits[c] * prep.omega;
      }
      std::vector<Real> g_act(M, Real(0));
      for (int c = 0; c < C; ++c) {
        const Real gs = g_scores[c];
        Real* gw = grad_weights.data() + c * M;
        const Real* w = prep.weights.data() + c * M;
        for (std::size_t m = 0; m < M; ++m) {
          gw[m] += gs * inf.activations[m];
          g_act[m] += gs * w[m];
        }
      }
      activations_backward<Real>(*catalog_, prep.vocab, inf.description.descriptors, g_act,
                                 g_desc, grad_vocab);
    } else {
      const std::vector<Real> z = descriptor_features<Real>(inf.description.descriptors);
      auto gw = (*grad)[slots_.head_weight];
      auto gb = (*grad)[slots_.head_bias];
      const auto w = params_[slots_.head_weight];
      std::vector<Real> gz(z.size(), Real(0));
      for (int c = 0; c < C; ++c) {
        gb[c] += g_logits[c];
        for (std::size_t f = 0; f < z.size(); ++f) {
          gw[c * z.size() + f] += g_logits[c] * z[f];
          gz[f] += g_logits[c] * w[c * z.size() + f];
        }
      }
      for (int k = 0; k < K; ++k) {
        g_desc[k].cx = gz[5 * k];
        g_desc[k].cy = gz[5 * k + 1];
        g_desc[k].presence = gz[5 * k + 2];
        g_desc[k].ex = gz[5 * k + 3];
        g_desc[k].ey = gz[5 * k + 4];
      }
    }

    std::vector<Real> g_heat(inf.heatmaps.logits.size());
    grad_temperature +=
        describe_backward<Real>(inf.heatmaps, inf.description, g_desc, g_prob, g_heat);
    std::vector<Real> g_x(proj.in_size());
    conv2d_backward<Real>(proj, features, params_[slots_.proj_weight], g_heat, g_x,
                          (*grad)[slots_.proj_weight], (*grad)[slots_.proj_bias], scratch);
    for (int blk = bb.blocks() - 1; blk >= hook; --blk) {
      const ConvShape s = bb.block(blk);
      relu_backward_inplace<Real>(acts[blk - hook], g_x);
      std::span<const Real> in = blk == hook
                                     ? std::span<const Real>(mixed.data() + b * hook_size,
                                                             hook_size)
                                     : std::span<const Real>(acts[blk - hook - 1]);
      std::vector<Real> g_in(s.in_size());
      conv2d_backward<Real>(s, in, params_[slots_.block_weight[blk]], g_x, g_in,
                            (*grad)[slots_.block_weight[blk]],
                            bb.bias ? (*grad)[slots_.block_bias[blk]] : std::span<Real>{},
                            scratch);
      g_x = std::move(g_in);
    }
    std::copy(g_x.begin(), g_x.end(), grad_mixed.begin() + b * hook_size);
  }

  if (config_.relations) {
    out.sparse = sparsity_penalty<Real>(params_[slots_.lambda],
                                        want_grad ? (*grad)[slots_.lambda] : std::span<Real>{},
                                        Real(cfg.sparse));
    std::vector<Real> g_phi(config_.counts.orient, Real(0));
    out.angle = loss_angle_diversity<Real>(prep.vocab, want_grad ? std::span<Real>(g_phi)
                                                                  : std::span<Real>{},
                                           Real(cfg.ang));
    if (want_grad)
      for (int m = 0; m < config_.counts.orient; ++m) grad_vocab.phi_orient[m] += g_phi[m];
  }
  out.total = out.ce + Real(cfg.sparse) * out.sparse +
              Real(cfg.bn) * (out.diversity + Real(cfg.conc) * out.concentration) +
              Real(cfg.ang) * out.angle;
  if (!want_grad) return out;

  // Style mixing backward, then the early blocks.
  std::vector<Real> grad_hook(hook_batch.size());
  if (mix) {
    style_mix_backward<Real>(hook_batch, N, hook_shape.out_channels, hook_cells,
                             Real(mix->lambda), mix->perm, grad_mixed, grad_hook);
  } else {
    grad_hook = grad_mixed;
  }
  for (int b = 0; b < N; ++b) {
    std::vector<Real> g_x(grad_hook.begin() + b * hook_size,
                          grad_hook.begin() + (b + 1) * hook_size);
    for (int blk = hook - 1; blk >= 0; --blk) {
      const ConvShape s = bb.block(blk);
      relu_backward_inplace<Real>(early[b][blk], g_x);
      std::span<const Real> in = blk == 0 ? images.subspan(b * in_size, in_size)
                                          : std::span<const Real>(early[b][blk - 1]);
      std::vector<Real> g_in(blk == 0 ? 0 : s.in_size());
      conv2d_backward<Real>(s, in, params_[slots_.block_weight[blk]], g_x, g_in,
                            (*grad)[slots_.block_weight[blk]],
                            bb.bias ? (*grad)[slots_.block_bias[blk]] : std::span<Real>{},
                            scratch);
      g_x = std::move(g_in);
    }
  }

  auto& g = *grad;
  g[slots_.temperature_raw][0] +=
      grad_temperature * sigmoid(params_.scalar(slots_.temperature_raw));
  if (config_.relations) {
    // d loss / d Lambda through the row-wise sparsemax.
    auto g_lambda = g[slots_.lambda];
    std::vector<Real> row_grad(M);
    for (int c = 0; c < C; ++c) {
      sparsemax_backward_from_output<Real>(
          std::span<const Real>(prep.weights).subspan(c * M, M),
          std::span<const Real>(grad_weights).subspan(c * M, M), row_grad);
      for (std::size_t m = 0; m < M; ++m) g_lambda[c * M + m] += row_grad[m];
    }
    g[slots_.omega_raw][0] += grad_omega * sigmoid(params_.scalar(slots_.omega_raw));

    const auto& s = slots_;
    auto pos = [&](std::size_t slot, std::size_t i, Real gvalue) {
      g[slot][i] += gvalue * positive_raw_slope(params_[slot][i]);
    };
    pos(s.kappa_above, 0, grad_vocab.kappa_above);
    g[s.margin_above][0] += grad_vocab.margin_above;
    pos(s.kappa_left, 0, grad_vocab.kappa_left);
    g[s.margin_left][0] += grad_vocab.margin_left;
    pos(s.tau_h, 0, grad_vocab.tau_h);
    pos(s.tau_v, 0, grad_vocab.tau_v);
    pos(s.rho, 0, grad_vocab.rho);
    pos(s.kappa_contains, 0, grad_vocab.kappa_contains);
    pos(s.tau_d, 0, grad_vocab.tau_d);
    for (int n = 0; n < config_.counts.tri; ++n) {
      g[s.psi][n] += grad_vocab.psi[n];
      pos(s.beta, n, grad_vocab.beta[n]);
    }
    for (int n = 0; n < config_.counts.turn; ++n) {
      g[s.phi_turn][n] += grad_vocab.phi_turn[n];
      pos(s.eta, n, grad_vocab.eta[n]);
    }
    for (int n = 0; n < config_.counts.orient; ++n) {
      g[s.phi_orient][n] += grad_vocab.phi_orient[n];
      pos(s.gamma, n, grad_vocab.gamma[n]);
    }
  }
  return out;
}

template class Model<float>;
template class Model<double>;
template std::vector<float> descriptor_features<float>(std::span<const Descriptor<float>>);
template std::vector<double> descriptor_features<double>(std::span<const Descriptor<double>>);
template int argmax<float>(std::span<const float>);
template int argmax<double>(std::span<const double>);

}  // namespace parse
