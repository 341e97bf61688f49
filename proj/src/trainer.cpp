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

#include "parse/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "parse/error.hpp"
#include "parse/rng.hpp"

namespace parse {

void TrainConfig::validate() const {
  model.validate();
  if (batch < 1) throw InvalidArgument("train: batch size must be positive");
  if (style_mix && batch < 2) throw InvalidArgument("train: style mixing needs batch >= 2");
  if (!(lr >= 0)) throw InvalidArgument("train: learning rate must be >= 0");
  if (epochs < 0) throw InvalidArgument("train: epochs must be >= 0");
  if (!(val_fraction > 0 && val_fraction < 1))
    throw InvalidArgument("train: validation fraction must be in (0, 1)");
  if (!(adam.beta1 >= 0 && adam.beta1 < 1 && adam.beta2 >= 0 && adam.beta2 < 1 && adam.eps > 0))
    throw InvalidArgument("train: invalid Adam constants");
}

Json to_json(const TrainConfig& c) {
  return {{"model", to_json(c.model)},
          {"batch", c.batch},
          {"lr", c.lr},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"style_mix", c.style_mix},
          {"deterministic", c.deterministic},
          {"float64", c.float64},
          {"val_fraction", c.val_fraction},
          {"loss", to_json(c.loss)},
          {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}}};
}

TrainConfig train_from_json(const Json& j, TrainConfig c) {
  if (!j.is_object()) throw InvalidArgument("train config must be a JSON object");
  static const char* const kKeys[] = {"model", "batch",         "lr",           "epochs",
                                      "seed",  "style_mix",     "deterministic", "float64",
                                      "val_fraction", "loss",   "adam"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find_if(std::begin(kKeys), std::end(kKeys),
                     [&](const char* k) { return it.key() == k; }) == std::end(kKeys))
      throw InvalidArgument("train config: unknown key '" + it.key() + "'");
  try {
    if (j.contains("model")) c.model = model_from_json(j.at("model"), c.model);
    c.batch = j.value("batch", c.batch);
    c.lr = j.value("lr", c.lr);
    c.epochs = j.value("epochs", c.epochs);
    c.seed = j.value("seed", c.seed);
    c.style_mix = j.value("style_mix", c.style_mix);
    c.deterministic = j.value("deterministic", c.deterministic);
    c.float64 = j.value("float64", c.float64);
    c.val_fraction = j.value("val_fraction", c.val_fraction);
    if (j.contains("loss")) c.loss = loss_from_json(j.at("loss"), c.loss);
    if (j.contains("adam")) {
      const Json& a = j.at("adam");
      c.adam.beta1 = a.value("beta1", c.adam.beta1);
      c.adam.beta2 = a.value("beta2", c.adam.beta2);
      c.adam.eps = a.value("eps", c.adam.eps);
    }
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

Json to_json(const EvalMetrics& m) {
  return {{"count", m.count},
          {"accuracy", m.accuracy},
          {"loss", m.loss},
          {"per_class_accuracy", m.per_class_accuracy},
          {"support", m.support},
          {"mean_support", m.mean_support}};
}

Json to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},
          {"train_loss", r.train_loss},
          {"train_accuracy", r.train_accuracy},
          {"val_loss", r.val_loss},
          {"val_accuracy", r.val_accuracy},
          {"mean_support", r.mean_support},
          {"mixed_batches", r.mixed_batches}};
}

Json to_json(const LodoResult& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"target", domain_name(row.target)},
                    {"best_epoch", row.best_epoch},
                    {"val_accuracy", row.val_accuracy},
                    {"test", to_json(row.test)}});
  return {{"rows", rows}, {"mean_accuracy", r.mean_accuracy}};
}

template <typename Real>
std::vector<Real> gather_images(const Dataset& data, std::span<const std::size_t> indices) {
  const std::size_t n = std::size_t(data.config.image_size) * data.config.image_size * 3;
  std::vector<Real> out(n * indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i)
    to_planar<Real>(data.samples.at(indices[i]).image, std::span<Real>(out).subspan(i * n, n));
  return out;
}

namespace {

template <typename Real>
std::vector<std::size_t> support_sizes(const Model<Real>& model) {
  std::vector<std::size_t> out;
  if (!model.config().relations) return out;
  const auto w = model.class_weight_matrix();
  const std::size_t M = model.catalog().size();
  for (int c = 0; c < model.config().classes; ++c)
    out.push_back(std::size_t(
        std::count_if(w.begin() + c * M, w.begin() + (c + 1) * M, [](Real v) { return v != 0; })));
  return out;
}

double mean_of(const std::vector<std::size_t>& v) {
  return v.empty() ? 0.0 : double(std::accumulate(v.begin(), v.end(), std::size_t{0})) / v.size();
}

void check_input(const ModelConfig& m, const Dataset& data) {
  const BackboneConfig& b = m.backbone;
  if (b.input_channels != 3 || b.input_h != data.config.image_size ||
      b.input_w != data.config.image_size)
    throw InvalidArgument("model input " + std::to_string(b.input_h) + "x" +
                          std::to_string(b.input_w) + " does not match dataset images of size " +
                          std::to_string(data.config.image_size));
  if (m.classes != data.config.classes)
    throw InvalidArgument("model has " + std::to_string(m.classes) + " classes, dataset has " +
                          std::to_string(data.config.classes));
}

template <typename Real>
struct Adam {
  ParamStore<Real> m, v;
  long step = 0;
  explicit Adam(const ParamStore<Real>& p) : m(p.zeros_like()), v(p.zeros_like()) {}

  void update(ParamStore<Real>& params, const ParamStore<Real>& grad, const AdamConfig& cfg,
              double lr) {
    ++step;
    const double c1 = 1.0 - std::pow(cfg.beta1, double(step));
    const double c2 = 1.0 - std::pow(cfg.beta2, double(step));
    const Real b1 = Real(cfg.beta1), b2 = Real(cfg.beta2);
    const Real step_size = Real(lr / c1);
    const Real inv_c2 = Real(1.0 / c2);
    const Real eps = Real(cfg.eps);
    for (std::size_t t = 0; t < params.size(); ++t) {
      auto p = params[t];
      auto g = grad[t];
      auto mt = m[t];
      auto vt = v[t];
      for (std::size_t i = 0; i < p.size(); ++i) {
        mt[i] = b1 * mt[i] + (1 - b1) * g[i];
        vt[i] = b2 * vt[i] + (1 - b2) * g[i] * g[i];
        p[i] -= step_size * mt[i] / (std::sqrt(vt[i] * inv_c2) + eps);
      }
    }
  }
};

template <typename Real>
TrainResult train_impl(const TrainConfig& cfg, const Dataset& data, const Split& split,
                       const EpochCallback& on_epoch) {
  if (split.train.empty()) throw InvalidArgument("train: empty training split");
  if (split.val.empty()) throw InvalidArgument("train: empty validation split");
  Model<Real> model = Model<float>::create(cfg.model, cfg.seed).template cast<Real>();
  Adam<Real> adam(model.params());
  ParamStore<Real> grad;
  std::vector<std::vector<Real>> logits;

  TrainResult result{model.template cast<float>(), {}, 0, 0.0};
  auto record_epoch = [&](EpochRecord rec) {
    const EvalMetrics val = evaluate(model, data, split.val);
    rec.val_loss = val.loss;
    rec.val_accuracy = val.accuracy;
    rec.mean_support = mean_of(support_sizes(model));
    result.history.push_back(rec);
    if (rec.epoch == 0 || rec.val_accuracy > result.best_val_accuracy) {
      result.best_val_accuracy = rec.val_accuracy;
      result.best_epoch = rec.epoch;
      result.model = model.template cast<float>();
    }
    if (on_epoch) on_epoch(rec);
  };
  record_epoch(EpochRecord{});

  std::vector<std::size_t> order(split.train);
  const double mix_prob = cfg.model.backbone.style_mix_prob;
  const double mix_beta = cfg.model.backbone.style_mix_beta;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng order_rng(cfg.seed, stream_id(streams::kDataOrder, std::uint64_t(epoch)));
    order = split.train;
    order_rng.shuffle(std::span<std::size_t>(order));
    EpochRecord rec;
    rec.epoch = epoch;
    double loss_sum = 0.0;
    std::size_t correct = 0;
    const std::size_t batches = (order.size() + cfg.batch - 1) / cfg.batch;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t lo = b * cfg.batch;
      const std::size_t hi = std::min(order.size(), lo + cfg.batch);
      const std::span<const std::size_t> idx(order.data() + lo, hi - lo);
      const std::vector<Real> images = gather_images<Real>(data, idx);
      std::vector<int> labels;
      for (std::size_t i : idx) labels.push_back(data.samples[i].label);

      StyleMixDraw draw;
      bool mixed = false;
      if (cfg.style_mix && idx.size() >= 2) {
        Rng mix_rng(cfg.seed, stream_id(streams::kStyleMix, std::uint64_t(epoch), b));
        if (mix_rng.bernoulli(mix_prob)) {
          mixed = true;
          draw.lambda = mix_rng.beta(mix_beta, mix_beta);
          draw.perm.resize(idx.size());
          std::iota(draw.perm.begin(), draw.perm.end(), 0);
          mix_rng.shuffle(std::span<int>(draw.perm));
        }
      }
      const LossBreakdown<Real> lb =
          model.loss(images, labels, cfg.loss, mixed ? &draw : nullptr, &grad, &logits);
      if (!std::isfinite(double(lb.total)))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(b) + " (ce " + std::to_string(lb.ce) +
                           ", diversity " + std::to_string(lb.diversity) + ", concentration " +
                           std::to_string(lb.concentration) + ", angle " +
                           std::to_string(lb.angle) + ")");
      loss_sum += double(lb.total) * double(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i)
        if (argmax<Real>(logits[i]) == labels[i]) ++correct;
      rec.mixed_batches += mixed ? 1 : 0;
      adam.update(model.params(), grad, cfg.adam, cfg.lr);
    }
    rec.train_loss = loss_sum / double(order.size());
    rec.train_accuracy = double(correct) / double(order.size());
    record_epoch(rec);
  }
  return result;
}

}  // namespace

template <typename Real>
EvalMetrics evaluate(const Model<Real>& model, const Dataset& data,
                     std::span<const std::size_t> indices) {
  check_input(model.config(), data);
  EvalMetrics m;
  const int C = model.config().classes;
  std::vector<std::size_t> hits(C, 0), totals(C, 0);
  double loss = 0.0;
  constexpr std::size_t kChunk = 64;
  for (std::size_t lo = 0; lo < indices.size(); lo += kChunk) {
    const auto idx = indices.subspan(lo, std::min(kChunk, indices.size() - lo));
    const auto images = gather_images<Real>(data, idx);
    const auto logits = model.logits_batch(images, idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const int y = data.samples[idx[i]].label;
      ++totals[y];
      if (argmax<Real>(logits[i]) == y) ++hits[y];
      loss += double(cross_entropy<Real>(logits[i], y));
    }
  }
  m.count = indices.size();
  std::size_t correct = 0;
  for (int c = 0; c < C; ++c) {
    correct += hits[c];
    m.per_class_accuracy.push_back(totals[c] ? double(hits[c]) / double(totals[c]) : 0.0);
  }
  m.accuracy = m.count ? double(correct) / double(m.count) : 0.0;
  m.loss = m.count ? loss / double(m.count) : 0.0;
  m.support = support_sizes(model);
  m.mean_support = mean_of(m.support);
  return m;
}

TrainResult train(const TrainConfig& cfg, const Dataset& data, const Split& split,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  check_input(cfg.model, data);
  return cfg.float64 ? train_impl<double>(cfg, data, split, on_epoch)
                     : train_impl<float>(cfg, data, split, on_epoch);
}

LodoResult lodo(const TrainConfig& cfg, const Dataset& data,
                const std::function<void(const LodoRow&, const TrainResult&)>& on_model,
                const std::function<void(Domain, const EpochRecord&)>& on_epoch) {
  if (data.config.domains.size() < 3)
    throw InvalidArgument("lodo: need at least three domains (two sources per target)");
  LodoResult out;
  for (Domain target : data.config.domains) {
    const Split split = load_split(data, target, cfg.val_fraction, cfg.seed);
    EpochCallback cb;
    if (on_epoch) cb = [&](const EpochRecord& r) { on_epoch(target, r); };
    TrainResult tr = train(cfg, data, split, cb);
    LodoRow row;
    row.target = target;
    row.best_epoch = tr.best_epoch;
    row.val_accuracy = tr.best_val_accuracy;
    row.test = evaluate(tr.model, data, split.test);
    if (on_model) on_model(row, tr);
    out.rows.push_back(std::move(row));
  }
  double sum = 0.0;
  for (const auto& r : out.rows) sum += r.test.accuracy;
  out.mean_accuracy = sum / double(out.rows.size());
  return out;
}

template EvalMetrics evaluate<float>(const Model<float>&, const Dataset&,
                                     std::span<const std::size_t>);
template EvalMetrics evaluate<double>(const Model<double>&, const Dataset&,
                                      std::span<const std::size_t>);
template std::vector<float> gather_images<float>(const Dataset&, std::span<const std::size_t>);
template std::vector<double> gather_images<double>(const Dataset&, std::span<const std::size_t>);

}  // namespace parse
