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
#include <fstream>
#include <numeric>
#include <sstream>

#include "parse/checkpoint.hpp"
#include "parse/error.hpp"
#include "parse/trainer.hpp"
#include "temp_dir.hpp"

using namespace parse;

namespace {

// One small dataset shared by every case in this file.
const Dataset& tiny_data() {
  static TempDir dir("trainer");
  static const Dataset data = [] {
    SynthConfig c;
    c.classes = 8;
    c.per_class = 10;
    c.image_size = 16;
    c.seed = 4;
    generate(c, dir / "d");
    return load_dataset(dir / "d");
  }();
  return data;
}

TrainConfig tiny_config() {
  TrainConfig t;
  t.model.backbone.input_h = t.model.backbone.input_w = 16;
  t.model.backbone.widths = {6, 8};
  t.model.backbone.strides = {2, 1};
  t.model.primitives = 4;
  t.model.classes = 8;
  t.batch = 16;
  t.epochs = 1;
  t.seed = 11;
  return t;
}

}  // namespace

TEST_CASE("config validation and serialization") {
  TrainConfig t = tiny_config();
  const Json j = to_json(t);
  const TrainConfig back = train_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(j.at("adam").at("beta1") == 0.9);
  CHECK(j.at("adam").at("beta2") == 0.999);
  CHECK(j.at("adam").at("eps") == 1e-8);
  CHECK(TrainConfig{}.model.primitives == 16);
  CHECK(TrainConfig{}.batch == 32);
  CHECK(TrainConfig{}.lr == 1e-3);
  TrainConfig bad = tiny_config();
  bad.batch = 1;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad.style_mix = false;
  CHECK_NOTHROW(bad.validate());
  bad.lr = -1;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  CHECK_THROWS_AS(train_from_json({{"epochz", 3}}), InvalidArgument);
  CHECK(train_from_json({{"epochs", 3}}).epochs == 3);
}

TEST_CASE("zero learning rate leaves parameters fixed") {
  const Dataset& data = tiny_data();
  TrainConfig t = tiny_config();
  t.lr = 0;
  t.epochs = 3;
  t.style_mix = false;
  const Split split = load_split(data, Domain::kInverted, 0.2, t.seed);
  const TrainResult r = train(t, data, split);
  const Model<float> init = Model<float>::create(t.model, t.seed);
  for (std::size_t i = 0; i < init.params().size(); ++i)
    CHECK(r.model.params().tensor(i).data == init.params().tensor(i).data);
  REQUIRE(r.history.size() == 4);
  for (int e = 1; e <= 3; ++e) {
    CHECK(r.history[e].val_loss == r.history[1].val_loss);
    CHECK(r.history[e].train_loss == doctest::Approx(r.history[1].train_loss).epsilon(1e-5));
  }
  CHECK(r.best_epoch == 0);
}

TEST_CASE("training is deterministic and checkpoints are byte identical") {
  const Dataset& data = tiny_data();
  TrainConfig t = tiny_config();
  t.epochs = 2;
  const Split split = load_split(data, Domain::kOutline, 0.2, t.seed);
  const TrainResult a = train(t, data, split), b = train(t, data, split);
  const auto metrics = [](const TrainResult& r) {
    Json h = Json::array();
    for (const auto& e : r.history) h.push_back(to_json(e));
    return h;
  };
  CHECK(metrics(a).dump() == metrics(b).dump());
  CHECK(serialize_checkpoint(a.model, to_json(t), metrics(a), nullptr) ==
        serialize_checkpoint(b.model, to_json(t), metrics(b), nullptr));
  TrainConfig other = t;
  other.seed = 12;
  const TrainResult c = train(other, data, load_split(data, Domain::kOutline, 0.2, other.seed));
  CHECK(serialize_checkpoint(c.model, nullptr, nullptr, nullptr) !=
        serialize_checkpoint(a.model, nullptr, nullptr, nullptr));
  // Without style mixing no batch is mixed.
  TrainConfig plain = t;
  plain.style_mix = false;
  for (const auto& e : train(plain, data, split).history) CHECK(e.mixed_batches == 0);
}

TEST_CASE("double precision training runs the same loop") {
  const Dataset& data = tiny_data();
  TrainConfig t = tiny_config();
  t.float64 = true;
  const Split split = load_split(data, Domain::kSolid, 0.2, t.seed);
  const TrainResult r = train(t, data, split);
  CHECK(r.history.size() == 2);
  CHECK(std::isfinite(r.history[1].train_loss));
}

TEST_CASE("evaluation sanity") {
  const Dataset& data = tiny_data();
  TrainConfig t = tiny_config();
  const Split split = load_split(data, Domain::kTextured, 0.2, t.seed);
  std::vector<std::size_t> everything(data.samples.size());
  std::iota(everything.begin(), everything.end(), std::size_t{0});
  double mean = 0;
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const EvalMetrics chance = evaluate(Model<float>::create(t.model, seed), data, everything);
    CHECK(chance.count == data.samples.size());
    CHECK(chance.per_class_accuracy.size() == 8);
    CHECK(chance.support.size() == 8);
    CHECK(chance.mean_support > 0);
    mean += chance.accuracy / 5;
  }
  CHECK(std::abs(mean - 0.125) <= 0.05);

  // Heavy overfit on a small source split.
  t.epochs = 40;
  t.lr = 3e-3;
  t.style_mix = false;
  const TrainResult r = train(t, data, split);
  const EvalMetrics on_train = evaluate(r.model, data, split.train);
  const EvalMetrics on_val = evaluate(r.model, data, split.val);
  CHECK(on_train.accuracy >= on_val.accuracy);
  CHECK(r.best_val_accuracy == doctest::Approx(on_val.accuracy));

  TrainConfig wide = tiny_config();
  wide.model.backbone.input_h = wide.model.backbone.input_w = 32;
  CHECK_THROWS_AS(evaluate(Model<float>::create(wide.model, 1), data, split.val), InvalidArgument);
  TrainConfig classes = tiny_config();
  classes.model.classes = 5;
  CHECK_THROWS_AS(train(classes, data, split), InvalidArgument);
}

TEST_CASE("lodo yields one row per domain and their mean") {
  const Dataset& data = tiny_data();
  TrainConfig t = tiny_config();
  t.epochs = 1;
  int seen = 0;
  const LodoResult r = lodo(t, data, [&](const LodoRow&, const TrainResult&) { ++seen; });
  REQUIRE(r.rows.size() == 4);
  CHECK(seen == 4);
  double mean = 0;
  for (const auto& row : r.rows) mean += row.test.accuracy / 4;
  CHECK(r.mean_accuracy == doctest::Approx(mean).epsilon(1e-15));
  const Json j = to_json(r);
  CHECK(j.at("rows").size() == 4);
  const LodoResult again = lodo(t, data);
  CHECK(to_json(again).dump() == j.dump());
}

TEST_CASE("reduced heads match hand-built linear models") {
  TrainConfig t = tiny_config();
  Rng rng(2, 0);
  std::vector<float> img(t.model.backbone.input_size());
  for (float& v : img) v = float(rng.uniform());

  ModelConfig presence_only = t.model;
  presence_only.families = {true, false, false, false};
  const auto p = Model<double>::create(presence_only, 5);
  REQUIRE(p.catalog().size() == std::size_t(presence_only.primitives));
  const std::vector<double> x(img.begin(), img.end());
  const auto inf = p.infer(x);
  const auto w = p.class_weight_matrix();
  const int K = presence_only.primitives;
  for (int c = 0; c < presence_only.classes; ++c) {
    double s = 0;
    for (int k = 0; k < K; ++k) s += w[c * K + k] * inf.description.descriptors[k].presence;
    CHECK(inf.logits[c] == doctest::Approx(p.omega() * s).epsilon(1e-12));
  }

  ModelConfig none = t.model;
  none.relations = false;
  const auto n = Model<double>::create(none, 6);
  const auto ni = n.infer(x);
  const auto z = descriptor_features<double>(ni.description.descriptors);
  REQUIRE(z.size() == std::size_t(5 * K));
  const auto W = n.params()[n.slots().head_weight];
  const auto b = n.params()[n.slots().head_bias];
  for (int c = 0; c < none.classes; ++c) {
    double l = b[c];
    for (std::size_t f = 0; f < z.size(); ++f) l += W[c * z.size() + f] * z[f];
    CHECK(ni.logits[c] == doctest::Approx(l).epsilon(1e-12));
  }
}
