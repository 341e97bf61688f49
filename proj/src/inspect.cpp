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

#include "parse/inspect.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "parse/error.hpp"

namespace parse {

RgbImage heatmap_overlay(const RgbImage& image, const Inference<float>& inf, int k) {
  const auto& hm = inf.heatmaps;
  if (k < 0 || k >= hm.primitives) throw InvalidArgument("overlay: primitive out of range");
  const std::size_t cells = hm.cells();
  const float* prob = inf.description.prob.data() + std::size_t(k) * cells;
  const float peak = *std::max_element(prob, prob + cells);
  RgbImage out = image;
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const int h = y * hm.height / image.height;
      const int w = x * hm.width / image.width;
      const float a = peak > 0 ? 0.65f * prob[h * hm.width + w] / peak : 0.0f;
      std::uint8_t* p = out.at(x, y);
      p[0] = std::uint8_t(std::lround(p[0] + a * (255 - p[0])));
      p[1] = std::uint8_t(std::lround(p[1] * (1 - a)));
      p[2] = std::uint8_t(std::lround(p[2] * (1 - a)));
    }
  const auto& d = inf.description.descriptors[k];
  const int cx = int(std::lround((d.cx + 1) / 2 * (image.width - 1)));
  const int cy = int(std::lround((d.cy + 1) / 2 * (image.height - 1)));
  for (int t = -2; t <= 2; ++t) {
    for (auto [x, y] : {std::pair{cx + t, cy}, std::pair{cx, cy + t}}) {
      if (x < 0 || y < 0 || x >= image.width || y >= image.height) continue;
      std::uint8_t* p = out.at(x, y);
      p[0] = 255;
      p[1] = 255;
      p[2] = 0;
    }
  }
  return out;
}

Json inspect_image(const Model<float>& model, const RgbImage& image, const std::string& out_dir,
                   int top) {
  const BackboneConfig& b = model.config().backbone;
  if (image.width != b.input_w || image.height != b.input_h)
    throw InvalidArgument("inspect: image is " + std::to_string(image.width) + "x" +
                          std::to_string(image.height) + ", model expects " +
                          std::to_string(b.input_w) + "x" + std::to_string(b.input_h));
  const Inference<float> inf = model.infer(to_planar<float>(image));
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create directory", out_dir);

  Json overlays = Json::array();
  Json descriptors = Json::array();
  for (int k = 0; k < model.config().primitives; ++k) {
    const std::string name = "primitive_" + std::to_string(k) + ".png";
    write_png((std::filesystem::path(out_dir) / name).string(), heatmap_overlay(image, inf, k));
    overlays.push_back(name);
    const auto& d = inf.description.descriptors[k];
    descriptors.push_back({{"primitive", k},
                           {"center", {d.cx, d.cy}},
                           {"presence", d.presence},
                           {"extent", {d.ex, d.ey}}});
  }
  const int pred = argmax<float>(inf.logits);
  Json report = {{"predicted_class", pred},
                 {"logits", inf.logits},
                 {"temperature", model.temperature()},
                 {"descriptors", descriptors},
                 {"overlays", overlays}};
  if (model.config().relations) {
    const auto w = model.class_weight_matrix();
    const std::size_t M = model.catalog().size();
    std::vector<std::size_t> nz;
    for (std::size_t m = 0; m < M; ++m)
      if (w[pred * M + m] != 0) nz.push_back(m);
    std::stable_sort(nz.begin(), nz.end(),
                     [&](std::size_t a, std::size_t c) { return w[pred * M + a] > w[pred * M + c]; });
    if (int(nz.size()) > top) nz.resize(top);
    Json rel = Json::array();
    for (std::size_t m : nz) {
      const CatalogEntry& e = model.catalog().entry(m);
      std::vector<int> tuple(e.idx.begin(), e.idx.begin() + e.arity());
      rel.push_back({{"index", m},
                     {"weight", w[pred * M + m]},
                     {"family", family_name(e.family)},
                     {"instance", e.instance},
                     {"tuple", tuple},
                     {"activation", inf.activations[m]}});
    }
    report["omega"] = model.omega();
    report["score"] = inf.scores[pred];
    report["relations"] = rel;
  }
  return report;
}

}  // namespace parse
