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

#include "parse/serialize.hpp"

#include <algorithm>
#include <charconv>
#include <initializer_list>

#include "parse/error.hpp"

namespace parse {

namespace {

void check_keys(const Json& j, std::initializer_list<std::string_view> allowed,
                std::string_view context) {
  if (!j.is_object()) throw InvalidArgument(std::string(context) + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw InvalidArgument(std::string(context) + ": unknown key '" + it.key() + "'");
}

template <typename T>
T get_or(const Json& j, const char* key, const T& fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    throw InvalidArgument(std::string("config: bad value for '") + key + "'");
  }
}

}  // namespace

Json to_json(const FamilySwitches& s) {
  return {{"presence", s.presence},
          {"binary", s.binary},
          {"ternary", s.ternary},
          {"quaternary", s.quaternary}};
}

FamilySwitches switches_from_json(const Json& j) {
  if (j.is_string()) {
    bool relations = true;
    return parse_family_list(j.get<std::string>(), &relations);
  }
  check_keys(j, {"presence", "binary", "ternary", "quaternary"}, "families");
  FamilySwitches s;
  s.presence = get_or(j, "presence", s.presence);
  s.binary = get_or(j, "binary", s.binary);
  s.ternary = get_or(j, "ternary", s.ternary);
  s.quaternary = get_or(j, "quaternary", s.quaternary);
  return s;
}

FamilySwitches parse_family_list(std::string_view text, bool* relations) {
  FamilySwitches s{false, false, false, false};
  *relations = true;
  if (text == "all") return FamilySwitches{};
  if (text == "none") {
    *relations = false;
    return FamilySwitches{};
  }
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find(',', pos), text.size());
    const std::string_view item = text.substr(pos, end - pos);
    if (item == "presence") s.presence = true;
    else if (item == "binary") s.binary = true;
    else if (item == "ternary") s.ternary = true;
    else if (item == "quaternary") s.quaternary = true;
    else throw InvalidArgument("unknown predicate family '" + std::string(item) + "'");
    pos = end + 1;
  }
  return s;
}

std::string family_list(const FamilySwitches& s, bool relations) {
  if (!relations) return "none";
  if (s == FamilySwitches{}) return "all";
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(s.presence, "presence");
  add(s.binary, "binary");
  add(s.ternary, "ternary");
  add(s.quaternary, "quaternary");
  return out;
}

Json to_json(const VocabCounts& c) {
  return {{"tri", c.tri}, {"turn", c.turn}, {"orient", c.orient}};
}

VocabCounts counts_from_json(const Json& j) {
  check_keys(j, {"tri", "turn", "orient"}, "counts");
  VocabCounts c;
  c.tri = get_or(j, "tri", c.tri);
  c.turn = get_or(j, "turn", c.turn);
  c.orient = get_or(j, "orient", c.orient);
  return c;
}

Json to_json(const LossConfig& c) {
  return {{"sparse", c.sparse}, {"bn", c.bn}, {"conc", c.conc}, {"ang", c.ang}};
}

LossConfig loss_from_json(const Json& j, LossConfig c) {
  check_keys(j, {"sparse", "bn", "conc", "ang"}, "loss");
  c.sparse = get_or(j, "sparse", c.sparse);
  c.bn = get_or(j, "bn", c.bn);
  c.conc = get_or(j, "conc", c.conc);
  c.ang = get_or(j, "ang", c.ang);
  if (c.sparse < 0 || c.bn < 0 || c.conc < 0 || c.ang < 0)
    throw InvalidArgument("loss weights must be nonnegative");
  return c;
}

Json to_json(const ModelConfig& c) {
  const BackboneConfig& b = c.backbone;
  Json j = {{"input", {b.input_channels, b.input_h, b.input_w}},
          {"widths", b.widths},
          {"strides", b.strides},
          {"kernel", b.kernel},
          {"bias", b.bias},
          {"style_hook", b.style_hook},
          {"style_mix_prob", b.style_mix_prob},
          {"style_mix_beta", b.style_mix_beta},
          {"primitives", c.primitives},
          {"classes", c.classes},
          {"projection_kernel", c.projection_kernel},
          {"families", family_list(c.families, c.relations)},
          {"counts", to_json(c.counts)}};
  if (c.frozen_weights) j["frozen_weights"] = true;
  return j;
}

ModelConfig model_from_json(const Json& j, ModelConfig c) {
  check_keys(j,
             {"input", "widths", "strides", "kernel", "bias", "style_hook", "style_mix_prob",
              "style_mix_beta", "primitives", "classes", "projection_kernel", "families",
              "counts", "frozen_weights"},
             "model");
  BackboneConfig& b = c.backbone;
  if (j.contains("input")) {
    const auto in = get_or(j, "input", std::vector<int>{});
    if (in.size() != 3) throw InvalidArgument("model.input must be [channels, height, width]");
    b.input_channels = in[0];
    b.input_h = in[1];
    b.input_w = in[2];
  }
  b.widths = get_or(j, "widths", b.widths);
  b.strides = get_or(j, "strides", b.strides);
  b.kernel = get_or(j, "kernel", b.kernel);
  b.bias = get_or(j, "bias", b.bias);
  b.style_hook = get_or(j, "style_hook", b.style_hook);
  b.style_mix_prob = get_or(j, "style_mix_prob", b.style_mix_prob);
  b.style_mix_beta = get_or(j, "style_mix_beta", b.style_mix_beta);
  c.primitives = get_or(j, "primitives", c.primitives);
  c.classes = get_or(j, "classes", c.classes);
  c.projection_kernel = get_or(j, "projection_kernel", c.projection_kernel);
  if (j.contains("families")) {
    const Json& f = j.at("families");
    if (f.is_string()) c.families = parse_family_list(f.get<std::string>(), &c.relations);
    else {
      c.families = switches_from_json(f);
      c.relations = true;
    }
  }
  if (j.contains("counts")) c.counts = counts_from_json(j.at("counts"));
  c.frozen_weights = get_or(j, "frozen_weights", c.frozen_weights);
  c.validate();
  return c;
}

Json to_json(const SynthConfig& c) {
  Json domains = Json::array();
  for (Domain d : c.domains) domains.push_back(domain_name(d));
  return {{"classes", c.classes},       {"domains", domains},
          {"per_class", c.per_class},   {"image_size", c.image_size},
          {"seed", c.seed},             {"jitter", c.jitter},
          {"layout_shift", c.layout_shift}, {"glyphs", glyph_mode_name(c.glyphs)}};
}

SynthConfig synth_from_json(const Json& j, SynthConfig c) {
  check_keys(j,
             {"classes", "domains", "per_class", "image_size", "seed", "jitter", "layout_shift",
              "glyphs"},
             "data");
  c.classes = get_or(j, "classes", c.classes);
  if (j.contains("domains")) {
    c.domains.clear();
    for (const auto& d : j.at("domains")) c.domains.push_back(domain_from_name(d.get<std::string>()));
  }
  c.per_class = get_or(j, "per_class", c.per_class);
  c.image_size = get_or(j, "image_size", c.image_size);
  c.seed = get_or(j, "seed", c.seed);
  c.jitter = get_or(j, "jitter", c.jitter);
  c.layout_shift = get_or(j, "layout_shift", c.layout_shift);
  if (j.contains("glyphs")) {
    if (!j.at("glyphs").is_string()) throw InvalidArgument("data: glyphs must be a string");
    c.glyphs = glyph_mode_from_name(j.at("glyphs").get<std::string>());
  }
  c.validate();
  return c;
}

Json catalog_descriptor(const RelationCatalog& cat) {
  Json j = {{"canonicalization", kCanonicalizationVersion},
            {"primitives", cat.primitives()},
            {"counts", to_json(cat.counts())},
            {"families", to_json(cat.switches())},
            {"size", cat.size()},
            {"fingerprint", cat.fingerprint()},
            {"compacted", cat.compacted()}};
  if (cat.compacted()) {
    Json entries = Json::array();
    for (const auto& e : cat.entries()) entries.push_back(entry_label(e));
    j["entries"] = std::move(entries);
  }
  return j;
}

CatalogEntry parse_entry_label(std::string_view label) {
  const std::size_t slash = label.find('/');
  const std::size_t colon = label.find(':');
  if (slash == std::string_view::npos || colon == std::string_view::npos || colon < slash)
    throw InvalidArgument("malformed catalog entry '" + std::string(label) + "'");
  CatalogEntry e;
  e.family = family_from_name(label.substr(0, slash));
  auto parse_int = [&](std::string_view s) {
    int v = -1;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || v < 0 || v > 255)
      throw InvalidArgument("malformed catalog entry '" + std::string(label) + "'");
    return v;
  };
  e.instance = std::uint8_t(parse_int(label.substr(slash + 1, colon - slash - 1)));
  std::string_view rest = label.substr(colon + 1);
  int r = 0;
  while (true) {
    const std::size_t comma = rest.find(',');
    if (r >= e.arity()) throw InvalidArgument("too many indices in '" + std::string(label) + "'");
    e.idx[r++] = std::uint8_t(parse_int(rest.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  if (r != e.arity()) throw InvalidArgument("too few indices in '" + std::string(label) + "'");
  return e;
}

RelationCatalog catalog_from_descriptor(const Json& j) {
  try {
    if (j.at("canonicalization").get<int>() != kCanonicalizationVersion)
      throw InvalidArgument("unsupported catalog canonicalization version");
    const int K = j.at("primitives").get<int>();
    const VocabCounts counts = counts_from_json(j.at("counts"));
    const FamilySwitches sw = switches_from_json(j.at("families"));
    RelationCatalog cat = [&] {
      if (!j.at("compacted").get<bool>()) return RelationCatalog::build(K, counts, sw);
      std::vector<CatalogEntry> entries;
      for (const auto& s : j.at("entries")) entries.push_back(parse_entry_label(s.get<std::string>()));
      return RelationCatalog::from_entries(K, counts, sw, std::move(entries), true);
    }();
    if (cat.size() != j.at("size").get<std::size_t>())
      throw InvalidArgument("catalog size does not match descriptor");
    if (cat.fingerprint() != j.at("fingerprint").get<std::string>())
      throw InvalidArgument("catalog fingerprint mismatch: descriptor " +
                            j.at("fingerprint").get<std::string>() + ", rebuilt " +
                            cat.fingerprint());
    return cat;
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("malformed catalog descriptor: ") + e.what());
  }
}

}  // namespace parse
