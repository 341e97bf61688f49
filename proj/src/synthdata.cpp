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

#include "parse/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "parse/error.hpp"

namespace parse {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 4> kGlyphNames{"circle", "triangle", "square", "cross"};
constexpr std::array<std::string_view, 4> kDomainNames{"solid", "outline", "textured", "inverted"};
constexpr std::array<std::string_view, 3> kGlyphModeNames{"distinct", "random", "shared"};
constexpr double kMinPartDistance = 0.3;
constexpr double kCanonicalExtent = 0.6;

struct Color {
  double r, g, b;
};

Color hsv(double h, double s, double v) {
  const double c = v * s;
  const double hp = std::fmod(h, 1.0) * 6.0;
  const double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) r = c, g = x;
  else if (hp < 2) r = x, g = c;
  else if (hp < 3) g = c, b = x;
  else if (hp < 4) g = x, b = c;
  else if (hp < 5) r = x, b = c;
  else r = c, b = x;
  const double m = v - c;
  return {(r + m) * 255, (g + m) * 255, (b + m) * 255};
}

// Glyph membership in units of the glyph radius.
bool inside(Glyph g, double dx, double dy) {
  switch (g) {
    case Glyph::kCircle:
      return dx * dx + dy * dy <= 1.0;
    case Glyph::kSquare:
      return std::max(std::abs(dx), std::abs(dy)) <= 0.8;
    case Glyph::kTriangle: {
      const double s = std::sqrt(3.0) / 2.0;
      return dy <= 0.5 && s * dx - 0.5 * dy <= 0.5 && -s * dx - 0.5 * dy <= 0.5;
    }
    case Glyph::kCross:
      return (std::abs(dx) <= 0.3 && std::abs(dy) <= 0.95) ||
             (std::abs(dy) <= 0.3 && std::abs(dx) <= 0.95);
  }
  return false;
}

std::uint8_t clamp_byte(double v) { return std::uint8_t(std::clamp(std::lround(v), 0L, 255L)); }

// Per-pixel canvas in doubles, quantized once at the end.
struct Canvas {
  int size;
  std::vector<double> rgb;
  explicit Canvas(int s) : size(s), rgb(std::size_t(s) * s * 3, 0.0) {}
  void blend(int x, int y, const Color& c, double alpha) {
    double* p = rgb.data() + (std::size_t(y) * size + x) * 3;
    p[0] += alpha * (c.r - p[0]);
    p[1] += alpha * (c.g - p[1]);
    p[2] += alpha * (c.b - p[2]);
  }
  RgbImage quantize() const {
    RgbImage out(size, size);
    for (std::size_t i = 0; i < rgb.size(); ++i) out.pixels[i] = clamp_byte(rgb[i]);
    return out;
  }
};

double to_norm(double px, int size) { return 2.0 * px / (size - 1) - 1.0; }

// Coverage of a glyph over one pixel with 3x3 supersampling. `inner` > 0
// carves the interior out for outline rendering.
double coverage(Glyph g, double cx, double cy, double radius, double inner, int x, int y,
                int size) {
  int hits = 0;
  for (int sy = 0; sy < 3; ++sy)
    for (int sx = 0; sx < 3; ++sx) {
      const double px = to_norm(x + (sx - 1) / 3.0, size);
      const double py = to_norm(y + (sy - 1) / 3.0, size);
      const double dx = px - cx, dy = py - cy;
      if (!inside(g, dx / radius, dy / radius)) continue;
      if (inner > 0 && inside(g, dx / inner, dy / inner)) continue;
      ++hits;
    }
  return hits / 9.0;
}

}  // namespace

std::string_view glyph_name(Glyph g) { return kGlyphNames[int(g)]; }
std::string_view domain_name(Domain d) { return kDomainNames[int(d)]; }

Glyph glyph_from_name(std::string_view name) {
  for (int i = 0; i < 4; ++i)
    if (kGlyphNames[i] == name) return Glyph(i);
  throw InvalidArgument("unknown glyph '" + std::string(name) + "'");
}

Domain domain_from_name(std::string_view name) {
  for (int i = 0; i < 4; ++i)
    if (kDomainNames[i] == name) return Domain(i);
  throw InvalidArgument("unknown domain '" + std::string(name) + "'");
}

std::string_view glyph_mode_name(GlyphMode m) { return kGlyphModeNames[int(m)]; }

GlyphMode glyph_mode_from_name(std::string_view name) {
  for (int i = 0; i < 3; ++i)
    if (kGlyphModeNames[i] == name) return GlyphMode(i);
  throw InvalidArgument("unknown glyph mode '" + std::string(name) + "'");
}

std::vector<Domain> all_domains() {
  return {Domain::kSolid, Domain::kOutline, Domain::kTextured, Domain::kInverted};
}

void SynthConfig::validate() const {
  if (classes < 1) throw InvalidArgument("synth: need at least one class");
  if (domains.empty()) throw InvalidArgument("synth: need at least one domain");
  for (std::size_t i = 0; i < domains.size(); ++i)
    for (std::size_t j = i + 1; j < domains.size(); ++j)
      if (domains[i] == domains[j]) throw InvalidArgument("synth: duplicate domain");
  if (per_class < 1) throw InvalidArgument("synth: per-class count must be positive");
  if (image_size < 8) throw InvalidArgument("synth: image size must be at least 8");
  if (!(jitter >= 0) || !(layout_shift >= 0) || layout_shift > 0.3)
    throw InvalidArgument("synth: jitter must be >= 0 and layout shift in [0, 0.3]");
}

std::vector<ClassSpec> make_class_specs(const SynthConfig& config) {
  config.validate();
  std::vector<Glyph> shared;
  {
    Rng rng(config.seed, stream_id(streams::kClassSpec, 1u << 20));
    for (int i = 0; i < 5; ++i) shared.push_back(Glyph(rng.below(4)));
  }
  std::vector<ClassSpec> specs;
  for (int c = 0; c < config.classes; ++c) {
    Rng rng(config.seed, stream_id(streams::kClassSpec, std::uint64_t(c)));
    ClassSpec spec;
    spec.id = c;
    spec.jitter = config.jitter;
    const GlyphMode mode = config.glyphs;
    const int parts = mode == GlyphMode::kShared     ? 4
                      : mode == GlyphMode::kDistinct ? 3 + int(rng.below(2))
                                                     : 3 + int(rng.below(3));
    std::array<int, 4> kinds{0, 1, 2, 3};
    if (mode == GlyphMode::kDistinct) rng.shuffle(std::span<int>(kinds));
    for (int attempt = 0; int(spec.parts.size()) < parts; ++attempt) {
      if (attempt > 10000) throw InvalidArgument("synth: cannot place parts");
      Part p;
      p.glyph = mode == GlyphMode::kShared     ? shared[spec.parts.size()]
                : mode == GlyphMode::kDistinct ? Glyph(kinds[spec.parts.size()])
                                               : Glyph(rng.below(4));
      p.radius = rng.uniform(0.14, 0.19);
      p.cx = rng.uniform(-kCanonicalExtent, kCanonicalExtent);
      p.cy = rng.uniform(-kCanonicalExtent, kCanonicalExtent);
      bool ok = true;
      for (const Part& q : spec.parts) {
        const double d = std::hypot(p.cx - q.cx, p.cy - q.cy);
        if (d < std::max(kMinPartDistance, p.radius + q.radius + 0.08)) ok = false;
      }
      if (ok) spec.parts.push_back(p);
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

Sample render_sample(const ClassSpec& spec, Domain domain, int size, double layout_shift,
                     Rng& layout, Rng& style) {
  Sample s;
  s.label = spec.id;
  s.domain = domain;
  const double sx = layout_shift > 0 ? layout.uniform(-layout_shift, layout_shift) : 0.0;
  const double sy = layout_shift > 0 ? layout.uniform(-layout_shift, layout_shift) : 0.0;
  for (const Part& p : spec.parts) {
    double cx = p.cx + sx, cy = p.cy + sy;
    if (spec.jitter > 0) {
      cx += layout.normal(0.0, spec.jitter);
      cy += layout.normal(0.0, spec.jitter);
    }
    const double lim = 1.0 - p.radius;
    s.centers.push_back({std::clamp(cx, -lim, lim), std::clamp(cy, -lim, lim)});
  }

  Canvas canvas(size);
  const double px_norm = 2.0 / (size - 1);
  auto fill_background = [&](auto&& color_at) {
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) canvas.blend(x, y, color_at(x, y), 1.0);
  };
  std::vector<Color> part_colors;
  for (std::size_t i = 0; i < spec.parts.size(); ++i) {
    const double hue = style.uniform();
    switch (domain) {
      case Domain::kSolid:
        part_colors.push_back(hsv(hue, style.uniform(0.6, 1.0), style.uniform(0.45, 0.8)));
        break;
      case Domain::kOutline:
        part_colors.push_back(hsv(hue, style.uniform(0.0, 0.6), style.uniform(0.0, 0.35)));
        break;
      case Domain::kTextured:
        part_colors.push_back(hsv(hue, style.uniform(0.3, 0.9), style.uniform(0.3, 0.9)));
        break;
      case Domain::kInverted:
        part_colors.push_back(hsv(hue, style.uniform(0.2, 0.7), style.uniform(0.85, 1.0)));
        break;
    }
  }

  switch (domain) {
    case Domain::kSolid: {
      const Color bg = hsv(style.uniform(), style.uniform(0.0, 0.2), style.uniform(0.85, 1.0));
      fill_background([&](int, int) { return bg; });
      break;
    }
    case Domain::kOutline: {
      const double v = style.uniform(235, 255);
      fill_background([&](int, int) { return Color{v, v, v}; });
      break;
    }
    case Domain::kTextured: {
      const double base = style.uniform(90, 170);
      std::vector<Color> noise;
      fill_background([&](int, int) {
        const double n = style.uniform(-40, 40);
        return Color{base + n, base + n * 0.8, base + n * 0.6};
      });
      break;
    }
    case Domain::kInverted: {
      const double v = style.uniform(0, 45);
      fill_background([&](int, int) { return Color{v, v, v * 1.2}; });
      // Background clutter: short strokes of random grey.
      const int strokes = 8 + int(style.below(8));
      for (int k = 0; k < strokes; ++k) {
        const double x0 = style.uniform(0, size - 1), y0 = style.uniform(0, size - 1);
        const double ang = style.uniform(0, std::numbers::pi);
        const double len = style.uniform(3, 9);
        const double g = style.uniform(60, 150);
        for (int t = 0; t <= int(len * 2); ++t) {
          const int x = int(std::lround(x0 + std::cos(ang) * t * 0.5));
          const int y = int(std::lround(y0 + std::sin(ang) * t * 0.5));
          if (x >= 0 && y >= 0 && x < size && y < size) canvas.blend(x, y, {g, g, g}, 0.8);
        }
      }
      break;
    }
  }

  for (std::size_t i = 0; i < spec.parts.size(); ++i) {
    const Part& p = spec.parts[i];
    const double cx = s.centers[i][0], cy = s.centers[i][1];
    const Color c = part_colors[i];
    // Texture: stripes of two tones at a random angle and period.
    const double ang = style.uniform(0, std::numbers::pi);
    const double period = style.uniform(3.0, 6.0);
    const double phase = style.uniform(0, period);
    const Color c2 = {c.r * 0.4 + 150, c.g * 0.4 + 150, c.b * 0.4 + 150};
    const double inner = domain == Domain::kOutline ? p.radius - 1.8 * px_norm : 0.0;
    const int x_lo = std::max(0, int((cx - p.radius + 1) / px_norm) - 1);
    const int x_hi = std::min(size - 1, int((cx + p.radius + 1) / px_norm) + 1);
    const int y_lo = std::max(0, int((cy - p.radius + 1) / px_norm) - 1);
    const int y_hi = std::min(size - 1, int((cy + p.radius + 1) / px_norm) + 1);
    for (int y = y_lo; y <= y_hi; ++y)
      for (int x = x_lo; x <= x_hi; ++x) {
        const double a = coverage(p.glyph, cx, cy, p.radius, inner, x, y, size);
        if (a <= 0) continue;
        Color col = c;
        if (domain == Domain::kTextured) {
          const double u = x * std::cos(ang) + y * std::sin(ang) + phase;
          if (std::fmod(u, period) < period / 2) col = c2;
        }
        canvas.blend(x, y, col, a);
      }
  }
  s.image = canvas.quantize();
  return s;
}

Sample make_sample(const SynthConfig& config, const std::vector<ClassSpec>& specs, int label,
                   Domain domain, int index) {
  if (label < 0 || label >= int(specs.size())) throw InvalidArgument("synth: bad class");
  Rng layout(config.seed, stream_id(streams::kLayout, std::uint64_t(label), std::uint64_t(index)));
  Rng style(config.seed, stream_id(streams::kStyle, std::uint64_t(label), std::uint64_t(index),
                                   std::uint64_t(domain)));
  Sample s = render_sample(specs[label], domain, config.image_size, config.layout_shift, layout,
                           style);
  s.index = index;
  return s;
}

std::string sample_path(Domain domain, int label, int index) {
  return std::string(domain_name(domain)) + "/" + std::to_string(label) + "/" +
         std::to_string(index) + ".png";
}

namespace {

json manifest_json(const SynthConfig& config, const std::vector<ClassSpec>& specs) {
  json domains = json::array();
  for (Domain d : config.domains) domains.push_back(domain_name(d));
  json classes = json::array();
  for (const ClassSpec& s : specs) {
    json parts = json::array();
    for (const Part& p : s.parts)
      parts.push_back({{"glyph", glyph_name(p.glyph)},
                       {"center", {p.cx, p.cy}},
                       {"radius", p.radius}});
    classes.push_back({{"id", s.id}, {"parts", parts}, {"jitter", s.jitter}});
  }
  return {{"format", "parse-synthdata"},
          {"version", 1},
          {"seed", config.seed},
          {"classes", classes},
          {"domains", domains},
          {"per_class", config.per_class},
          {"image_size", config.image_size},
          {"jitter", config.jitter},
          {"layout_shift", config.layout_shift},
          {"glyphs", glyph_mode_name(config.glyphs)},
          {"samples", config.classes * int(config.domains.size()) * config.per_class},
          {"split",
           {{"test", "all samples of the target domain"},
            {"val", "per (class, source domain): round(val_fraction * per_class) samples "
                    "chosen by a seeded shuffle of indices"},
            {"val_fraction", 0.2}}}};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write file", path.string());
  out << text;
  if (!out) throw IoError("write failed", path.string());
}

}  // namespace

void generate(const SynthConfig& config, const std::string& out_dir) {
  const auto specs = make_class_specs(config);
  const fs::path root(out_dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create directory", root.string());
  json labels = json::array();
  for (Domain d : config.domains)
    for (int c = 0; c < config.classes; ++c) {
      fs::create_directories(root / domain_name(d) / std::to_string(c), ec);
      if (ec) throw IoError("cannot create directory", (root / domain_name(d)).string());
      for (int i = 0; i < config.per_class; ++i) {
        const Sample s = make_sample(config, specs, c, d, i);
        const std::string rel = sample_path(d, c, i);
        write_png((root / rel).string(), s.image);
        json centers = json::array();
        for (const auto& p : s.centers) centers.push_back({p[0], p[1]});
        labels.push_back({{"path", rel},
                          {"class", c},
                          {"domain", domain_name(d)},
                          {"index", i},
                          {"centers", centers}});
      }
    }
  write_text(root / "manifest.json", manifest_json(config, specs).dump(2) + "\n");
  write_text(root / "labels.json", labels.dump(1) + "\n");
}

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open", path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid JSON in ") + path.string() + ": " + e.what(), 0);
  }
}

}  // namespace

Dataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  const json m = read_json(root / "manifest.json");
  Dataset data;
  data.root = dir;
  try {
    if (m.at("format") != "parse-synthdata") throw FormatError("not a synthdata manifest", 0);
    SynthConfig& c = data.config;
    c.seed = m.at("seed").get<std::uint64_t>();
    c.classes = int(m.at("classes").size());
    c.domains.clear();
    for (const auto& d : m.at("domains")) c.domains.push_back(domain_from_name(d.get<std::string>()));
    c.per_class = m.at("per_class").get<int>();
    c.image_size = m.at("image_size").get<int>();
    c.jitter = m.at("jitter").get<double>();
    c.layout_shift = m.value("layout_shift", 0.0);
    c.glyphs = glyph_mode_from_name(m.at("glyphs").get<std::string>());
    for (const auto& jc : m.at("classes")) {
      ClassSpec s;
      s.id = jc.at("id").get<int>();
      s.jitter = jc.at("jitter").get<double>();
      for (const auto& jp : jc.at("parts")) {
        Part p;
        p.glyph = glyph_from_name(jp.at("glyph").get<std::string>());
        p.cx = jp.at("center").at(0).get<double>();
        p.cy = jp.at("center").at(1).get<double>();
        p.radius = jp.at("radius").get<double>();
        s.parts.push_back(p);
      }
      data.specs.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed manifest: ") + e.what(), 0);
  }
  const json labels = read_json(root / "labels.json");
  try {
    for (const auto& e : labels) {
      DatasetSample s;
      s.path = e.at("path").get<std::string>();
      s.label = e.at("class").get<int>();
      s.domain = domain_from_name(e.at("domain").get<std::string>());
      s.index = e.at("index").get<int>();
      for (const auto& p : e.at("centers")) s.centers.push_back({p.at(0), p.at(1)});
      if (s.label < 0 || s.label >= data.config.classes)
        throw InvalidArgument("label out of range in " + s.path);
      s.image = read_png((root / s.path).string());
      if (s.image.width != data.config.image_size || s.image.height != data.config.image_size)
        throw FormatError("image size mismatch in " + s.path, 0);
      data.samples.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed labels.json: ") + e.what(), 0);
  }
  return data;
}

Split load_split(const Dataset& data, Domain target, double val_fraction, std::uint64_t seed) {
  if (std::find(data.config.domains.begin(), data.config.domains.end(), target) ==
      data.config.domains.end())
    throw InvalidArgument("domain '" + std::string(domain_name(target)) +
                          "' is not part of the dataset");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0))
    throw InvalidArgument("validation fraction must be in [0, 1)");
  Split split;
  const int C = data.config.classes;
  // cells[(domain, class)] -> sample indices ordered by sample index
  std::vector<std::vector<std::size_t>> cells(4 * std::size_t(C));
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    const auto& s = data.samples[i];
    if (s.domain == target) split.test.push_back(i);
    else cells[std::size_t(s.domain) * C + s.label].push_back(i);
  }
  for (int d = 0; d < 4; ++d)
    for (int c = 0; c < C; ++c) {
      auto cell = cells[std::size_t(d) * C + c];
      if (cell.empty()) continue;
      std::sort(cell.begin(), cell.end(), [&](std::size_t a, std::size_t b) {
        return data.samples[a].index < data.samples[b].index;
      });
      Rng rng(seed, stream_id(streams::kSplit, std::uint64_t(d), std::uint64_t(c)));
      rng.shuffle(std::span<std::size_t>(cell));
      const std::size_t nval = std::size_t(std::lround(val_fraction * double(cell.size())));
      for (std::size_t k = 0; k < cell.size(); ++k)
        (k < nval ? split.val : split.train).push_back(cell[k]);
    }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  if (split.train.empty()) throw InvalidArgument("load_split: empty training split");
  return split;
}

}  // namespace parse
