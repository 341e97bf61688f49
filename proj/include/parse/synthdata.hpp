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
#include <string>
#include <string_view>
#include <vector>

#include "parse/image_io.hpp"
#include "parse/rng.hpp"

namespace parse {

enum class Glyph { kCircle, kTriangle, kSquare, kCross };
enum class Domain { kSolid, kOutline, kTextured, kInverted };

std::string_view glyph_name(Glyph g);
Glyph glyph_from_name(std::string_view name);
std::string_view domain_name(Domain d);
Domain domain_from_name(std::string_view name);
std::vector<Domain> all_domains();

struct Part {
  Glyph glyph = Glyph::kCircle;
  double cx = 0.0, cy = 0.0;  // canonical center, image-normalized [-1, 1]
  double radius = 0.15;
};

struct ClassSpec {
  int id = 0;
  std::vector<Part> parts;
  double jitter = 0.05;
};

// How classes draw glyph kinds for their parts.
//   distinct: 3 or 4 parts, no kind repeats within a class (default)
//   random:   3 to 5 parts, kinds drawn with replacement
//   shared:   4 parts, every class uses the same kind sequence
enum class GlyphMode { kDistinct, kRandom, kShared };
std::string_view glyph_mode_name(GlyphMode m);
GlyphMode glyph_mode_from_name(std::string_view name);

struct SynthConfig {
  int classes = 8;
  std::vector<Domain> domains = all_domains();
  int per_class = 100;  // samples per (class, domain) cell
  int image_size = 64;
  std::uint64_t seed = 0;
  double jitter = 0.05;
  // Per-sample translation of the whole layout, uniform in [-shift, shift]^2.
  double layout_shift = 0.0;
  GlyphMode glyphs = GlyphMode::kDistinct;

  void validate() const;
};

struct Sample {
  RgbImage image;
  int label = 0;
  Domain domain = Domain::kSolid;
  int index = 0;
  std::vector<std::array<double, 2>> centers;  // ground truth, diagnostics only
};

std::vector<ClassSpec> make_class_specs(const SynthConfig& config);

// Layout draws come from `layout`, pixel style from `style`.
Sample render_sample(const ClassSpec& spec, Domain domain, int image_size, double layout_shift,
                     Rng& layout, Rng& style);

// The sample at (class, domain, index) of a dataset; layout depends on
// (seed, class, index) only, so all domain renders share part centers.
Sample make_sample(const SynthConfig& config, const std::vector<ClassSpec>& specs, int label,
                   Domain domain, int index);

std::string sample_path(Domain domain, int label, int index);

// Writes manifest.json, labels.json and {domain}/{class}/{index}.png.
void generate(const SynthConfig& config, const std::string& out_dir);

struct DatasetSample {
  std::string path;
  int label = 0;
  Domain domain = Domain::kSolid;
  int index = 0;
  std::vector<std::array<double, 2>> centers;
  RgbImage image;
};

struct Dataset {
  SynthConfig config;
  std::vector<ClassSpec> specs;
  std::vector<DatasetSample> samples;
  std::string root;
};

Dataset load_dataset(const std::string& dir);

struct Split {
  std::vector<std::size_t> train, val, test;  // indices into Dataset::samples
};

// Target domain becomes the test set; the sources are split train/val,
// stratified per (class, domain), as a function of indices and seed only.
Split load_split(const Dataset& data, Domain target, double val_fraction, std::uint64_t seed);

}  // namespace parse
