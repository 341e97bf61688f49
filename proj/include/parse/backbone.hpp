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
#include <vector>

#include "parse/layers.hpp"

namespace parse {

// Plain conv stack: 3x3 conv + bias + ReLU per block.
struct BackboneConfig {
  int input_h = 64;
  int input_w = 64;
  int input_channels = 3;
  std::vector<int> widths{32, 64, 64};
  std::vector<int> strides{2, 2, 1};
  int kernel = 3;
  bool bias = true;
  // Style mixing is applied to the output of this many blocks (1 = after block 1).
  int style_hook = 1;
  double style_mix_prob = 0.5;
  double style_mix_beta = 0.1;

  int blocks() const { return int(widths.size()); }
  ConvShape block(int b) const;
  int feature_channels() const { return widths.back(); }
  int feature_h() const;
  int feature_w() const;
  std::size_t input_size() const { return std::size_t(input_channels) * input_h * input_w; }
  void validate() const;
};

// Feature-level style mixing across a batch of N instances with C channels of
// `cells` spatial positions each:
//   F' = (F - mu) / max(s, 1e-6) * (l s + (1-l) s_p) + (l mu + (1-l) mu_p)
// with per-instance, per-channel spatial mean mu and std s, p = perm[b]. The
// instance is returned unchanged when l == 1 or perm[b] == b.
template <typename Real>
void style_mix(std::span<const Real> batch, int instances, int channels, std::size_t cells,
               Real lambda, std::span<const int> perm, std::span<Real> out);

// Exact gradient of style_mix (statistics included) w.r.t. the input batch.
template <typename Real>
void style_mix_backward(std::span<const Real> batch, int instances, int channels,
                        std::size_t cells, Real lambda, std::span<const int> perm,
                        std::span<const Real> grad_out, std::span<Real> grad_in);

// One draw of the augmentation for a batch.
struct StyleMixDraw {
  double lambda = 1.0;
  std::vector<int> perm;
};

}  // namespace parse
