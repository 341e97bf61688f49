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
#include <utility>

namespace parse {

// Counter-based 64-bit generator. A stream is keyed by (seed, stream id); the
// n-th draw is splitmix64_mix(key + n * 0x9E3779B97F4A7C15), where
//   key = splitmix64_mix(seed) ^ splitmix64_mix(stream + 0xD1B54A32D192ED03).
// Draws depend only on (seed, stream, n), so independent consumers (data order,
// initialization, augmentation) never perturb each other.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n), unbiased (rejection).
  std::uint64_t below(std::uint64_t n);
  // Standard normal (Box-Muller, consumes two draws).
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  // Gamma(shape, 1) via Marsaglia-Tsang; boosted for shape < 1.
  double gamma(double shape);
  double beta(double a, double b);
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64_mix(std::uint64_t x);

// Combine several ids into one stream id (order-sensitive).
std::uint64_t stream_id(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                        std::uint64_t d = 0);

// Stream families used across the library.
namespace streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kDataOrder = 2;
inline constexpr std::uint64_t kStyleMix = 3;
inline constexpr std::uint64_t kClassSpec = 4;
inline constexpr std::uint64_t kLayout = 5;
inline constexpr std::uint64_t kStyle = 6;
inline constexpr std::uint64_t kSplit = 7;
inline constexpr std::uint64_t kToy = 8;
}  // namespace streams

}  // namespace parse
