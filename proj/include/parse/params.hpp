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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "parse/error.hpp"

namespace parse {

template <typename Real>
struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<Real> data;
};

// Ordered collection of named parameter tensors. Order is insertion order and
// is what checkpoints and optimizers iterate over.
template <typename Real>
class ParamStore {
 public:
  std::size_t add(std::string name, std::vector<int> shape) {
    for (const auto& t : tensors_)
      if (t.name == name) throw InvalidArgument("duplicate parameter name " + name);
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    tensors_.push_back({std::move(name), std::move(shape), std::vector<Real>(n, Real(0))});
    return tensors_.size() - 1;
  }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < tensors_.size(); ++i)
      if (tensors_[i].name == name) return i;
    throw InvalidArgument("unknown parameter " + name);
  }
  bool contains(const std::string& name) const {
    for (const auto& t : tensors_)
      if (t.name == name) return true;
    return false;
  }

  std::span<Real> operator[](std::size_t i) { return tensors_[i].data; }
  std::span<const Real> operator[](std::size_t i) const { return tensors_[i].data; }
  Real scalar(std::size_t i) const { return tensors_[i].data[0]; }

  NamedTensor<Real>& tensor(std::size_t i) { return tensors_[i]; }
  const NamedTensor<Real>& tensor(std::size_t i) const { return tensors_[i]; }
  std::size_t size() const { return tensors_.size(); }
  std::vector<NamedTensor<Real>>& tensors() { return tensors_; }
  const std::vector<NamedTensor<Real>>& tensors() const { return tensors_; }

  std::size_t total_elements() const {
    std::size_t n = 0;
    for (const auto& t : tensors_) n += t.data.size();
    return n;
  }

  ParamStore zeros_like() const {
    ParamStore out = *this;
    for (auto& t : out.tensors_) std::fill(t.data.begin(), t.data.end(), Real(0));
    return out;
  }

  void set_zero() {
    for (auto& t : tensors_) std::fill(t.data.begin(), t.data.end(), Real(0));
  }

  template <typename Other>
  ParamStore<Other> cast() const {
    ParamStore<Other> out;
    for (const auto& t : tensors_) {
      const std::size_t i = out.add(t.name, t.shape);
      auto dst = out[i];
      for (std::size_t k = 0; k < t.data.size(); ++k) dst[k] = static_cast<Other>(t.data[k]);
    }
    return out;
  }

 private:
  std::vector<NamedTensor<Real>> tensors_;
};

}  // namespace parse
