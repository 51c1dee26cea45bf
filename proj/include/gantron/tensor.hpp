// gantron/tensor.hpp

// Copyright 2026  GANtron Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "gantron/common.hpp"
#include "gantron/rng.hpp"

namespace gantron {

// Dense row-major tensor of doubles. All model math runs in 64-bit so the
// finite-difference gradient checks have headroom; file containers downcast
// where their format says so.
struct Tensor {
  std::vector<i64> shape;
  std::vector<double> data;

  Tensor() = default;

  explicit Tensor(std::vector<i64> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(count(shape)), 0.0);
  }

  static Tensor zeros(std::vector<i64> s) { return Tensor(std::move(s)); }

  static Tensor full(std::vector<i64> s, double v) {
    Tensor t(std::move(s));
    for (auto& x : t.data) x = v;
    return t;
  }

  static Tensor from(std::vector<i64> s, std::vector<double> d) {
    Tensor t;
    t.shape = std::move(s);
    require(static_cast<i64>(d.size()) == count(t.shape), "Tensor::from: size mismatch");
    t.data = std::move(d);
    return t;
  }

  static Tensor uniform(std::vector<i64> s, double lo, double hi, Rng& rng) {
    Tensor t(std::move(s));
    for (auto& x : t.data) x = rng.uniform(lo, hi);
    return t;
  }

  static i64 count(const std::vector<i64>& s) {
    i64 n = 1;
    for (i64 d : s) n *= d;
    return n;
  }

  i64 numel() const { return static_cast<i64>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  i64 dim(int i) const { return shape[static_cast<size_t>(i)]; }

  double& operator()(i64 i) { return data[size_t(i)]; }
  double operator()(i64 i) const { return data[size_t(i)]; }
  double& operator()(i64 i, i64 j) { return data[size_t(i * shape[1] + j)]; }
  double operator()(i64 i, i64 j) const { return data[size_t(i * shape[1] + j)]; }
  double& operator()(i64 i, i64 j, i64 k) {
    return data[size_t((i * shape[1] + j) * shape[2] + k)];
  }
  double operator()(i64 i, i64 j, i64 k) const {
    return data[size_t((i * shape[1] + j) * shape[2] + k)];
  }
  double& operator()(i64 i, i64 j, i64 k, i64 l) {
    return data[size_t(((i * shape[1] + j) * shape[2] + k) * shape[3] + l)];
  }
  double operator()(i64 i, i64 j, i64 k, i64 l) const {
    return data[size_t(((i * shape[1] + j) * shape[2] + k) * shape[3] + l)];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool all_finite() const {
    for (double v : data)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data) m = std::max(m, std::abs(v));
    return m;
  }
};

}  // namespace gantron
