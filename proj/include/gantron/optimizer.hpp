// gantron/optimizer.hpp

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

#include <string>
#include <unordered_map>
#include <vector>

#include "gantron/nn.hpp"

namespace gantron {

// Decoupled first-order adaptive-moment optimizer (Adam). Moments are keyed
// by parameter name so they serialize alongside the checkpoint.
class Adam {
 public:
  Adam() = default;
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  double learning_rate() const { return lr_; }
  i64 step_count() const { return t_; }

  // Applies one update using gradients accumulated in ctx. Parameters that
  // never entered the pass are skipped.
  void step(const std::vector<nn::ParamRef>& params, const nn::Ctx& ctx) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, double(t_));
    const double bc2 = 1.0 - std::pow(beta2_, double(t_));
    for (const auto& ref : params) {
      const Tensor& g = ctx.grad_of(*ref.value);
      if (g.numel() == 0) continue;
      auto [m, v] = moments(ref);
      Tensor& p = *ref.value;
      for (i64 i = 0; i < p.numel(); ++i) {
        m(i) = beta1_ * m(i) + (1.0 - beta1_) * g(i);
        v(i) = beta2_ * v(i) + (1.0 - beta2_) * g(i) * g(i);
        p(i) -= lr_ * (m(i) / bc1) / (std::sqrt(v(i) / bc2) + eps_);
      }
    }
  }

  // --- checkpoint participation (trainer owns the framing) ---

  void save(std::ostream& os, const std::vector<nn::ParamRef>& params) const {
    bin::write_f64(os, lr_);
    bin::write_f64(os, beta1_);
    bin::write_f64(os, beta2_);
    bin::write_f64(os, eps_);
    bin::write_u64(os, u64(t_));
    bin::write_u32(os, u32(params.size()));
    for (const auto& ref : params) {
      bin::write_string(os, ref.name);
      auto it = m_.find(ref.name);
      const i64 n = it == m_.end() ? 0 : it->second.numel();
      bin::write_u64(os, u64(n));
      if (n > 0) {
        for (double x : it->second.data) bin::write_f64(os, x);
        for (double x : v_.at(ref.name).data) bin::write_f64(os, x);
      }
    }
  }

  void load(std::istream& is, const std::vector<nn::ParamRef>& params) {
    lr_ = bin::read_f64(is);
    beta1_ = bin::read_f64(is);
    beta2_ = bin::read_f64(is);
    eps_ = bin::read_f64(is);
    t_ = i64(bin::read_u64(is));
    const u32 count = bin::read_u32(is);
    require(count == params.size(), "Adam::load: parameter count mismatch");
    m_.clear();
    v_.clear();
    for (const auto& ref : params) {
      const std::string name = bin::read_string(is);
      require(name == ref.name, "Adam::load: parameter order mismatch at " + name);
      const i64 n = i64(bin::read_u64(is));
      if (n == 0) continue;
      require(n == ref.value->numel(), "Adam::load: moment size mismatch at " + name);
      Tensor m(ref.value->shape), v(ref.value->shape);
      for (auto& x : m.data) x = bin::read_f64(is);
      for (auto& x : v.data) x = bin::read_f64(is);
      m_[name] = std::move(m);
      v_[name] = std::move(v);
    }
  }

 private:
  std::pair<Tensor&, Tensor&> moments(const nn::ParamRef& ref) {
    auto it = m_.find(ref.name);
    if (it == m_.end()) {
      m_[ref.name] = Tensor(ref.value->shape);
      v_[ref.name] = Tensor(ref.value->shape);
    }
    return {m_[ref.name], v_[ref.name]};
  }

  double lr_ = 1e-3;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  i64 t_ = 0;
  std::unordered_map<std::string, Tensor> m_, v_;
};

}  // namespace gantron
