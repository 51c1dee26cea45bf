// gantron/nn.hpp

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

#include "gantron/autograd.hpp"
#include "gantron/rng.hpp"

namespace gantron::nn {

using ad::Tape;
using ad::Var;

struct ParamRef {
  std::string name;
  Tensor* value;
};

// Per-forward context: the tape, the Tensor* -> Var binding cache for this
// pass, and dropout state. grad_enabled=false gives an inference pass whose
// parameter leaves carry no gradient.
struct Ctx {
  explicit Ctx(Tape& t) : tape(t) {}

  Tape& tape;
  bool training = false;
  bool grad_enabled = true;
  // Keeps the generator pre-net dropout on outside training (the synthesis
  // convention); validation passes leave it false.
  bool inference_dropout = false;
  Rng* rng = nullptr;

  Var p(const Tensor& t) {
    auto it = bound_.find(&t);
    if (it != bound_.end()) return it->second;
    Var v = tape.leaf_external(&t, grad_enabled);
    bound_.emplace(&t, v);
    return v;
  }

  // Gradient of a bound parameter after backward(); empty tensor when the
  // parameter never entered the pass.
  const Tensor& grad_of(const Tensor& t) const {
    static const Tensor empty;
    auto it = bound_.find(&t);
    if (it == bound_.end()) return empty;
    return tape.grad(it->second);
  }

 private:
  std::unordered_map<const Tensor*, Var> bound_;
};

// Inverted dropout; a no-op unless active. Mask draws come from ctx.rng in
// call order, so fixing the rng state fixes the masks.
inline Var dropout(Ctx& ctx, Var x, double p, bool active) {
  if (!active || p <= 0.0) return x;
  require(ctx.rng != nullptr, "dropout: no rng in context");
  Tensor mask(x.val().shape);
  for (auto& m : mask.data) m = ctx.rng->uniform() >= p ? 1.0 : 0.0;
  return ctx.tape.dropout(x, std::move(mask), 1.0 / (1.0 - p));
}

// Uniform fan-in initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
inline void init_uniform_fan_in(Tensor& t, i64 fan_in, Rng& rng) {
  const double s = 1.0 / std::sqrt(double(std::max<i64>(fan_in, 1)));
  for (auto& v : t.data) v = rng.uniform(-s, s);
}

struct Linear {
  Tensor w;  // [out, in]
  Tensor b;  // [out], empty when bias disabled
  bool has_bias = true;

  void init(i64 in, i64 out, Rng& rng, bool bias = true) {
    has_bias = bias;
    w = Tensor({out, in});
    init_uniform_fan_in(w, in, rng);
    if (bias) {
      b = Tensor({out});
      init_uniform_fan_in(b, in, rng);
    } else {
      b = Tensor();
    }
  }

  Var forward(Ctx& ctx, Var x) const {
    return ctx.tape.affine(x, ctx.p(w), has_bias ? ctx.p(b) : Var{});
  }

  i64 parameter_count() const { return w.numel() + b.numel(); }

  void collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".w", &w});
    if (has_bias) out.push_back({prefix + ".b", &b});
  }
};

struct Conv1d {
  Tensor w;  // [out, in, k]
  Tensor b;  // [out]
  bool has_bias = true;

  void init(i64 in, i64 out, i64 k, Rng& rng, bool bias = true) {
    has_bias = bias;
    w = Tensor({out, in, k});
    init_uniform_fan_in(w, in * k, rng);
    if (bias) {
      b = Tensor({out});
      init_uniform_fan_in(b, in * k, rng);
    } else {
      b = Tensor();
    }
  }

  Var forward(Ctx& ctx, Var x) const {
    return ctx.tape.conv1d(x, ctx.p(w), has_bias ? ctx.p(b) : Var{});
  }

  i64 parameter_count() const { return w.numel() + b.numel(); }

  void collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".w", &w});
    if (has_bias) out.push_back({prefix + ".b", &b});
  }
};

struct Conv2d {
  Tensor w;  // [out, in, kh, kw]
  Tensor b;

  void init(i64 in, i64 out, i64 kh, i64 kw, Rng& rng) {
    w = Tensor({out, in, kh, kw});
    init_uniform_fan_in(w, in * kh * kw, rng);
    b = Tensor({out});
    init_uniform_fan_in(b, in * kh * kw, rng);
  }

  Var forward(Ctx& ctx, Var x) const { return ctx.tape.conv2d(x, ctx.p(w), ctx.p(b)); }

  i64 parameter_count() const { return w.numel() + b.numel(); }

  void collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".w", &w});
    out.push_back({prefix + ".b", &b});
  }
};

struct Embedding {
  Tensor w;  // [vocab, dim]

  void init(i64 vocab, i64 dim, Rng& rng) {
    w = Tensor({vocab, dim});
    for (auto& v : w.data) v = rng.uniform(-0.1, 0.1);
  }

  Var forward(Ctx& ctx, const std::vector<i64>& ids) const {
    return ctx.tape.embedding(ids, ctx.p(w));
  }

  i64 parameter_count() const { return w.numel(); }

  void collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".w", &w});
  }
};

// Single-bias LSTM cell; gate order i, f, g, o in the stacked weight matrix.
struct LSTMCell {
  Tensor w;  // [4h, in + h]
  Tensor b;  // [4h]
  i64 hidden = 0;

  void init(i64 in, i64 h, Rng& rng) {
    hidden = h;
    w = Tensor({4 * h, in + h});
    init_uniform_fan_in(w, in + h, rng);
    b = Tensor({4 * h});
    init_uniform_fan_in(b, in + h, rng);
  }

  // x [B,in], h/c [B,hidden] -> (h', c')
  std::pair<Var, Var> step(Ctx& ctx, Var x, Var h, Var c) const {
    Tape& t = ctx.tape;
    Var gates = t.affine(t.concat_cols({x, h}), ctx.p(w), ctx.p(b));
    Var gi = t.sigmoid(t.slice_cols(gates, 0, hidden));
    Var gf = t.sigmoid(t.slice_cols(gates, hidden, 2 * hidden));
    Var gg = t.tanh_(t.slice_cols(gates, 2 * hidden, 3 * hidden));
    Var go = t.sigmoid(t.slice_cols(gates, 3 * hidden, 4 * hidden));
    Var c2 = t.add(t.mul(gf, c), t.mul(gi, gg));
    Var h2 = t.mul(go, t.tanh_(c2));
    return {h2, c2};
  }

  i64 parameter_count() const { return w.numel() + b.numel(); }

  void collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".w", &w});
    out.push_back({prefix + ".b", &b});
  }
};

}  // namespace gantron::nn
