// gantron/autograd.hpp

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

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "gantron/tensor.hpp"

namespace gantron::ad {

// Reverse-mode autodiff on a per-step tape. Nodes are appended in evaluation
// order, so walking the tape backwards is a valid topological order for the
// backward pass. A tape is built for one forward pass, consumed by one
// backward() call, then cleared.
//
// Parameter tensors live outside the tape (owned by the model) and enter a
// pass as external leaves; their gradients accumulate in the corresponding
// node and are read out by the optimizer after backward().

class Tape;

struct Var {
  Tape* tape = nullptr;
  int id = -1;
  bool valid() const { return tape != nullptr && id >= 0; }
  const Tensor& val() const;
};

class Tape {
 public:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;  // leaf aliasing persistent storage
    Tensor grad;                       // empty until touched by backward
    bool requires_grad = false;
    std::function<void()> backward;
  };

  bool recording() const { return recording_; }
  void set_recording(bool r) { recording_ = r; }

  size_t size() const { return nodes_.size(); }

  void clear() {
    nodes_.clear();
    ran_backward_ = false;
  }

  const Tensor& val(int id) const {
    const Node& n = nodes_[size_t(id)];
    return n.external ? *n.external : n.value;
  }

  const Tensor& grad(Var v) const {
    static const Tensor empty;
    const Node& n = nodes_[size_t(v.id)];
    return n.grad.numel() > 0 ? n.grad : empty;
  }

  Var leaf(Tensor value, bool requires_grad = false) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad && recording_;
    nodes_.push_back(std::move(n));
    return {this, int(nodes_.size()) - 1};
  }

  Var constant(Tensor value) { return leaf(std::move(value), false); }

  Var leaf_external(const Tensor* value, bool requires_grad = true) {
    Node n;
    n.external = value;
    n.requires_grad = requires_grad && recording_;
    nodes_.push_back(std::move(n));
    return {this, int(nodes_.size()) - 1};
  }

  // Runs backward from a scalar root. One call per tape lifetime.
  void backward(Var root) {
    require(!ran_backward_, "Tape::backward called twice without clear()");
    require(val(root.id).numel() == 1, "backward root must be scalar");
    ran_backward_ = true;
    gbuf(root.id)(0) = 1.0;
    for (int i = root.id; i >= 0; --i) {
      Node& n = nodes_[size_t(i)];
      if (!n.requires_grad || !n.backward) continue;
      if (n.grad.numel() == 0) continue;  // not on any path from the root
      n.backward();
    }
  }

  // ---- ops ----

  Var add(Var a, Var b) {
    const Tensor &A = val(a.id), &B = val(b.id);
    require(A.same_shape(B), "add: shape mismatch");
    Tensor out = A;
    for (i64 i = 0; i < out.numel(); ++i) out(i) += B(i);
    return unary_binary(std::move(out), {a.id, b.id}, [this](int oid, int ai, int bi) {
      const Tensor& g = nodes_[size_t(oid)].grad;
      axpy(gbuf(ai), g, 1.0);
      axpy(gbuf(bi), g, 1.0);
    });
  }

  Var sub(Var a, Var b) {
    const Tensor &A = val(a.id), &B = val(b.id);
    require(A.same_shape(B), "sub: shape mismatch");
    Tensor out = A;
    for (i64 i = 0; i < out.numel(); ++i) out(i) -= B(i);
    return unary_binary(std::move(out), {a.id, b.id}, [this](int oid, int ai, int bi) {
      const Tensor& g = nodes_[size_t(oid)].grad;
      axpy(gbuf(ai), g, 1.0);
      axpy(gbuf(bi), g, -1.0);
    });
  }

  Var mul(Var a, Var b) {
    const Tensor &A = val(a.id), &B = val(b.id);
    require(A.same_shape(B), "mul: shape mismatch");
    Tensor out = A;
    for (i64 i = 0; i < out.numel(); ++i) out(i) *= B(i);
    return unary_binary(std::move(out), {a.id, b.id}, [this](int oid, int ai, int bi) {
      const Tensor& g = nodes_[size_t(oid)].grad;
      const Tensor &A2 = val(ai), &B2 = val(bi);
      Tensor &ga = gbuf(ai), &gb = gbuf(bi);
      for (i64 i = 0; i < g.numel(); ++i) {
        ga(i) += g(i) * B2(i);
        gb(i) += g(i) * A2(i);
      }
    });
  }

  Var scale(Var a, double c) {
    Tensor out = val(a.id);
    for (auto& x : out.data) x *= c;
    int oid = push(std::move(out), {a.id});
    if (grad_needed(oid)) {
      set_backward(oid, [this, oid, ai = a.id, c] {
        axpy(gbuf(ai), nodes_[size_t(oid)].grad, c);
      });
    }
    return {this, oid};
  }

  Var neg(Var a) { return scale(a, -1.0); }

  // x [B,I] * W^T [I,O] + b -> [B,O]; the dense-layer workhorse.
  Var affine(Var x, Var w, Var b) {
    const Tensor& X = val(x.id);
    const Tensor& W = val(w.id);
    require(X.rank() == 2 && W.rank() == 2, "affine: rank");
    const i64 B = X.dim(0), I = X.dim(1), O = W.dim(0);
    require(W.dim(1) == I, "affine: inner dim mismatch");
    const bool has_b = b.valid();
    if (has_b) require(val(b.id).numel() == O, "affine: bias size");
    Tensor out({B, O});
    for (i64 r = 0; r < B; ++r) {
      for (i64 o = 0; o < O; ++o) {
        double acc = has_b ? val(b.id)(o) : 0.0;
        const double* xr = &X.data[size_t(r * I)];
        const double* wr = &W.data[size_t(o * I)];
        for (i64 i = 0; i < I; ++i) acc += xr[i] * wr[i];
        out(r, o) = acc;
      }
    }
    std::vector<int> parents{x.id, w.id};
    if (has_b) parents.push_back(b.id);
    int oid = push(std::move(out), parents);
    if (grad_needed(oid)) {
      set_backward(oid, [this, oid, xi = x.id, wi = w.id, bi = has_b ? b.id : -1, B, I, O] {
        const Tensor& g = nodes_[size_t(oid)].grad;
        const Tensor& X2 = val(xi);
        const Tensor& W2 = val(wi);
        Tensor& gx = gbuf(xi);
        Tensor& gw = gbuf(wi);
        for (i64 r = 0; r < B; ++r) {
          for (i64 o = 0; o < O; ++o) {
            const double go = g(r, o);
            if (go == 0.0) continue;
            double* gxr = &gx.data[size_t(r * I)];
            double* gwr = &gw.data[size_t(o * I)];
            const double* xr = &X2.data[size_t(r * I)];
            const double* wr = &W2.data[size_t(o * I)];
            for (i64 i = 0; i < I; ++i) {
              gxr[i] += go * wr[i];
              gwr[i] += go * xr[i];
            }
          }
        }
        if (bi >= 0) {
          Tensor& gb = gbuf(bi);
          for (i64 r = 0; r < B; ++r)
            for (i64 o = 0; o < O; ++o) gb(o) += g(r, o);
        }
      });
    }
    return {this, oid};
  }

  Var matmul(Var a, Var b) {
    const Tensor &A = val(a.id), &B = val(b.id);
    require(A.rank() == 2 && B.rank() == 2 && A.dim(1) == B.dim(0), "matmul: shape");
    const i64 M = A.dim(0), K = A.dim(1), N = B.dim(1);
    Tensor out({M, N});
    for (i64 m = 0; m < M; ++m)
      for (i64 k = 0; k < K; ++k) {
        const double av = A(m, k);
        if (av == 0.0) continue;
        for (i64 n = 0; n < N; ++n) out(m, n) += av * B(k, n);
      }
    return unary_binary(std::move(out), {a.id, b.id}, [this, M, K, N](int oid, int ai, int bi) {
      const Tensor& g = nodes_[size_t(oid)].grad;
      const Tensor &A2 = val(ai), &B2 = val(bi);
      Tensor &ga = gbuf(ai), &gb = gbuf(bi);
      for (i64 m = 0; m < M; ++m)
        for (i64 n = 0; n < N; ++n) {
          const double gv = g(m, n);
          if (gv == 0.0) continue;
          for (i64 k = 0; k < K; ++k) {
            ga(m, k) += gv * B2(k, n);
            gb(k, n) += gv * A2(m, k);
          }
        }
    });
  }

  Var transpose(Var a) {
    const Tensor& A = val(a.id);
    require(A.rank() == 2, "transpose: rank");
    const i64 R = A.dim(0), C = A.dim(1);
    Tensor out({C, R});
    for (i64 r = 0; r < R; ++r)
      for (i64 c = 0; c < C; ++c) out(c, r) = A(r, c);
    int oid = push(std::move(out), {a.id});
    if (grad_needed(oid)) {
      set_backward(oid, [this, oid, ai = a.id, R, C] {
        const Tensor& g = nodes_[size_t(oid)].grad;
        Tensor& ga = gbuf(ai);
        for (i64 r = 0; r < R; ++r)
          for (i64 c = 0; c < C; ++c) ga(r, c) += g(c, r);
      });
    }
    return {this, oid};
  }

  Var reshape(Var a, std::vector<i64> shape) {
    const Tensor& A = val(a.id);
    require(Tensor::count(shape) == A.numel(), "reshape: numel mismatch");
    Tensor out;
    out.shape = std::move(shape);
    out.data = A.data;
    int oid = push(std::move(out), {a.id});
    if (grad_needed(oid)) {
      set_backward(oid, [this, oid, ai = a.id] {
        const Tensor& g = nodes_[size_t(oid)].grad;
        Tensor& ga = gbuf(ai);
        for (i64 i = 0; i < g.numel(); ++i) ga(i) += g(i);
      });
    }
    return {this, oid};
  }

  Var concat_cols(const std::vector<Var>& parts) {
    require(!parts.empty(), "concat_cols: empty");
    const i64 R = val(parts[0].id).dim(0);
    i64 C = 0;
    for (const Var& p : parts) {
      const Tensor& t = val(p.id);
      require(t.rank() == 2 && t.dim(0) == R, "concat_cols: row mismatch");
      C += t.dim(1);
    }
    Tensor out({R, C});
    std::vector<i64> offsets;
    i64 off = 0;
    for (const Var& p : parts) {
      const Tensor& t = val(p.id);
      offsets.push_back(off);
      for (i64 r = 0; r < R; ++r)
        for (i64 c = 0; c < t.dim(1); ++c) out(r, off + c) = t(r, c);
      off += t.dim(1);
    }
    std::vector<int> pids;
    for (const Var& p : parts) pids.push_back(p.id);
    int oid = push(std::move(out), pids);
    if (grad_needed(oid)) {
      set_backward(oid, [this, oid, pids, offsets, R] {
        const Tensor& g = nodes_[size_t(oid)].grad;
        for (size_t k = 0; k < pids.size(); ++k) {
          Tensor& gp = gbuf(pids[k]);
          const i64 pc = gp.dim(1);
          for (i64 r = 0; r < R; ++r)
            for (i64 c = 0; c < pc; ++c) gp(r, c) += g(r, offsets[k] + c);
        }
      });
    }
    return {this, oid};
  }

  Var concat_rows(const std::vector<Var>& parts) {
    require(!parts.empty(), "concat_rows: empty");
    const i64 C = val(parts[0].id).dim(1);
    i64 R = 0;
    for (const Var& p : parts) {
      const Tensor& t = val(p.id);
      require(t.rank() == 2 && t.dim(1) == C, "concat_rows: col mismatch");
      R += t.dim(0);
    }
    Tensor out({R, C});
    std::vector<i64> offsets;
    i64 off = 0;
    for (const Var& p : parts) {
      const Tensor& t = val(p.id);
      offsets.push_back(off);
      for (i64 r = 0; r < t.dim(0); ++r)
        for (i64 c = 0; c < C; ++c) out(off + r, c) = t(r, c);
      off += t.dim(0);
    }
    std::vector<int> pids;
    for (const Var& p : parts) pids.push_back(p.id);
    int oid = push(std::move(out), pids);
    if (grad_needed(oid)) {
      set_backward(oid, [this, oid, pids, offsets, C] {
        const Tensor& g = nodes_[size_t(oid)].grad;
        for (size_t k = 0; k < pids.size(); ++k) {
          Tensor& gp = gbuf(pids[k]);
          const i64 pr = gp.dim(0);
          for (i64 r = 0; r < pr; ++r)
            for (i64 c = 0; c < C; ++c) gp(r, c) += g(offsets[k] + r, c);
        }
      });
    }
    return {this, oid};
  }

  Var slice_rows(Var a, i64 r0, i64 r1) {
    const Tensor& A = val(a.id);
    require(A.rank() == 2 && 0 <= r0 && r0 < r1 && r1 <= A.dim(0), "slice_rows: range");
    const i64 R = r1 - r0, C = A.dim(1);
    Tensor out({R, C});
    for (i64 r = 0; r < R; ++r)
      for (i64 c = 0; c < C; ++c) out(r, c) = A(r0 + r, c);
    int oid = push(std::move(out), {a.id});
    if (grad_needed(oid)) {
      set_backward(oid, [this, oid, ai = a.id, r0, R, C] {
        const Tensor& g = nodes_[size_t(oid)].grad;
        Tensor& ga = gbuf(ai);
        for (i64 r = 0; r < R; ++r)
          for (i64 c = 0; c < C; ++c) ga(r0 + r, c) += g(r, c);
      });
    }
    return {this, oid};
  }

  Var slice_cols(Var a, i64 c0, i64 c1) {
    const Tensor& A = val(a.id);
    require(A.rank() == 2 && 0 <= c0 && c0 < c1 && c1 <= A.dim(1), "slice_cols: range");
    const i64 R = A.dim(0), C = c1 - c0;
    Tensor out({R, C});
    for (i64 r = 0; r < R; ++r)
      for (i64 c = 0; c < C; ++c) out(r, c) = A(r, c0 + c);
    int oid = push(std::move(out), {a.id});
    if (grad_needed(oid)) {
      set_backward(oid, [this, oid, ai = a.id, c0, R, C] {
        const Tensor& g = nodes_[size_t(oid)].grad;
        Tensor& ga = gbuf(ai);
        for (i64 r = 0; r < R; ++r)
          for (i64 c = 0; c < C; ++c) ga(r, c0 + c) += g(r, c);
      });
    }
    return {this, oid};
  }

  // elementwise nonlinearities

  Var sigmoid(Var a) {
    Tensor out = val(a.id);
    for (auto& x : out.data) x = 1.0 / (1.0 + std::exp(-x));
    int oid = push(std::move(out), {a.id});
    if (grad_needed(oid)) {
      set_backward(oid, [this, oid, ai = a.id] {
        const Node& n = nodes_[size_t(oid)];
        Tensor& ga = gbuf(ai);
        for (i64 i = 0; i < n.grad.numel(); ++i) {
          const double y = n.value(i);
          ga(i) += n.grad(i) * y * (1.0 - y);
        }
      });
    }
    return {this, oid};
  }

  Var tanh_(Var a) {
    Tensor out = val(a.id);
    for (auto& x : out.data) x = std::tanh(x);
    int oid = push(std::move(out), {a.id});
    if (grad_needed(oid)) {
      set_backward(oid, [this, oid, ai = a.id] {
        const Node& n = nodes_[size_t(oid)];
        Tensor& ga = gbuf(ai);
        for (i64 i = 0; i < n.grad.numel(); ++i) {
          const double y = n.value(i);
          ga(i) += n.grad(i) * (1.0 - y * y);
        }
      });
    }
    return {this, oid};
  }

  Var relu(Var a) {
    Tensor out = val(a.id);
    for (auto& x : out.data) x = x > 0.0 ? x : 0.0;
    int oid = push(std::move(out), {a.id});
    if (grad_needed(oid)) {
      set_backward(oid, [this, oid, ai = a.id] {
        const Node& n = nodes_[size_t(oid)];
        const Tensor& x = val(ai);
        Tensor& ga = gbuf(ai);
        for (i64 i = 0; i < n.grad.numel(); ++i)
          if (x(i) > 0.0) ga(i) += n.grad(i);
      });
    }
    return {this, oid};
  }

  // y = x * mask * scale; mask is sampled by the caller (inverted dropout).
  Var dropout(Var a, Tensor mask, double keep_scale) {
    const Tensor& A = val(a.id);
    require(A.same_shape(mask), "dropout: mask shape");
    Tensor out = A;
    for (i64 i = 0; i < out.numel(); ++i) out(i) *= mask(i) * keep_scale;
    int oid = push(std::move(out), {a.id});
    if (grad_needed(oid)) {
      set_backward(oid, [this, oid, ai = a.id, m = std::move(mask), keep_scale] {
        const Tensor& g = nodes_[size_t(oid)].grad;
        Tensor& ga = gbuf(ai);
        for (i64 i = 0; i < g.numel(); ++i) ga(i) += g(i) * m(i) * keep_scale;
      });
    }
    return {this, oid};
  }

  // row-wise masked softmax; entries at column >= valid[r] get weight 0.
  Var softmax_rows(Var a, std::vector<i64> valid = {}) {
    const Tensor& A = val(a.id);
    require(A.rank() == 2, "softmax_rows: rank");
    const i64 R = A.dim(0), C = A.dim(1);
    if (valid.empty()) valid.assign(size_t(R), C);
    require(i64(valid.size()) == R, "softmax_rows: valid size");
    Tensor out({R, C});
    for (i64 r = 0; r < R; ++r) {
      const i64 n = valid[size_t(r)];
      require(n >= 1 && n <= C, "softmax_rows: valid range");
      double m = A(r, 0);
      for (i64 c = 1; c < n; ++c) m = std::max(m, A(r, c));
      double s = 0.0;
      for (i64 c = 0; c < n; ++c) {
        out(r, c) = std::exp(A(r, c) - m);
        s += out(r, c);
      }
      for (i64 c = 0; c < n; ++c) out(r, c) /= s;
    }
    int oid = push(std::move(out), {a.id});
    if (grad_needed(oid)) {
      set_backward(oid, [this, oid, ai = a.id, valid, R] {
        const Node& node = nodes_[size_t(oid)];
        Tensor& ga = gbuf(ai);
        for (i64 r = 0; r < R; ++r) {
          const i64 n = valid[size_t(r)];
          double dot = 0.0;
          for (i64 c = 0; c < n; ++c) dot += node.grad(r, c) * node.value(r, c);
          for (i64 c = 0; c < n; ++c)
            ga(r, c) += node.value(r, c) * (node.grad(r, c) - dot);
        }
      });
    }
    return {this, oid};
  }

  // a [N,A] + r broadcast over rows, r is [1,A]
  Var add_rowbcast(Var a, Var r) {
    const Tensor &A = val(a.id), &Rv = val(r.id);
    require(A.rank() == 2 && Rv.rank() == 2 && Rv.dim(0) == 1 && Rv.dim(1) == A.dim(1),
            "add_rowbcast: shape");
    const i64 N = A.dim(0), C = A.dim(1);
    Tensor out = A;
    for (i64 n = 0; n < N; ++n)
      for (i64 c = 0; c < C; ++c) out(n, c) += Rv(0, c);
    return unary_binary(std::move(out), {a.id, r.id}, [this, N, C](int oid, int ai, int ri) {
      const Tensor& g = nodes_[size_t(oid)].grad;
      Tensor& ga = gbuf(ai);
      Tensor& gr = gbuf(ri);
      for (i64 n = 0; n < N; ++n)
        for (i64 c = 0; c < C; ++c) {
          ga(n, c) += g(n, c);
          gr(0, c) += g(n, c);
        }
    });
  }

  // 1-D convolution, stride 1, zero same-padding: x [I,T] -> [O,T].
  Var conv1d(Var x, Var w, Var b) {
    const Tensor& X = val(x.id);
    const Tensor& W = val(w.id);
    require(X.rank() == 2 && W.rank() == 3, "conv1d: rank");
    const i64 I = X.dim(0), T = X.dim(1), O = W.dim(0), K = W.dim(2);
    require(W.dim(1) == I, "conv1d: channel mismatch");
    require(K % 2 == 1, "conv1d: kernel must be odd");
    const i64 P = (K - 1) / 2;
    const bool has_b = b.valid();
    Tensor out({O, T});
    for (i64 o = 0; o < O; ++o)
      for (i64 t = 0; t < T; ++t) {
        double acc = has_b ? val(b.id)(o) : 0.0;
        for (i64 i = 0; i < I; ++i)
          for (i64 k = 0; k < K; ++k) {
            const i64 tt = t + k - P;
            if (tt >= 0 && tt < T) acc += W(o, i, k) * X(i, tt);
          }
        out(o, t) = acc;
      }
    std::vector<int> parents{x.id, w.id};
    if (has_b) parents.push_back(b.id);
    int oid = push(std::move(out), parents);
    if (grad_needed(oid)) {
      set_backward(oid, [this, oid, xi = x.id, wi = w.id, bi = has_b ? b.id : -1, I, T, O, K, P] {
        const Tensor& g = nodes_[size_t(oid)].grad;
        const Tensor& X2 = val(xi);
        const Tensor& W2 = val(wi);
        Tensor& gx = gbuf(xi);
        Tensor& gw = gbuf(wi);
        for (i64 o = 0; o < O; ++o)
          for (i64 t = 0; t < T; ++t) {
            const double gv = g(o, t);
            if (gv == 0.0) continue;
            for (i64 i = 0; i < I; ++i)
              for (i64 k = 0; k < K; ++k) {
                const i64 tt = t + k - P;
                if (tt >= 0 && tt < T) {
                  gx(i, tt) += gv * W2(o, i, k);
                  gw(o, i, k) += gv * X2(i, tt);
                }
              }
          }
        if (bi >= 0) {
          Tensor& gb = gbuf(bi);
          for (i64 o = 0; o < O; ++o)
            for (i64 t = 0; t < T; ++t) gb(o) += g(o, t);
        }
      });
    }
    return {this, oid};
  }

  // 2-D convolution, stride 1, zero same-padding: x [I,H,W] -> [O,H,W].
  Var conv2d(Var x, Var w, Var b) {
    const Tensor& X = val(x.id);
    const Tensor& W = val(w.id);
    require(X.rank() == 3 && W.rank() == 4, "conv2d: rank");
    const i64 I = X.dim(0), H = X.dim(1), Wd = X.dim(2);
    const i64 O = W.dim(0), KH = W.dim(2), KW = W.dim(3);
    require(W.dim(1) == I && KH % 2 == 1 && KW % 2 == 1, "conv2d: kernel");
    const i64 PH = (KH - 1) / 2, PW = (KW - 1) / 2;
    const bool has_b = b.valid();
    Tensor out({O, H, Wd});
    for (i64 o = 0; o < O; ++o)
      for (i64 h = 0; h < H; ++h)
        for (i64 v = 0; v < Wd; ++v) {
          double acc = has_b ? val(b.id)(o) : 0.0;
          for (i64 i = 0; i < I; ++i)
            for (i64 kh = 0; kh < KH; ++kh) {
              const i64 hh = h + kh - PH;
              if (hh < 0 || hh >= H) continue;
              for (i64 kw = 0; kw < KW; ++kw) {
                const i64 vv = v + kw - PW;
                if (vv >= 0 && vv < Wd) acc += W(o, i, kh, kw) * X(i, hh, vv);
              }
            }
          out(o, h, v) = acc;
        }
    std::vector<int> parents{x.id, w.id};
    if (has_b) parents.push_back(b.id);
    int oid = push(std::move(out), parents);
    if (grad_needed(oid)) {
      set_backward(oid, [this, oid, xi = x.id, wi = w.id, bi = has_b ? b.id : -1, I, H, Wd, O, KH,
                         KW, PH, PW] {
        const Tensor& g = nodes_[size_t(oid)].grad;
        const Tensor& X2 = val(xi);
        const Tensor& W2 = val(wi);
        Tensor& gx = gbuf(xi);
        Tensor& gw = gbuf(wi);
        for (i64 o = 0; o < O; ++o)
          for (i64 h = 0; h < H; ++h)
            for (i64 v = 0; v < Wd; ++v) {
              const double gv = g(o, h, v);
              if (gv == 0.0) continue;
              for (i64 i = 0; i < I; ++i)
                for (i64 kh = 0; kh < KH; ++kh) {
                  const i64 hh = h + kh - PH;
                  if (hh < 0 || hh >= H) continue;
                  for (i64 kw = 0; kw < KW; ++kw) {
                    const i64 vv = v + kw - PW;
                    if (vv >= 0 && vv < Wd) {
                      gx(i, hh, vv) += gv * W2(o, i, kh, kw);
                      gw(o, i, kh, kw) += gv * X2(i, hh, vv);
                    }
                  }
                }
            }
        if (bi >= 0) {
          Tensor& gb = gbuf(bi);
          for (i64 o = 0; o < O; ++o)
            for (i64 h = 0; h < H; ++h)
              for (i64 v = 0; v < Wd; ++v) gb(o) += g(o, h, v);
        }
      });
    }
    return {this, oid};
  }

  Var avg_pool2d(Var x, i64 k) {
    const Tensor& X = val(x.id);
    require(X.rank() == 3 && k >= 1, "avg_pool2d: args");
    const i64 C = X.dim(0), H = X.dim(1) / k, W = X.dim(2) / k;
    require(H >= 1 && W >= 1, "avg_pool2d: input too small");
    Tensor out({C, H, W});
    const double inv = 1.0 / double(k * k);
    for (i64 c = 0; c < C; ++c)
      for (i64 h = 0; h < H; ++h)
        for (i64 w = 0; w < W; ++w) {
          double acc = 0.0;
          for (i64 a = 0; a < k; ++a)
            for (i64 b2 = 0; b2 < k; ++b2) acc += X(c, h * k + a, w * k + b2);
          out(c, h, w) = acc * inv;
        }
    int oid = push(std::move(out), {x.id});
    if (grad_needed(oid)) {
      set_backward(oid, [this, oid, xi = x.id, k, C, H, W, inv] {
        const Tensor& g = nodes_[size_t(oid)].grad;
        Tensor& gx = gbuf(xi);
        for (i64 c = 0; c < C; ++c)
          for (i64 h = 0; h < H; ++h)
            for (i64 w = 0; w < W; ++w) {
              const double gv = g(c, h, w) * inv;
              for (i64 a = 0; a < k; ++a)
                for (i64 b2 = 0; b2 < k; ++b2) gx(c, h * k + a, w * k + b2) += gv;
            }
      });
    }
    return {this, oid};
  }

  // [C,H,W] -> [1,C] spatial mean per channel
  Var channel_mean(Var x) {
    const Tensor& X = val(x.id);
    require(X.rank() == 3, "channel_mean: rank");
    const i64 C = X.dim(0), H = X.dim(1), W = X.dim(2);
    const double inv = 1.0 / double(H * W);
    Tensor out({1, C});
    for (i64 c = 0; c < C; ++c) {
      double acc = 0.0;
      for (i64 h = 0; h < H; ++h)
        for (i64 w = 0; w < W; ++w) acc += X(c, h, w);
      out(0, c) = acc * inv;
    }
    int oid = push(std::move(out), {x.id});
    if (grad_needed(oid)) {
      set_backward(oid, [this, oid, xi = x.id, C, H, W, inv] {
        const Tensor& g = nodes_[size_t(oid)].grad;
        Tensor& gx = gbuf(xi);
        for (i64 c = 0; c < C; ++c) {
          const double gv = g(0, c) * inv;
          for (i64 h = 0; h < H; ++h)
            for (i64 w = 0; w < W; ++w) gx(c, h, w) += gv;
        }
      });
    }
    return {this, oid};
  }

  Var embedding(const std::vector<i64>& ids, Var table) {
    const Tensor& T = val(table.id);
    require(T.rank() == 2, "embedding: table rank");
    const i64 V = T.dim(0), D = T.dim(1), N = i64(ids.size());
    for (i64 id : ids) require(id >= 0 && id < V, "embedding: id out of range");
    Tensor out({N, D});
    for (i64 n = 0; n < N; ++n)
      for (i64 d = 0; d < D; ++d) out(n, d) = T(ids[size_t(n)], d);
    int oid = push(std::move(out), {table.id});
    if (grad_needed(oid)) {
      set_backward(oid, [this, oid, ti = table.id, ids, N, D] {
        const Tensor& g = nodes_[size_t(oid)].grad;
        Tensor& gt = gbuf(ti);
        for (i64 n = 0; n < N; ++n)
          for (i64 d = 0; d < D; ++d) gt(ids[size_t(n)], d) += g(n, d);
      });
    }
    return {this, oid};
  }

  Var sum_all(Var a) {
    const Tensor& A = val(a.id);
    double s = 0.0;
    for (double v : A.data) s += v;
    Tensor out({1});
    out(0) = s;
    int oid = push(std::move(out), {a.id});
    if (grad_needed(oid)) {
      set_backward(oid, [this, oid, ai = a.id] {
        const double g = nodes_[size_t(oid)].grad(0);
        Tensor& ga = gbuf(ai);
        for (i64 i = 0; i < ga.numel(); ++i) ga(i) += g;
      });
    }
    return {this, oid};
  }

  Var mean_all(Var a) { return scale(sum_all(a), 1.0 / double(val(a.id).numel())); }

  // Stacks per-item 2-D tensors into a zero-padded [K,R,C] block.
  Var pad_stack3(const std::vector<Var>& items, i64 R, i64 C) {
    require(!items.empty(), "pad_stack3: empty");
    const i64 K = i64(items.size());
    Tensor out({K, R, C});
    for (i64 k = 0; k < K; ++k) {
      const Tensor& t = val(items[size_t(k)].id);
      require(t.rank() == 2 && t.dim(0) <= R && t.dim(1) <= C, "pad_stack3: item too large");
      for (i64 r = 0; r < t.dim(0); ++r)
        for (i64 c = 0; c < t.dim(1); ++c) out(k, r, c) = t(r, c);
    }
    std::vector<int> pids;
    for (const Var& p : items) pids.push_back(p.id);
    int oid = push(std::move(out), pids);
    if (grad_needed(oid)) {
      set_backward(oid, [this, oid, pids] {
        const Tensor& g = nodes_[size_t(oid)].grad;
        for (size_t k = 0; k < pids.size(); ++k) {
          Tensor& gp = gbuf(pids[k]);
          for (i64 r = 0; r < gp.dim(0); ++r)
            for (i64 c = 0; c < gp.dim(1); ++c) gp(r, c) += g(i64(k), r, c);
        }
      });
    }
    return {this, oid};
  }

  // Gathers fixed-size frame windows of a [M,T] spectrogram into the packed
  // matrix [window*M, n_windows]; column j holds window j flattened
  // frame-major. Frames past the end repeat the final frame, which keeps the
  // op defined on inputs shorter than one window.
  Var window_pack(Var x, const std::vector<i64>& starts, i64 window) {
    const Tensor& X = val(x.id);
    require(X.rank() == 2, "window_pack: rank");
    const i64 M = X.dim(0), T = X.dim(1), Nw = i64(starts.size());
    require(Nw >= 1 && window >= 1, "window_pack: empty");
    Tensor out({window * M, Nw});
    for (i64 j = 0; j < Nw; ++j)
      for (i64 f = 0; f < window; ++f) {
        const i64 t = std::min(starts[size_t(j)] + f, T - 1);
        require(t >= 0, "window_pack: negative start");
        for (i64 m = 0; m < M; ++m) out(f * M + m, j) = X(m, t);
      }
    int oid = push(std::move(out), {x.id});
    if (grad_needed(oid)) {
      set_backward(oid, [this, oid, xi = x.id, starts, window, M, T, Nw] {
        const Tensor& g = nodes_[size_t(oid)].grad;
        Tensor& gx = gbuf(xi);
        for (i64 j = 0; j < Nw; ++j)
          for (i64 f = 0; f < window; ++f) {
            const i64 t = std::min(starts[size_t(j)] + f, T - 1);
            for (i64 m = 0; m < M; ++m) gx(m, t) += g(f * M + m, j);
          }
      });
    }
    return {this, oid};
  }

  // Masked mean squared error against a constant target. mask entries are
  // 0/1 weights over the same shape; the mean runs over mask mass.
  Var mse_masked(Var pred, Tensor target, Tensor mask) {
    const Tensor& P = val(pred.id);
    require(P.same_shape(target) && P.same_shape(mask), "mse_masked: shape");
    double cnt = 0.0;
    for (double m : mask.data) cnt += m;
    require(cnt > 0.0, "mse_masked: empty mask");
    double s = 0.0;
    for (i64 i = 0; i < P.numel(); ++i) {
      const double d = P(i) - target(i);
      s += mask(i) * d * d;
    }
    Tensor out({1});
    out(0) = s / cnt;
    int oid = push(std::move(out), {pred.id});
    if (grad_needed(oid)) {
      set_backward(oid, [this, oid, pi = pred.id, t = std::move(target), m = std::move(mask), cnt] {
        const double g = nodes_[size_t(oid)].grad(0);
        const Tensor& P2 = val(pi);
        Tensor& gp = gbuf(pi);
        for (i64 i = 0; i < P2.numel(); ++i)
          gp(i) += g * 2.0 * m(i) * (P2(i) - t(i)) / cnt;
      });
    }
    return {this, oid};
  }

  // Masked mean binary cross-entropy computed from logits,
  // bce(z,t) = max(z,0) - z*t + log(1 + exp(-|z|)). Targets must be 0/1.
  Var bce_with_logits_masked(Var logits, Tensor target, Tensor mask) {
    const Tensor& Z = val(logits.id);
    require(Z.same_shape(target) && Z.same_shape(mask), "bce: shape");
    double cnt = 0.0;
    for (double m : mask.data) cnt += m;
    require(cnt > 0.0, "bce: empty mask");
    double s = 0.0;
    for (i64 i = 0; i < Z.numel(); ++i) {
      const double t = target(i);
      require(t == 0.0 || t == 1.0, "bce: target must be 0 or 1");
      const double z = Z(i);
      s += mask(i) * (std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z))));
    }
    Tensor out({1});
    out(0) = s / cnt;
    int oid = push(std::move(out), {logits.id});
    if (grad_needed(oid)) {
      set_backward(oid,
                   [this, oid, zi = logits.id, t = std::move(target), m = std::move(mask), cnt] {
                     const double g = nodes_[size_t(oid)].grad(0);
                     const Tensor& Z2 = val(zi);
                     Tensor& gz = gbuf(zi);
                     for (i64 i = 0; i < Z2.numel(); ++i) {
                       const double sig = 1.0 / (1.0 + std::exp(-Z2(i)));
                       gz(i) += g * m(i) * (sig - t(i)) / cnt;
                     }
                   });
    }
    return {this, oid};
  }

  // Mean softmax cross-entropy over rows of [B,C] logits.
  Var softmax_xent(Var logits, const std::vector<i64>& labels) {
    const Tensor& Z = val(logits.id);
    require(Z.rank() == 2 && i64(labels.size()) == Z.dim(0), "xent: shape");
    const i64 B = Z.dim(0), C = Z.dim(1);
    double loss = 0.0;
    for (i64 b = 0; b < B; ++b) {
      require(labels[size_t(b)] >= 0 && labels[size_t(b)] < C, "xent: label range");
      double m = Z(b, 0);
      for (i64 c = 1; c < C; ++c) m = std::max(m, Z(b, c));
      double s = 0.0;
      for (i64 c = 0; c < C; ++c) s += std::exp(Z(b, c) - m);
      loss += m + std::log(s) - Z(b, labels[size_t(b)]);
    }
    Tensor out({1});
    out(0) = loss / double(B);
    int oid = push(std::move(out), {logits.id});
    if (grad_needed(oid)) {
      set_backward(oid, [this, oid, zi = logits.id, labels, B, C] {
        const double g = nodes_[size_t(oid)].grad(0);
        const Tensor& Z2 = val(zi);
        Tensor& gz = gbuf(zi);
        for (i64 b = 0; b < B; ++b) {
          double m = Z2(b, 0);
          for (i64 c = 1; c < C; ++c) m = std::max(m, Z2(b, c));
          double s = 0.0;
          for (i64 c = 0; c < C; ++c) s += std::exp(Z2(b, c) - m);
          for (i64 c = 0; c < C; ++c) {
            const double p = std::exp(Z2(b, c) - m) / s;
            gz(b, c) += g * (p - (labels[size_t(b)] == c ? 1.0 : 0.0)) / double(B);
          }
        }
      });
    }
    return {this, oid};
  }

 private:
  friend struct Var;

  Tensor& gbuf(int id) {
    Node& n = nodes_[size_t(id)];
    if (n.grad.numel() == 0) n.grad = Tensor(val(id).shape);
    return n.grad;
  }

  static void axpy(Tensor& y, const Tensor& x, double a) {
    for (i64 i = 0; i < y.numel(); ++i) y(i) += a * x(i);
  }

  bool grad_needed(int oid) const { return nodes_[size_t(oid)].requires_grad; }

  int push(Tensor value, const std::vector<int>& parents) {
    Node n;
    n.value = std::move(value);
    if (recording_) {
      for (int p : parents)
        if (nodes_[size_t(p)].requires_grad) {
          n.requires_grad = true;
          break;
        }
    }
    nodes_.push_back(std::move(n));
    return int(nodes_.size()) - 1;
  }

  void set_backward(int oid, std::function<void()> fn) {
    nodes_[size_t(oid)].backward = std::move(fn);
  }

  template <typename F>
  Var unary_binary(Tensor out, std::pair<int, int> p, F&& fn) = delete;

  template <typename F>
  Var unary_binary(Tensor out, std::initializer_list<int> parents, F&& fn) {
    std::vector<int> pv(parents);
    int oid = push(std::move(out), pv);
    if (grad_needed(oid)) {
      if (pv.size() == 2) {
        set_backward(oid, [fn = std::forward<F>(fn), oid, a = pv[0], b = pv[1]]() mutable {
          fn(oid, a, b);
        });
      } else {
        require(false, "unary_binary: expected two parents");
      }
    }
    return {this, oid};
  }

  std::vector<Node> nodes_;
  bool recording_ = true;
  bool ran_backward_ = false;
};

inline const Tensor& Var::val() const { return tape->val(id); }

}  // namespace gantron::ad
