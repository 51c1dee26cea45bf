// gantron/discriminator.hpp

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
#include <vector>

#include "gantron/mel.hpp"
#include "gantron/nn.hpp"

namespace gantron {

// Two adversarial critics over mel spectrograms. The convolutional critic
// packs frames into fixed-size windows, runs 1-D convolutions across the
// window sequence and averages every output. The linear critic flattens
// moving windows with bounded random overlap through dense blocks and
// averages the per-window scalars.

enum class DiscKind { convolutional, linear };

inline const char* to_string(DiscKind k) {
  return k == DiscKind::convolutional ? "convolutional" : "linear";
}

inline DiscKind disc_kind_from_string(const std::string& s) {
  if (s == "convolutional" || s == "conv") return DiscKind::convolutional;
  if (s == "linear") return DiscKind::linear;
  throw Error("unknown discriminator kind: " + s);
}

struct DiscriminatorConfig {
  DiscKind kind = DiscKind::linear;
  i64 window_size = 20;
  i64 n_mels = 80;
  std::vector<i64> hidden;  // widths of the dropout+tanh blocks
  i64 conv_out_channels = 80;
  i64 conv_kernel = 5;
  double dropout = 0.5;
  i64 max_overlap = 10;  // linear kind only

  void validate() const {
    require(window_size >= 1, "DiscriminatorConfig: window_size must be >= 1");
    require(n_mels >= 1, "DiscriminatorConfig: n_mels must be >= 1");
    require(!hidden.empty(), "DiscriminatorConfig: need at least one hidden block");
    for (i64 h : hidden) require(h >= 1, "DiscriminatorConfig: hidden width must be >= 1");
    require(dropout >= 0.0 && dropout < 1.0, "DiscriminatorConfig: dropout range");
    if (kind == DiscKind::convolutional) {
      require(conv_out_channels >= 1 && conv_kernel % 2 == 1,
              "DiscriminatorConfig: conv output plan");
    } else {
      require(max_overlap >= 0 && max_overlap < window_size,
              "DiscriminatorConfig: need max_overlap < window_size");
    }
  }

  i64 input_dim() const { return window_size * n_mels; }

  static DiscriminatorConfig conv_paper() {
    DiscriminatorConfig cfg;
    cfg.kind = DiscKind::convolutional;
    cfg.hidden = {1024, 512, 512, 512};
    return cfg;
  }

  static DiscriminatorConfig linear_paper() {
    DiscriminatorConfig cfg;
    cfg.kind = DiscKind::linear;
    cfg.hidden = {512, 512, 512};
    return cfg;
  }

  static DiscriminatorConfig tiny(DiscKind kind, i64 n_mels_, i64 window = 8) {
    DiscriminatorConfig cfg;
    cfg.kind = kind;
    cfg.window_size = window;
    cfg.n_mels = n_mels_;
    cfg.max_overlap = window / 2;
    cfg.conv_out_channels = 8;
    if (kind == DiscKind::convolutional) cfg.hidden = {32, 16};
    else cfg.hidden = {32, 16};
    return cfg;
  }
};

struct WindowPack {
  std::vector<i64> start_indices;
  i64 window_size = 0;
  std::vector<Tensor> windows;  // [window_size, n_mels] slices, frame-major
};

// Window start offsets covering [0, n_frames). Convolutional packing tiles
// deterministically; linear packing advances by window_size - overlap with
// overlap drawn uniformly from [0, max_overlap]. In both kinds the final
// window is right-aligned onto the tail, which on awkward tail sizes may
// overlap its predecessor by more than max_overlap; coverage wins there.
// Inputs shorter than one window yield a single start at 0 (the window op
// repeats the final frame).
inline std::vector<i64> pack_window_starts(i64 n_frames, const DiscriminatorConfig& cfg,
                                           Rng* rng) {
  cfg.validate();
  require(n_frames >= 1, "pack_window_starts: empty mel");
  const i64 w = cfg.window_size;
  if (n_frames <= w) return {0};
  std::vector<i64> starts;
  if (cfg.kind == DiscKind::convolutional) {
    i64 s = 0;
    while (s + w < n_frames) {
      starts.push_back(s);
      s += w;
    }
    starts.push_back(n_frames - w);
  } else {
    require(rng != nullptr, "pack_window_starts: linear kind needs an rng");
    i64 s = 0;
    while (s + w < n_frames) {
      starts.push_back(s);
      s += w - rng->uniform_int(0, cfg.max_overlap);
    }
    starts.push_back(n_frames - w);
  }
  return starts;
}

inline WindowPack pack_windows(const MelSpectrogram& mel, const DiscriminatorConfig& cfg,
                               Rng* rng = nullptr) {
  require(mel.n_mels() == cfg.n_mels, "pack_windows: n_mels mismatch");
  WindowPack pack;
  pack.window_size = cfg.window_size;
  pack.start_indices = pack_window_starts(mel.n_frames(), cfg, rng);
  for (i64 s : pack.start_indices) {
    Tensor win({cfg.window_size, cfg.n_mels});
    for (i64 f = 0; f < cfg.window_size; ++f) {
      const i64 t = std::min(s + f, mel.n_frames() - 1);  // repeat-last padding
      for (i64 m = 0; m < cfg.n_mels; ++m) win(f, m) = mel.data(m, t);
    }
    pack.windows.push_back(std::move(win));
  }
  return pack;
}

class Discriminator {
 public:
  Discriminator() = default;

  Discriminator(DiscriminatorConfig cfg, u64 seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(seed);
    const i64 in = cfg_.input_dim();
    if (cfg_.kind == DiscKind::convolutional) {
      convs_.resize(cfg_.hidden.size() + 1);
      i64 prev = in;
      for (size_t l = 0; l < cfg_.hidden.size(); ++l) {
        convs_[l].init(prev, cfg_.hidden[l], cfg_.conv_kernel, rng);
        prev = cfg_.hidden[l];
      }
      convs_.back().init(prev, cfg_.conv_out_channels, cfg_.conv_kernel, rng);
    } else {
      linears_.resize(cfg_.hidden.size() + 1);
      i64 prev = in;
      for (size_t l = 0; l < cfg_.hidden.size(); ++l) {
        linears_[l].init(prev, cfg_.hidden[l], rng);
        prev = cfg_.hidden[l];
      }
      linears_.back().init(prev, 1, rng);
    }
  }

  const DiscriminatorConfig& config() const { return cfg_; }

  i64 parameter_count() const {
    i64 n = 0;
    for (const auto& c : convs_) n += c.parameter_count();
    for (const auto& l : linears_) n += l.parameter_count();
    return n;
  }

  void collect_params(std::vector<nn::ParamRef>& out) {
    for (size_t l = 0; l < convs_.size(); ++l)
      convs_[l].collect("disc.conv" + std::to_string(l), out);
    for (size_t l = 0; l < linears_.size(); ++l)
      linears_[l].collect("disc.linear" + std::to_string(l), out);
  }

  // Realness score of a [n_mels, T] spectrogram as a graph node; rng drives
  // the linear kind's window overlaps.
  ad::Var score_graph(nn::Ctx& ctx, ad::Var mel, Rng& rng) const {
    const Tensor& m = mel.val();
    require(m.rank() == 2, "Discriminator: mel must be [n_mels, T]");
    require(m.dim(0) == cfg_.n_mels, "Discriminator: n_mels mismatch");
    require(m.dim(1) >= 1, "Discriminator: empty mel");
    ad::Tape& t = ctx.tape;
    const std::vector<i64> starts =
        pack_window_starts(m.dim(1), cfg_, cfg_.kind == DiscKind::linear ? &rng : nullptr);
    ad::Var x = t.window_pack(mel, starts, cfg_.window_size);  // [w*n_mels, Nw]
    if (cfg_.kind == DiscKind::convolutional) {
      for (size_t l = 0; l + 1 < convs_.size(); ++l) {
        x = convs_[l].forward(ctx, x);
        x = nn::dropout(ctx, x, cfg_.dropout, ctx.training);
        x = t.tanh_(x);
      }
      x = convs_.back().forward(ctx, x);  // [out_channels, Nw]
    } else {
      x = t.transpose(x);  // [Nw, w*n_mels]
      for (size_t l = 0; l + 1 < linears_.size(); ++l) {
        x = linears_[l].forward(ctx, x);
        x = nn::dropout(ctx, x, cfg_.dropout, ctx.training);
        x = t.tanh_(x);
      }
      x = linears_.back().forward(ctx, x);  // [Nw, 1]
    }
    return t.mean_all(x);
  }

 private:
  DiscriminatorConfig cfg_;
  std::vector<nn::Conv1d> convs_;
  std::vector<nn::Linear> linears_;
};

// Eval-mode scalar score of a spectrogram under the convolutional critic.
inline double conv_disc_score(const MelSpectrogram& mel, const Discriminator& model) {
  require(model.config().kind == DiscKind::convolutional,
          "conv_disc_score: model is not convolutional");
  ad::Tape tape;
  tape.set_recording(false);
  nn::Ctx ctx{tape};
  ctx.training = false;
  ctx.grad_enabled = false;
  Rng unused(0);
  ad::Var m = tape.constant(mel.data);
  return model.score_graph(ctx, m, unused).val()(0);
}

// Eval-mode scalar score under the linear critic; rng drives the random
// window overlaps, so a fixed seed reproduces the score.
inline double linear_disc_score(const MelSpectrogram& mel, const Discriminator& model, Rng& rng) {
  require(model.config().kind == DiscKind::linear, "linear_disc_score: model is not linear");
  ad::Tape tape;
  tape.set_recording(false);
  nn::Ctx ctx{tape};
  ctx.training = false;
  ctx.grad_enabled = false;
  ad::Var m = tape.constant(mel.data);
  return model.score_graph(ctx, m, rng).val()(0);
}

}  // namespace gantron
