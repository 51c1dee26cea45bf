// gantron/losses.hpp

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
#include <string>
#include <vector>

#include "gantron/autograd.hpp"
#include "gantron/tensor.hpp"

namespace gantron {

// The generator objective is an unweighted sum of four terms: mel
// reconstruction, gate, the adversarial Wasserstein term, and (while the
// warm-up is active) the guided-attention penalty. Per-term weights exist as
// config knobs but default to 1.

struct GuidedAttentionConfig {
  double g = 0.2;        // diagonal band sharpness
  i64 warmup_steps = 5000;
  bool enabled = true;

  void validate() const {
    require(g > 0.0, "GuidedAttentionConfig: g must be positive");
    require(warmup_steps >= 0, "GuidedAttentionConfig: warmup_steps must be >= 0");
  }
};

struct LossWeights {
  double mel = 1.0;
  double gate = 1.0;
  double wasserstein = 1.0;
  double attention = 1.0;
};

struct LossReport {
  double mel_loss = 0.0;
  double gate_loss = 0.0;
  double wasserstein_term = 0.0;
  double attn_loss = 0.0;  // already zero when the warm-up is inactive
  double total = 0.0;
  i64 step = 0;
};

// Warm-up is a hard cutoff: active exactly on steps [0, warmup_steps).
inline bool warmup_active(i64 step, const GuidedAttentionConfig& cfg) {
  require(step >= 0, "warmup_active: negative step");
  return cfg.enabled && step < cfg.warmup_steps;
}

// Sum of the two masked MSEs: pre- and post-net outputs against the target.
inline ad::Var mel_loss(ad::Tape& tape, ad::Var mel_output, ad::Var mel_postnet_output,
                        const Tensor& mel_target, const Tensor& mask) {
  require(mel_output.val().same_shape(mel_target) &&
              mel_postnet_output.val().same_shape(mel_target),
          "mel_loss: shape mismatch");
  ad::Var a = tape.mse_masked(mel_postnet_output, mel_target, mask);
  ad::Var b = tape.mse_masked(mel_output, mel_target, mask);
  return tape.add(a, b);
}

inline ad::Var gate_loss(ad::Tape& tape, ad::Var gate_logits, const Tensor& gate_target,
                         const Tensor& mask) {
  require(gate_logits.val().same_shape(gate_target), "gate_loss: shape mismatch");
  return tape.bce_with_logits_masked(gate_logits, gate_target, mask);
}

// W[t,n] = 1 - exp(-(n/N - t/T)^2 / (2 g^2)); zero along the normalized
// diagonal, saturating to one far from it.
inline Tensor guided_attention_weights(i64 text_len, i64 decoder_len, double g) {
  require(text_len >= 1 && decoder_len >= 1, "guided_attention_weights: empty axes");
  require(g > 0.0, "guided_attention_weights: g must be positive");
  Tensor w({decoder_len, text_len});
  for (i64 t = 0; t < decoder_len; ++t)
    for (i64 n = 0; n < text_len; ++n) {
      const double d = double(n) / double(text_len) - double(t) / double(decoder_len);
      w(t, n) = 1.0 - std::exp(-(d * d) / (2.0 * g * g));
    }
  return w;
}

// Mean over each item's valid (t, n) cells of alignment * W, averaged over
// the batch. W is rebuilt per item from the true lengths, so padding cells
// never contribute.
inline ad::Var guided_attention_loss(ad::Tape& tape, ad::Var alignments,
                                     const std::vector<i64>& text_lengths,
                                     const std::vector<i64>& mel_lengths, double g) {
  const Tensor& a = alignments.val();
  require(a.rank() == 3, "guided_attention_loss: alignments must be [B,T,N]");
  const i64 B = a.dim(0), T = a.dim(1), N = a.dim(2);
  require(i64(text_lengths.size()) == B && i64(mel_lengths.size()) == B,
          "guided_attention_loss: length metadata missing");

  Tensor weights({B, T, N});
  for (i64 b = 0; b < B; ++b) {
    const i64 n_len = text_lengths[size_t(b)];
    const i64 t_len = mel_lengths[size_t(b)];
    require(n_len >= 1 && n_len <= N && t_len >= 1 && t_len <= T,
            "guided_attention_loss: lengths out of range");
    const Tensor w = guided_attention_weights(n_len, t_len, g);
    for (i64 t = 0; t < t_len; ++t)
      for (i64 n = 0; n < n_len; ++n) weights(b, t, n) = w(t, n) / double(t_len * n_len);
  }
  ad::Var weighted = tape.mul(alignments, tape.constant(std::move(weights)));
  return tape.scale(tape.sum_all(weighted), 1.0 / double(B));
}

// mean(fake) - mean(real); what the clipped critic minimizes.
inline ad::Var wasserstein_critic_loss(ad::Tape& tape, ad::Var real_scores, ad::Var fake_scores) {
  require(real_scores.val().numel() > 0 && fake_scores.val().numel() > 0,
          "wasserstein_critic_loss: empty scores");
  return tape.sub(tape.mean_all(fake_scores), tape.mean_all(real_scores));
}

// -mean(fake); the generator's adversarial term.
inline ad::Var wasserstein_generator_term(ad::Tape& tape, ad::Var fake_scores) {
  require(fake_scores.val().numel() > 0, "wasserstein_generator_term: empty scores");
  return tape.neg(tape.mean_all(fake_scores));
}

// Scalar-side combination used for reporting; the Var-side graph in the
// trainer mirrors this arithmetic exactly.
inline LossReport generator_total_loss(double mel, double gate, double wasserstein, double attn,
                                       i64 step, const GuidedAttentionConfig& attn_cfg,
                                       const LossWeights& w = {}) {
  auto check = [](double v, const char* name) {
    require(std::isfinite(v), std::string("generator_total_loss: non-finite ") + name);
  };
  check(mel, "mel_loss");
  check(gate, "gate_loss");
  check(wasserstein, "wasserstein_term");
  check(attn, "attn_loss");
  LossReport r;
  r.step = step;
  r.mel_loss = w.mel * mel;
  r.gate_loss = w.gate * gate;
  r.wasserstein_term = w.wasserstein * wasserstein;
  r.attn_loss = warmup_active(step, attn_cfg) ? w.attention * attn : 0.0;
  r.total = r.mel_loss + r.gate_loss + r.wasserstein_term + r.attn_loss;
  return r;
}

}  // namespace gantron
