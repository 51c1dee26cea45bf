// gantron/generator.hpp

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
#include <utility>
#include <vector>

#include "gantron/corpus.hpp"
#include "gantron/nn.hpp"

namespace gantron {

// Seq2seq text-to-mel generator: character embedding, convolutional encoder
// stack, bidirectional LSTM, style-token injection at the encoder or decoder,
// location-sensitive attention, autoregressive LSTM decoder with a pre-net,
// twin projections (mel frame + stop gate) and a residual post-net.

enum class StylePlacement { encoder, decoder };

inline const char* to_string(StylePlacement p) {
  return p == StylePlacement::encoder ? "encoder" : "decoder";
}

inline StylePlacement style_placement_from_string(const std::string& s) {
  if (s == "encoder") return StylePlacement::encoder;
  if (s == "decoder") return StylePlacement::decoder;
  throw Error("unknown style placement: " + s);
}

struct GeneratorConfig {
  i64 charset_size = 0;
  i64 embedding_dim = 512;
  i64 encoder_conv_layers = 3;
  i64 encoder_conv_filters = 512;
  i64 encoder_conv_kernel = 5;
  i64 encoder_rnn_dim = 256;  // per direction
  i64 style_token_len = 0;    // 0 disables conditioning
  StylePlacement style_placement = StylePlacement::decoder;
  i64 prenet_dim = 256;
  i64 attention_rnn_dim = 1024;
  i64 decoder_rnn_dim = 1024;
  i64 attention_dim = 128;
  i64 location_filters = 32;
  i64 location_kernel = 31;
  i64 n_mels = 80;
  i64 postnet_layers = 5;
  i64 postnet_filters = 512;
  i64 postnet_kernel = 5;
  i64 max_decoder_steps = 1000;
  double gate_threshold = 0.5;
  double prenet_dropout = 0.5;

  void validate() const {
    require(charset_size >= 2, "GeneratorConfig: charset too small");
    require(embedding_dim > 0 && encoder_rnn_dim > 0 && prenet_dim > 0, "GeneratorConfig: dims");
    require(encoder_conv_layers >= 1 && encoder_conv_filters > 0, "GeneratorConfig: encoder convs");
    require(encoder_conv_kernel % 2 == 1 && postnet_kernel % 2 == 1 && location_kernel % 2 == 1,
            "GeneratorConfig: kernels must be odd");
    require(style_token_len >= 0, "GeneratorConfig: style_token_len");
    require(attention_rnn_dim > 0 && decoder_rnn_dim > 0 && attention_dim > 0,
            "GeneratorConfig: decoder dims");
    require(location_filters > 0, "GeneratorConfig: location filters");
    require(n_mels > 0, "GeneratorConfig: n_mels");
    require(postnet_layers >= 2 && postnet_filters > 0, "GeneratorConfig: postnet");
    require(max_decoder_steps >= 1, "GeneratorConfig: max_decoder_steps");
    require(gate_threshold > 0.0 && gate_threshold < 1.0, "GeneratorConfig: gate_threshold");
    require(prenet_dropout >= 0.0 && prenet_dropout < 1.0, "GeneratorConfig: prenet_dropout");
  }

  i64 encoder_input_dim() const {
    return embedding_dim + (style_placement == StylePlacement::encoder ? style_token_len : 0);
  }

  // Width of the attention memory the decoder consumes.
  i64 memory_dim() const {
    return 2 * encoder_rnn_dim +
           (style_placement == StylePlacement::decoder ? style_token_len : 0);
  }

  static GeneratorConfig paper_scale(i64 charset, i64 token_len, StylePlacement placement) {
    GeneratorConfig cfg;
    cfg.charset_size = charset;
    cfg.style_token_len = token_len;
    cfg.style_placement = placement;
    return cfg;
  }

  // Small dims for tests and desk-scale experiments.
  static GeneratorConfig tiny(i64 charset, i64 token_len, i64 n_mels_ = 16) {
    GeneratorConfig cfg;
    cfg.charset_size = charset;
    cfg.embedding_dim = 32;
    cfg.encoder_conv_layers = 1;
    cfg.encoder_conv_filters = 32;
    cfg.encoder_conv_kernel = 5;
    cfg.encoder_rnn_dim = 16;
    cfg.style_token_len = token_len;
    cfg.prenet_dim = 32;
    cfg.attention_rnn_dim = 64;
    cfg.decoder_rnn_dim = 64;
    cfg.attention_dim = 32;
    cfg.location_filters = 8;
    cfg.location_kernel = 15;
    cfg.n_mels = n_mels_;
    cfg.postnet_layers = 2;
    cfg.postnet_filters = 32;
    cfg.postnet_kernel = 5;
    cfg.max_decoder_steps = 200;
    return cfg;
  }
};

struct GeneratorOutput {
  ad::Var mel_outputs;          // [B, n_mels, T]
  ad::Var mel_postnet_outputs;  // [B, n_mels, T]
  ad::Var gate_logits;          // [B, T]
  ad::Var alignments;           // [B, T, N]
  // Unpadded per-item post-net spectrograms [n_mels, T_b]; the critics score
  // these so padding never enters a window.
  std::vector<ad::Var> per_item_postnet;
};

struct DecoderState {
  bool initialized = false;
  ad::Var memory;            // [N, M]
  ad::Var processed_memory;  // [N, A]
  ad::Var att_h, att_c;      // [1, attention_rnn_dim]
  ad::Var dec_h, dec_c;      // [1, decoder_rnn_dim]
  ad::Var att_weights;       // [1, N]
  ad::Var att_weights_cum;   // [1, N]
  ad::Var context;           // [1, M]
};

struct DecodeStepResult {
  ad::Var frame;        // [1, n_mels]
  ad::Var gate_logit;   // [1, 1]
  ad::Var att_weights;  // [1, N]
};

class Generator {
 public:
  Generator() = default;

  Generator(GeneratorConfig cfg, u64 seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(seed);
    embedding_.init(cfg_.charset_size, cfg_.embedding_dim, rng);
    encoder_convs_.resize(size_t(cfg_.encoder_conv_layers));
    for (i64 l = 0; l < cfg_.encoder_conv_layers; ++l) {
      const i64 in = l == 0 ? cfg_.encoder_input_dim() : cfg_.encoder_conv_filters;
      encoder_convs_[size_t(l)].init(in, cfg_.encoder_conv_filters, cfg_.encoder_conv_kernel, rng);
    }
    enc_fwd_.init(cfg_.encoder_conv_filters, cfg_.encoder_rnn_dim, rng);
    enc_bwd_.init(cfg_.encoder_conv_filters, cfg_.encoder_rnn_dim, rng);
    prenet1_.init(cfg_.n_mels, cfg_.prenet_dim, rng);
    prenet2_.init(cfg_.prenet_dim, cfg_.prenet_dim, rng);
    const i64 m = cfg_.memory_dim();
    att_rnn_.init(cfg_.prenet_dim + m, cfg_.attention_rnn_dim, rng);
    query_proj_.init(cfg_.attention_rnn_dim, cfg_.attention_dim, rng, /*bias=*/false);
    memory_proj_.init(m, cfg_.attention_dim, rng, /*bias=*/false);
    location_conv_.init(2, cfg_.location_filters, cfg_.location_kernel, rng, /*bias=*/false);
    location_proj_.init(cfg_.location_filters, cfg_.attention_dim, rng, /*bias=*/false);
    energy_proj_.init(cfg_.attention_dim, 1, rng, /*bias=*/false);
    dec_rnn_.init(cfg_.attention_rnn_dim + m, cfg_.decoder_rnn_dim, rng);
    mel_proj_.init(cfg_.decoder_rnn_dim + m, cfg_.n_mels, rng);
    gate_proj_.init(cfg_.decoder_rnn_dim + m, 1, rng);
    postnet_.resize(size_t(cfg_.postnet_layers));
    for (i64 l = 0; l < cfg_.postnet_layers; ++l) {
      const i64 in = l == 0 ? cfg_.n_mels : cfg_.postnet_filters;
      const i64 out = l == cfg_.postnet_layers - 1 ? cfg_.n_mels : cfg_.postnet_filters;
      postnet_[size_t(l)].init(in, out, cfg_.postnet_kernel, rng);
    }
  }

  const GeneratorConfig& config() const { return cfg_; }

  i64 parameter_count() const {
    i64 n = embedding_.parameter_count();
    for (const auto& c : encoder_convs_) n += c.parameter_count();
    n += enc_fwd_.parameter_count() + enc_bwd_.parameter_count();
    n += prenet1_.parameter_count() + prenet2_.parameter_count();
    n += att_rnn_.parameter_count();
    n += query_proj_.parameter_count() + memory_proj_.parameter_count();
    n += location_conv_.parameter_count() + location_proj_.parameter_count();
    n += energy_proj_.parameter_count();
    n += dec_rnn_.parameter_count();
    n += mel_proj_.parameter_count() + gate_proj_.parameter_count();
    for (const auto& c : postnet_) n += c.parameter_count();
    return n;
  }

  void collect_params(std::vector<nn::ParamRef>& out) {
    embedding_.collect("gen.embedding", out);
    for (size_t l = 0; l < encoder_convs_.size(); ++l)
      encoder_convs_[l].collect("gen.encoder_conv" + std::to_string(l), out);
    enc_fwd_.collect("gen.encoder_lstm_fwd", out);
    enc_bwd_.collect("gen.encoder_lstm_bwd", out);
    prenet1_.collect("gen.prenet1", out);
    prenet2_.collect("gen.prenet2", out);
    att_rnn_.collect("gen.attention_rnn", out);
    query_proj_.collect("gen.attention_query", out);
    memory_proj_.collect("gen.attention_memory", out);
    location_conv_.collect("gen.attention_location_conv", out);
    location_proj_.collect("gen.attention_location_proj", out);
    energy_proj_.collect("gen.attention_energy", out);
    dec_rnn_.collect("gen.decoder_rnn", out);
    mel_proj_.collect("gen.mel_proj", out);
    gate_proj_.collect("gen.gate_proj", out);
    for (size_t l = 0; l < postnet_.size(); ++l)
      postnet_[l].collect("gen.postnet" + std::to_string(l), out);
  }

  // Broadcasts the token along time and concatenates feature-wise. The
  // requested placement must match the configuration.
  ad::Var inject_style(nn::Ctx& ctx, ad::Var sequence, const StyleToken& style,
                       StylePlacement placement) const {
    require(cfg_.style_token_len > 0, "inject_style: model built without conditioning");
    require(placement == cfg_.style_placement, "inject_style: placement mismatch with config");
    require(style.size() == cfg_.style_token_len, "inject_style: token length mismatch");
    const i64 rows = sequence.val().dim(0);
    Tensor block({rows, style.size()});
    for (i64 r = 0; r < rows; ++r)
      for (i64 k = 0; k < style.size(); ++k) block(r, k) = style.values[size_t(k)];
    return ctx.tape.concat_cols({sequence, ctx.tape.constant(std::move(block))});
  }

  // Runs the text through the encoder, applying the style token at the
  // configured placement; returns the attention memory [N, memory_dim].
  ad::Var encode(nn::Ctx& ctx, const std::vector<i64>& symbol_ids,
                 const StyleToken* style) const {
    require(!symbol_ids.empty(), "encode: empty symbol sequence");
    if (cfg_.style_token_len > 0)
      require(style != nullptr, "encode: model expects a style token");
    ad::Tape& t = ctx.tape;
    ad::Var x = embedding_.forward(ctx, symbol_ids);  // [N, E]
    if (cfg_.style_token_len > 0 && cfg_.style_placement == StylePlacement::encoder)
      x = inject_style(ctx, x, *style, StylePlacement::encoder);
    ad::Var seq = t.transpose(x);  // [C, N]
    for (const auto& conv : encoder_convs_) seq = t.relu(conv.forward(ctx, seq));
    x = t.transpose(seq);  // [N, C]
    ad::Var states = bidirectional(ctx, x);
    if (cfg_.style_token_len > 0 && cfg_.style_placement == StylePlacement::decoder)
      states = inject_style(ctx, states, *style, StylePlacement::decoder);
    return states;
  }

  DecoderState init_decoder_state(nn::Ctx& ctx, ad::Var memory) const {
    ad::Tape& t = ctx.tape;
    const i64 n = memory.val().dim(0);
    require(memory.val().rank() == 2 && memory.val().dim(1) == cfg_.memory_dim(),
            "init_decoder_state: memory width mismatch");
    DecoderState s;
    s.initialized = true;
    s.memory = memory;
    s.processed_memory = memory_proj_.forward(ctx, memory);
    s.att_h = t.constant(Tensor({1, cfg_.attention_rnn_dim}));
    s.att_c = t.constant(Tensor({1, cfg_.attention_rnn_dim}));
    s.dec_h = t.constant(Tensor({1, cfg_.decoder_rnn_dim}));
    s.dec_c = t.constant(Tensor({1, cfg_.decoder_rnn_dim}));
    s.att_weights = t.constant(Tensor({1, n}));
    s.att_weights_cum = t.constant(Tensor({1, n}));
    s.context = t.constant(Tensor({1, cfg_.memory_dim()}));
    return s;
  }

  // One autoregressive step. prev_frame is the previous mel frame
  // [1, n_mels]; teacher forcing passes the ground truth, inference passes
  // the model's own last output.
  DecodeStepResult decode_step(nn::Ctx& ctx, DecoderState& state, ad::Var prev_frame) const {
    require(state.initialized, "decode_step: uninitialized decoder state");
    require(prev_frame.val().rank() == 2 && prev_frame.val().dim(1) == cfg_.n_mels,
            "decode_step: prev_frame must be [1, n_mels]");
    ad::Tape& t = ctx.tape;
    const bool drop = ctx.training || ctx.inference_dropout;
    ad::Var pre = t.relu(prenet1_.forward(ctx, prev_frame));
    pre = nn::dropout(ctx, pre, cfg_.prenet_dropout, drop);
    pre = t.relu(prenet2_.forward(ctx, pre));
    pre = nn::dropout(ctx, pre, cfg_.prenet_dropout, drop);

    auto [att_h, att_c] = att_rnn_.step(ctx, t.concat_cols({pre, state.context}), state.att_h,
                                        state.att_c);
    state.att_h = att_h;
    state.att_c = att_c;

    // location-sensitive energies over the memory positions
    ad::Var query = query_proj_.forward(ctx, att_h);  // [1, A]
    ad::Var loc = t.concat_rows({state.att_weights, state.att_weights_cum});  // [2, N]
    ad::Var loc_feat = location_conv_.forward(ctx, loc);                      // [F, N]
    ad::Var loc_term = location_proj_.forward(ctx, t.transpose(loc_feat));    // [N, A]
    ad::Var e = t.tanh_(t.add_rowbcast(t.add(state.processed_memory, loc_term), query));
    ad::Var energies = t.transpose(energy_proj_.forward(ctx, e));  // [1, N]
    ad::Var weights = t.softmax_rows(energies);
    state.att_weights = weights;
    state.att_weights_cum = t.add(state.att_weights_cum, weights);
    state.context = t.matmul(weights, state.memory);  // [1, M]

    auto [dec_h, dec_c] = dec_rnn_.step(ctx, t.concat_cols({att_h, state.context}), state.dec_h,
                                        state.dec_c);
    state.dec_h = dec_h;
    state.dec_c = dec_c;

    ad::Var proj_in = t.concat_cols({dec_h, state.context});
    DecodeStepResult out;
    out.frame = mel_proj_.forward(ctx, proj_in);
    out.gate_logit = gate_proj_.forward(ctx, proj_in);
    out.att_weights = weights;
    return out;
  }

  // Residual post-net over an assembled [n_mels, T] sequence.
  ad::Var postnet_forward(nn::Ctx& ctx, ad::Var mel) const {
    ad::Tape& t = ctx.tape;
    ad::Var x = mel;
    for (size_t l = 0; l < postnet_.size(); ++l) {
      x = postnet_[l].forward(ctx, x);
      if (l + 1 < postnet_.size()) x = t.tanh_(x);
    }
    return x;
  }

  // Teacher-forced pass over a padded batch. Each item runs at its true
  // lengths; outputs are zero-padded to the batch canvas.
  GeneratorOutput forward_teacher_forced(nn::Ctx& ctx, const PaddedBatch& batch) const {
    const i64 b_sz = batch.batch_size();
    require(b_sz >= 1, "forward_teacher_forced: empty batch");
    require(batch.n_mels() == cfg_.n_mels, "forward_teacher_forced: n_mels mismatch");
    if (cfg_.style_token_len > 0)
      require(batch.styles.dim(1) == cfg_.style_token_len,
              "forward_teacher_forced: style token length mismatch");
    ad::Tape& t = ctx.tape;

    std::vector<ad::Var> mel_items, post_items, gate_items, align_items;
    for (i64 b = 0; b < b_sz; ++b) {
      const i64 n_text = batch.text_lengths[size_t(b)];
      const i64 n_frames = batch.mel_lengths[size_t(b)];
      std::vector<i64> ids(batch.symbols[size_t(b)].begin(),
                           batch.symbols[size_t(b)].begin() + n_text);
      StyleToken token;
      if (cfg_.style_token_len > 0) {
        token.values.resize(size_t(cfg_.style_token_len));
        for (i64 k = 0; k < cfg_.style_token_len; ++k) token.values[size_t(k)] = batch.styles(b, k);
      }
      ad::Var memory = encode(ctx, ids, cfg_.style_token_len > 0 ? &token : nullptr);
      DecoderState state = init_decoder_state(ctx, memory);

      std::vector<ad::Var> frames, gates, weights;
      ad::Var prev = t.constant(Tensor({1, cfg_.n_mels}));  // go frame
      for (i64 step = 0; step < n_frames; ++step) {
        DecodeStepResult r = decode_step(ctx, state, prev);
        require(r.frame.val().all_finite() && r.gate_logit.val().all_finite(),
                "forward_teacher_forced: non-finite activation at decoder step " +
                    std::to_string(step));
        frames.push_back(r.frame);
        gates.push_back(r.gate_logit);
        weights.push_back(r.att_weights);
        Tensor teacher({1, cfg_.n_mels});
        for (i64 m = 0; m < cfg_.n_mels; ++m) teacher(0, m) = batch.mels(b, m, step);
        prev = t.constant(std::move(teacher));
      }
      ad::Var mel_item = t.transpose(t.concat_rows(frames));  // [n_mels, T_b]
      ad::Var post_item = t.add(mel_item, postnet_forward(ctx, mel_item));
      mel_items.push_back(mel_item);
      post_items.push_back(post_item);
      gate_items.push_back(t.transpose(t.concat_rows(gates)));  // [1, T_b]
      align_items.push_back(t.concat_rows(weights));            // [T_b, N_b]
    }

    const i64 t_max = batch.max_frames();
    const i64 n_max = batch.max_text_len();
    GeneratorOutput out;
    out.mel_outputs = t.pad_stack3(mel_items, cfg_.n_mels, t_max);
    out.mel_postnet_outputs = t.pad_stack3(post_items, cfg_.n_mels, t_max);
    out.gate_logits = t.reshape(t.pad_stack3(gate_items, 1, t_max), {b_sz, t_max});
    out.alignments = t.pad_stack3(align_items, t_max, n_max);
    out.per_item_postnet = std::move(post_items);
    return out;
  }

 private:
  // Bidirectional LSTM over [N, C] rows; returns [N, 2 * encoder_rnn_dim].
  ad::Var bidirectional(nn::Ctx& ctx, ad::Var x) const {
    ad::Tape& t = ctx.tape;
    const i64 n = x.val().dim(0);
    std::vector<ad::Var> fwd(static_cast<size_t>(n)), bwd(static_cast<size_t>(n));
    ad::Var h = t.constant(Tensor({1, cfg_.encoder_rnn_dim}));
    ad::Var c = t.constant(Tensor({1, cfg_.encoder_rnn_dim}));
    for (i64 i = 0; i < n; ++i) {
      auto [h2, c2] = enc_fwd_.step(ctx, t.slice_rows(x, i, i + 1), h, c);
      h = h2;
      c = c2;
      fwd[size_t(i)] = h;
    }
    h = t.constant(Tensor({1, cfg_.encoder_rnn_dim}));
    c = t.constant(Tensor({1, cfg_.encoder_rnn_dim}));
    for (i64 i = n - 1; i >= 0; --i) {
      auto [h2, c2] = enc_bwd_.step(ctx, t.slice_rows(x, i, i + 1), h, c);
      h = h2;
      c = c2;
      bwd[size_t(i)] = h;
    }
    return t.concat_cols({t.concat_rows(fwd), t.concat_rows(bwd)});
  }

  GeneratorConfig cfg_;
  nn::Embedding embedding_;
  std::vector<nn::Conv1d> encoder_convs_;
  nn::LSTMCell enc_fwd_, enc_bwd_;
  nn::Linear prenet1_, prenet2_;
  nn::LSTMCell att_rnn_;
  nn::Linear query_proj_, memory_proj_, location_proj_, energy_proj_;
  nn::Conv1d location_conv_;
  nn::LSTMCell dec_rnn_;
  nn::Linear mel_proj_, gate_proj_;
  std::vector<nn::Conv1d> postnet_;
};

}  // namespace gantron
