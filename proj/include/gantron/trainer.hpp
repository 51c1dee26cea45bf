// gantron/trainer.hpp

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

#include <cstdio>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "gantron/discriminator.hpp"
#include "gantron/generator.hpp"
#include "gantron/losses.hpp"
#include "gantron/optimizer.hpp"

namespace gantron {

// Adversarial loop: one critic update (Wasserstein loss + weight clipping)
// followed by gen_updates_per_disc generator updates on the combined
// objective. global_step counts generator updates, matching how step counts
// appear in the metrics log.

struct TrainConfig {
  i64 gen_updates_per_disc = 2;
  double clip_c = 0.01;
  double lr_gen = 1e-3;
  double lr_disc = 1e-4;
  i64 batch_size = 8;
  i64 max_steps = 1000;           // generator updates
  i64 validation_interval = 100;  // generator updates between validations
  i64 checkpoint_interval = 500;
  u64 seed = 1234;
  bool use_gradient_penalty = false;  // config stub; rejected when enabled

  void validate() const {
    require(gen_updates_per_disc >= 1, "TrainConfig: gen_updates_per_disc must be >= 1");
    require(clip_c > 0.0, "TrainConfig: clip_c must be positive");
    require(lr_gen > 0.0 && lr_disc > 0.0, "TrainConfig: learning rates must be positive");
    require(batch_size >= 1 && max_steps >= 0, "TrainConfig: batch/steps");
    require(validation_interval >= 1 && checkpoint_interval >= 1, "TrainConfig: intervals");
    require(!use_gradient_penalty,
            "TrainConfig: gradient-penalty critic is a stub; weight clipping is the "
            "supported mode");
  }
};

struct TrainState {
  Generator generator;
  Discriminator discriminator;
  TrainConfig config;
  GuidedAttentionConfig attention;
  LossWeights weights;
  Adam gen_opt, disc_opt;
  i64 global_step = 0;  // generator updates
  i64 disc_step = 0;
  Rng rng;
  // Free-form run facts that must survive a checkpoint round trip (token
  // layout, charset, container params). Values must be newline-free.
  std::map<std::string, std::string> metadata;

  TrainState(GeneratorConfig gcfg, DiscriminatorConfig dcfg, TrainConfig tcfg,
             GuidedAttentionConfig acfg, LossWeights w = {})
      : generator(gcfg, Rng::stream(tcfg.seed, 1).next_u64()),
        discriminator(dcfg, Rng::stream(tcfg.seed, 2).next_u64()),
        config(tcfg),
        attention(acfg),
        weights(w),
        gen_opt(tcfg.lr_gen),
        disc_opt(tcfg.lr_disc),
        rng(Rng::stream(tcfg.seed, 0)) {
    config.validate();
    attention.validate();
  }

  TrainState(const TrainState&) = delete;
  TrainState& operator=(const TrainState&) = delete;

  std::vector<nn::ParamRef> generator_params() {
    std::vector<nn::ParamRef> out;
    generator.collect_params(out);
    return out;
  }

  std::vector<nn::ParamRef> discriminator_params() {
    std::vector<nn::ParamRef> out;
    discriminator.collect_params(out);
    return out;
  }
};

inline void clip_weights(const std::vector<nn::ParamRef>& params, double c) {
  require(c > 0.0, "clip_weights: c must be positive");
  for (const auto& ref : params)
    for (auto& v : ref.value->data) v = std::min(std::max(v, -c), c);
}

namespace detail {

inline ad::Var stack_scalars(ad::Tape& tape, const std::vector<ad::Var>& scalars) {
  require(!scalars.empty(), "stack_scalars: empty");
  std::vector<ad::Var> rows;
  for (ad::Var s : scalars) rows.push_back(tape.reshape(s, {1, 1}));
  return tape.reshape(tape.concat_rows(rows), {i64(scalars.size())});
}

// Critic scores for real targets and generator outputs on a shared tape.
struct BatchScores {
  ad::Var real;
  ad::Var fake;
};

inline BatchScores score_batch(TrainState& state, nn::Ctx& disc_ctx, const PaddedBatch& batch,
                               const GeneratorOutput& gen_out) {
  ad::Tape& tape = disc_ctx.tape;
  std::vector<ad::Var> real_scores, fake_scores;
  for (i64 b = 0; b < batch.batch_size(); ++b) {
    const i64 frames = batch.mel_lengths[size_t(b)];
    Tensor real({batch.n_mels(), frames});
    for (i64 m = 0; m < batch.n_mels(); ++m)
      for (i64 t = 0; t < frames; ++t) real(m, t) = batch.mels(b, m, t);
    real_scores.push_back(
        state.discriminator.score_graph(disc_ctx, tape.constant(std::move(real)), state.rng));
    fake_scores.push_back(
        state.discriminator.score_graph(disc_ctx, gen_out.per_item_postnet[size_t(b)], state.rng));
  }
  return {stack_scalars(tape, real_scores), stack_scalars(tape, fake_scores)};
}

}  // namespace detail

// One discriminator update followed by the configured generator updates.
// Counters advance only after their update applied; a non-finite loss raises
// before any parameter is touched.
inline std::vector<LossReport> train_cycle(TrainState& state, const PaddedBatch& disc_batch,
                                           const std::vector<PaddedBatch>& gen_batches) {
  require(i64(gen_batches.size()) == state.config.gen_updates_per_disc,
          "train_cycle: need exactly gen_updates_per_disc generator batches");
  std::vector<LossReport> reports;

  // --- critic update ---
  {
    ad::Tape tape;
    nn::Ctx gen_ctx{tape};
    gen_ctx.training = true;
    gen_ctx.grad_enabled = false;  // the generator is frozen for this update
    gen_ctx.rng = &state.rng;
    GeneratorOutput fake = state.generator.forward_teacher_forced(gen_ctx, disc_batch);

    nn::Ctx disc_ctx{tape};
    disc_ctx.training = true;
    disc_ctx.grad_enabled = true;
    disc_ctx.rng = &state.rng;
    detail::BatchScores scores = detail::score_batch(state, disc_ctx, disc_batch, fake);
    ad::Var critic = wasserstein_critic_loss(tape, scores.real, scores.fake);
    const double critic_value = critic.val()(0);
    require(std::isfinite(critic_value), "train_cycle: non-finite critic loss");

    tape.backward(critic);
    auto disc_params = state.discriminator_params();
    state.disc_opt.step(disc_params, disc_ctx);
    clip_weights(disc_params, state.config.clip_c);
    ++state.disc_step;

    LossReport r;
    r.step = state.global_step;
    r.wasserstein_term = critic_value;
    r.total = critic_value;
    reports.push_back(r);
  }

  // --- generator updates ---
  for (const PaddedBatch& batch : gen_batches) {
    ad::Tape tape;
    nn::Ctx ctx{tape};
    ctx.training = true;
    ctx.grad_enabled = true;
    ctx.rng = &state.rng;
    GeneratorOutput out = state.generator.forward_teacher_forced(ctx, batch);

    ad::Var mel = mel_loss(tape, out.mel_outputs, out.mel_postnet_outputs, batch.mels,
                           batch.mel_mask());
    ad::Var gate = gate_loss(tape, out.gate_logits, batch.gate_target, batch.frame_mask());
    ad::Var attn = guided_attention_loss(tape, out.alignments, batch.text_lengths,
                                         batch.mel_lengths, state.attention.g);

    nn::Ctx disc_ctx{tape};
    disc_ctx.training = true;
    disc_ctx.grad_enabled = false;  // critic frozen; gradients flow through it
    disc_ctx.rng = &state.rng;
    std::vector<ad::Var> fake_scores;
    for (i64 b = 0; b < batch.batch_size(); ++b)
      fake_scores.push_back(state.discriminator.score_graph(
          disc_ctx, out.per_item_postnet[size_t(b)], state.rng));
    ad::Var wass = wasserstein_generator_term(tape, detail::stack_scalars(tape, fake_scores));

    // scalar-side report; raises on non-finite components before any update
    LossReport report = generator_total_loss(mel.val()(0), gate.val()(0), wass.val()(0),
                                             attn.val()(0), state.global_step, state.attention,
                                             state.weights);

    ad::Var total = tape.add(tape.scale(mel, state.weights.mel),
                             tape.add(tape.scale(gate, state.weights.gate),
                                      tape.scale(wass, state.weights.wasserstein)));
    if (warmup_active(state.global_step, state.attention))
      total = tape.add(total, tape.scale(attn, state.weights.attention));

    tape.backward(total);
    auto gen_params = state.generator_params();
    state.gen_opt.step(gen_params, ctx);
    ++state.global_step;
    reports.push_back(report);
  }
  return reports;
}

// Aggregated evaluation pass: dropout off, no parameter updates, masked
// means over the whole set. Deterministic and repeatable; window overlaps
// come from a seed-derived stream, not the training rng.
inline LossReport validate(TrainState& state, const std::vector<PaddedBatch>& batches) {
  require(!batches.empty(), "validate: empty validation set");
  double mel_sum = 0.0, mel_cells = 0.0;
  double gate_sum = 0.0, gate_cells = 0.0;
  double attn_sum = 0.0, wass_sum = 0.0, items = 0.0;
  Rng val_rng = Rng::stream(state.config.seed, 0x7a11);

  for (const PaddedBatch& batch : batches) {
    ad::Tape tape;
    tape.set_recording(false);
    nn::Ctx ctx{tape};
    ctx.training = false;
    ctx.grad_enabled = false;
    ctx.rng = &val_rng;
    GeneratorOutput out = state.generator.forward_teacher_forced(ctx, batch);

    const Tensor mel_mask = batch.mel_mask();
    const Tensor frame_mask = batch.frame_mask();
    double mcells = 0.0;
    for (double v : mel_mask.data) mcells += v;
    double fcells = 0.0;
    for (double v : frame_mask.data) fcells += v;

    ad::Var mel = mel_loss(tape, out.mel_outputs, out.mel_postnet_outputs, batch.mels, mel_mask);
    ad::Var gate = gate_loss(tape, out.gate_logits, batch.gate_target, frame_mask);
    ad::Var attn = guided_attention_loss(tape, out.alignments, batch.text_lengths,
                                         batch.mel_lengths, state.attention.g);
    std::vector<ad::Var> fake_scores;
    for (i64 b = 0; b < batch.batch_size(); ++b)
      fake_scores.push_back(
          state.discriminator.score_graph(ctx, out.per_item_postnet[size_t(b)], val_rng));
    ad::Var wass = wasserstein_generator_term(tape, detail::stack_scalars(tape, fake_scores));

    mel_sum += mel.val()(0) * mcells;
    mel_cells += mcells;
    gate_sum += gate.val()(0) * fcells;
    gate_cells += fcells;
    const double n = double(batch.batch_size());
    attn_sum += attn.val()(0) * n;
    wass_sum += wass.val()(0) * n;
    items += n;
  }
  return generator_total_loss(mel_sum / mel_cells, gate_sum / gate_cells, wass_sum / items,
                              attn_sum / items, state.global_step, state.attention,
                              state.weights);
}

// --- metrics log ---
// append-only lines: step<TAB>mel<TAB>gate<TAB>wass<TAB>attn<TAB>total<TAB>phase

inline std::string format_metrics_line(const LossReport& r, const std::string& phase) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%lld\t%.10g\t%.10g\t%.10g\t%.10g\t%.10g\t%s",
                static_cast<long long>(r.step), r.mel_loss, r.gate_loss, r.wasserstein_term,
                r.attn_loss, r.total, phase.c_str());
  return std::string(buf);
}

// --- config snapshot serialization (checkpoint payload) ---

namespace detail {

inline std::string join_i64(const std::vector<i64>& v) {
  std::string s;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

inline std::vector<i64> split_i64(const std::string& s) {
  std::vector<i64> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stoll(item));
  return out;
}

}  // namespace detail

inline std::string serialize_train_setup(const TrainState& state) {
  const GeneratorConfig& g = state.generator.config();
  const DiscriminatorConfig& d = state.discriminator.config();
  const TrainConfig& t = state.config;
  const GuidedAttentionConfig& a = state.attention;
  const LossWeights& w = state.weights;
  std::map<std::string, std::string> kv;
  auto put_i = [&](const std::string& k, i64 v) { kv[k] = std::to_string(v); };
  auto put_d = [&](const std::string& k, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    kv[k] = buf;
  };
  put_i("generator.charset_size", g.charset_size);
  put_i("generator.embedding_dim", g.embedding_dim);
  put_i("generator.encoder_conv_layers", g.encoder_conv_layers);
  put_i("generator.encoder_conv_filters", g.encoder_conv_filters);
  put_i("generator.encoder_conv_kernel", g.encoder_conv_kernel);
  put_i("generator.encoder_rnn_dim", g.encoder_rnn_dim);
  put_i("generator.style_token_len", g.style_token_len);
  kv["generator.style_placement"] = to_string(g.style_placement);
  put_i("generator.prenet_dim", g.prenet_dim);
  put_i("generator.attention_rnn_dim", g.attention_rnn_dim);
  put_i("generator.decoder_rnn_dim", g.decoder_rnn_dim);
  put_i("generator.attention_dim", g.attention_dim);
  put_i("generator.location_filters", g.location_filters);
  put_i("generator.location_kernel", g.location_kernel);
  put_i("generator.n_mels", g.n_mels);
  put_i("generator.postnet_layers", g.postnet_layers);
  put_i("generator.postnet_filters", g.postnet_filters);
  put_i("generator.postnet_kernel", g.postnet_kernel);
  put_i("generator.max_decoder_steps", g.max_decoder_steps);
  put_d("generator.gate_threshold", g.gate_threshold);
  put_d("generator.prenet_dropout", g.prenet_dropout);
  kv["discriminator.kind"] = to_string(d.kind);
  put_i("discriminator.window_size", d.window_size);
  put_i("discriminator.n_mels", d.n_mels);
  kv["discriminator.hidden"] = detail::join_i64(d.hidden);
  put_i("discriminator.conv_out_channels", d.conv_out_channels);
  put_i("discriminator.conv_kernel", d.conv_kernel);
  put_d("discriminator.dropout", d.dropout);
  put_i("discriminator.max_overlap", d.max_overlap);
  put_i("trainer.gen_updates_per_disc", t.gen_updates_per_disc);
  put_d("trainer.clip_c", t.clip_c);
  put_d("trainer.lr_gen", t.lr_gen);
  put_d("trainer.lr_disc", t.lr_disc);
  put_i("trainer.batch_size", t.batch_size);
  put_i("trainer.max_steps", t.max_steps);
  put_i("trainer.validation_interval", t.validation_interval);
  put_i("trainer.checkpoint_interval", t.checkpoint_interval);
  kv["trainer.seed"] = std::to_string(t.seed);
  put_i("trainer.use_gradient_penalty", t.use_gradient_penalty ? 1 : 0);
  put_d("attention.g", a.g);
  put_i("attention.warmup_steps", a.warmup_steps);
  put_i("attention.enabled", a.enabled ? 1 : 0);
  put_d("weights.mel", w.mel);
  put_d("weights.gate", w.gate);
  put_d("weights.wasserstein", w.wasserstein);
  put_d("weights.attention", w.attention);
  for (const auto& [k, v] : state.metadata) {
    require(v.find('\n') == std::string::npos, "serialize_train_setup: newline in metadata " + k);
    kv["meta." + k] = v;
  }

  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

inline std::unique_ptr<TrainState> train_state_from_setup(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    const size_t eq = line.find(" = ");
    require(eq != std::string::npos, "train_state_from_setup: malformed line: " + line);
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  auto get = [&](const std::string& k) {
    auto it = kv.find(k);
    require(it != kv.end(), "train_state_from_setup: missing key " + k);
    return it->second;
  };
  auto get_i = [&](const std::string& k) { return i64(std::stoll(get(k))); };
  auto get_d = [&](const std::string& k) { return std::stod(get(k)); };

  GeneratorConfig g;
  g.charset_size = get_i("generator.charset_size");
  g.embedding_dim = get_i("generator.embedding_dim");
  g.encoder_conv_layers = get_i("generator.encoder_conv_layers");
  g.encoder_conv_filters = get_i("generator.encoder_conv_filters");
  g.encoder_conv_kernel = get_i("generator.encoder_conv_kernel");
  g.encoder_rnn_dim = get_i("generator.encoder_rnn_dim");
  g.style_token_len = get_i("generator.style_token_len");
  g.style_placement = style_placement_from_string(get("generator.style_placement"));
  g.prenet_dim = get_i("generator.prenet_dim");
  g.attention_rnn_dim = get_i("generator.attention_rnn_dim");
  g.decoder_rnn_dim = get_i("generator.decoder_rnn_dim");
  g.attention_dim = get_i("generator.attention_dim");
  g.location_filters = get_i("generator.location_filters");
  g.location_kernel = get_i("generator.location_kernel");
  g.n_mels = get_i("generator.n_mels");
  g.postnet_layers = get_i("generator.postnet_layers");
  g.postnet_filters = get_i("generator.postnet_filters");
  g.postnet_kernel = get_i("generator.postnet_kernel");
  g.max_decoder_steps = get_i("generator.max_decoder_steps");
  g.gate_threshold = get_d("generator.gate_threshold");
  g.prenet_dropout = get_d("generator.prenet_dropout");

  DiscriminatorConfig d;
  d.kind = disc_kind_from_string(get("discriminator.kind"));
  d.window_size = get_i("discriminator.window_size");
  d.n_mels = get_i("discriminator.n_mels");
  d.hidden = detail::split_i64(get("discriminator.hidden"));
  d.conv_out_channels = get_i("discriminator.conv_out_channels");
  d.conv_kernel = get_i("discriminator.conv_kernel");
  d.dropout = get_d("discriminator.dropout");
  d.max_overlap = get_i("discriminator.max_overlap");

  TrainConfig t;
  t.gen_updates_per_disc = get_i("trainer.gen_updates_per_disc");
  t.clip_c = get_d("trainer.clip_c");
  t.lr_gen = get_d("trainer.lr_gen");
  t.lr_disc = get_d("trainer.lr_disc");
  t.batch_size = get_i("trainer.batch_size");
  t.max_steps = get_i("trainer.max_steps");
  t.validation_interval = get_i("trainer.validation_interval");
  t.checkpoint_interval = get_i("trainer.checkpoint_interval");
  t.seed = u64(std::stoull(get("trainer.seed")));
  t.use_gradient_penalty = get_i("trainer.use_gradient_penalty") != 0;

  GuidedAttentionConfig a;
  a.g = get_d("attention.g");
  a.warmup_steps = get_i("attention.warmup_steps");
  a.enabled = get_i("attention.enabled") != 0;

  LossWeights w;
  w.mel = get_d("weights.mel");
  w.gate = get_d("weights.gate");
  w.wasserstein = get_d("weights.wasserstein");
  w.attention = get_d("weights.attention");

  auto state = std::make_unique<TrainState>(g, d, t, a, w);
  for (const auto& [k, v] : kv)
    if (k.rfind("meta.", 0) == 0) state->metadata[k.substr(5)] = v;
  return state;
}

// --- checkpoint container ---
// header: magic "GTRN", version u32, config digest u64, config text; then
// counters, rng state, named f64 parameter blobs and both optimizer states.

constexpr u32 kCheckpointVersion = 1;

namespace detail {

inline void write_params(std::ostream& os, const std::vector<nn::ParamRef>& params) {
  bin::write_u32(os, u32(params.size()));
  for (const auto& ref : params) {
    bin::write_string(os, ref.name);
    bin::write_u32(os, u32(ref.value->rank()));
    for (i64 dim : ref.value->shape) bin::write_u64(os, u64(dim));
    for (double v : ref.value->data) bin::write_f64(os, v);
  }
}

inline void read_params(std::istream& is, const std::vector<nn::ParamRef>& params) {
  const u32 count = bin::read_u32(is);
  require(count == params.size(), "checkpoint: parameter count mismatch");
  for (const auto& ref : params) {
    const std::string name = bin::read_string(is);
    require(name == ref.name, "checkpoint: parameter order mismatch at " + name);
    const u32 rank = bin::read_u32(is);
    require(rank == u32(ref.value->rank()), "checkpoint: rank mismatch at " + name);
    for (i64 dim : ref.value->shape)
      require(i64(bin::read_u64(is)) == dim, "checkpoint: shape mismatch at " + name);
    for (auto& v : ref.value->data) v = bin::read_f64(is);
  }
}

}  // namespace detail

inline void save_checkpoint(TrainState& state, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  require(bool(os), "save_checkpoint: cannot open " + path);
  const std::string setup = serialize_train_setup(state);
  os.write("GTRN", 4);
  bin::write_u32(os, kCheckpointVersion);
  bin::write_u64(os, fnv1a64(setup));
  bin::write_string(os, setup);
  bin::write_u64(os, u64(state.global_step));
  bin::write_u64(os, u64(state.disc_step));
  for (u64 word : state.rng.state()) bin::write_u64(os, word);
  auto gen_params = state.generator_params();
  auto disc_params = state.discriminator_params();
  detail::write_params(os, gen_params);
  detail::write_params(os, disc_params);
  state.gen_opt.save(os, gen_params);
  state.disc_opt.save(os, disc_params);
  require(bool(os), "save_checkpoint: stream failure");
}

inline std::unique_ptr<TrainState> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(bool(is), "load_checkpoint: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  require(bool(is) && std::string(magic, 4) == "GTRN", "load_checkpoint: bad magic");
  const u32 version = bin::read_u32(is);
  require(version == kCheckpointVersion,
          "load_checkpoint: unsupported checkpoint version " + std::to_string(version));
  const u64 digest = bin::read_u64(is);
  const std::string setup = bin::read_string(is);
  require(fnv1a64(setup) == digest, "load_checkpoint: config digest mismatch");

  auto state = train_state_from_setup(setup);
  state->global_step = i64(bin::read_u64(is));
  state->disc_step = i64(bin::read_u64(is));
  std::array<u64, 4> rng_state;
  for (auto& word : rng_state) word = bin::read_u64(is);
  state->rng.set_state(rng_state);
  auto gen_params = state->generator_params();
  auto disc_params = state->discriminator_params();
  detail::read_params(is, gen_params);
  detail::read_params(is, disc_params);
  state->gen_opt.load(is, gen_params);
  state->disc_opt.load(is, disc_params);
  require(bool(is), "load_checkpoint: truncated file");
  return state;
}

}  // namespace gantron
