// gantron/inference.hpp

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

#include <filesystem>
#include <string>
#include <vector>

#include "gantron/generator.hpp"
#include "gantron/groups.hpp"

namespace gantron {

// Autoregressive synthesis with stop-token termination. The pre-net dropout
// stays active with a per-file seed (that is where synthesis diversity comes
// from), so identical inputs and seed reproduce the same spectrogram.

enum class SynthesisStatus { completed, max_steps_reached };

inline const char* to_string(SynthesisStatus s) {
  return s == SynthesisStatus::completed ? "completed" : "max_steps_reached";
}

struct SynthesisResult {
  MelSpectrogram mel;
  SynthesisStatus status = SynthesisStatus::completed;
  i64 n_steps = 0;
  StyleToken style;
  Tensor alignment;  // [n_steps, N]
};

inline SynthesisResult synthesize(const Generator& generator, const std::string& text,
                                  const Charset& charset, const StyleToken& style, u64 seed,
                                  const MelConfig& mel_cfg = {}, i64 max_steps = -1,
                                  double gate_threshold = -1.0) {
  const GeneratorConfig& cfg = generator.config();
  if (max_steps < 0) max_steps = cfg.max_decoder_steps;
  if (gate_threshold < 0.0) gate_threshold = cfg.gate_threshold;
  require(max_steps >= 1, "synthesize: max_steps must be >= 1");
  const EncodedText encoded = encode_text(text, charset);

  ad::Tape tape;
  tape.set_recording(false);
  Rng rng(seed);
  nn::Ctx ctx{tape};
  ctx.training = false;
  ctx.grad_enabled = false;
  ctx.inference_dropout = true;
  ctx.rng = &rng;

  ad::Var memory =
      generator.encode(ctx, encoded.ids, cfg.style_token_len > 0 ? &style : nullptr);
  DecoderState state = generator.init_decoder_state(ctx, memory);
  const i64 n_text = i64(encoded.ids.size());

  std::vector<Tensor> frames;
  std::vector<Tensor> weights;
  SynthesisStatus status = SynthesisStatus::max_steps_reached;
  ad::Var prev = tape.constant(Tensor({1, cfg.n_mels}));
  i64 steps = 0;
  while (steps < max_steps) {
    DecodeStepResult r = generator.decode_step(ctx, state, prev);
    ++steps;
    frames.push_back(r.frame.val());
    weights.push_back(r.att_weights.val());
    prev = r.frame;
    const double gate = 1.0 / (1.0 + std::exp(-r.gate_logit.val()(0, 0)));
    if (gate > gate_threshold) {
      status = SynthesisStatus::completed;
      break;
    }
  }

  // post-net over the assembled sequence
  Tensor mel_seq({cfg.n_mels, steps});
  for (i64 t = 0; t < steps; ++t)
    for (i64 m = 0; m < cfg.n_mels; ++m) mel_seq(m, t) = frames[size_t(t)](0, m);
  ad::Var mel_var = tape.constant(mel_seq);
  ad::Var post = tape.add(mel_var, generator.postnet_forward(ctx, mel_var));

  SynthesisResult result;
  result.mel.data = post.val();
  result.mel.config = mel_cfg;
  result.mel.config.n_mels = cfg.n_mels;
  result.status = status;
  result.n_steps = steps;
  result.style = style;
  result.alignment = Tensor({steps, n_text});
  for (i64 t = 0; t < steps; ++t)
    for (i64 n = 0; n < n_text; ++n) result.alignment(t, n) = weights[size_t(t)](0, n);
  return result;
}

// --- bulk group generation ---

struct GroupFileEntry {
  std::string id;
  i64 group_id = 0;
  std::vector<double> style_values;
  std::array<double, 5> emotions{};  // zero block when the token has no labels
  std::string status;
  i64 n_steps = 0;
  std::string mel_path;
};

struct GroupGenerationResult {
  std::vector<GroupFileEntry> entries;
  double failure_rate = 0.0;
};

// Synthesizes n_files utterances under one group spec, persisting each mel
// in the binary container plus one manifest entry. Texts cycle when fewer
// than n_files are supplied. Per-file rng streams derive from base_seed and
// the file index, so workers could fan out without changing the output.
inline GroupGenerationResult generate_group(const Generator& generator, const Charset& charset,
                                            const std::vector<std::string>& texts,
                                            const GroupSpec& spec, const TokenLayout& layout,
                                            i64 n_files, u64 base_seed,
                                            const std::string& out_dir,
                                            const MelConfig& mel_cfg = {}, i64 max_steps = -1,
                                            double gate_threshold = -1.0) {
  require(n_files > 0, "generate_group: n_files must be positive");
  require(!texts.empty(), "generate_group: no texts supplied");
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "mels");

  GroupGenerationResult out;
  i64 failures = 0;
  for (i64 i = 0; i < n_files; ++i) {
    const u64 stream_id = (u64(spec.group_id) << 32) | u64(i);
    Rng rng = Rng::stream(base_seed, stream_id);
    const StyleToken token = style_token_for_file(spec, layout, rng);
    const std::string& text = texts[size_t(i % i64(texts.size()))];
    SynthesisResult res = synthesize(generator, text, charset, token, rng.next_u64(), mel_cfg,
                                     max_steps, gate_threshold);
    if (res.status == SynthesisStatus::max_steps_reached) ++failures;

    GroupFileEntry entry;
    entry.id = "g" + std::to_string(spec.group_id) + "_" + std::to_string(i);
    entry.group_id = spec.group_id;
    entry.style_values = token.values;
    if (layout.mode != StyleMode::noise_only) entry.emotions = token.emotion_block();
    entry.status = to_string(res.status);
    entry.n_steps = res.n_steps;
    entry.mel_path = (fs::path("mels") / (entry.id + ".mels")).string();
    write_mel_file(res.mel, (fs::path(out_dir) / entry.mel_path).string());
    out.entries.push_back(std::move(entry));
  }
  out.failure_rate = double(failures) / double(n_files);
  return out;
}

// group manifest: one JSON object per line
inline void write_group_manifest(const std::vector<GroupFileEntry>& entries,
                                 const std::string& path) {
  std::ofstream os(path);
  require(bool(os), "write_group_manifest: cannot open " + path);
  for (const auto& e : entries) {
    nlohmann::json j;
    j["id"] = e.id;
    j["group_id"] = e.group_id;
    j["style"] = e.style_values;
    j["emotions"] = e.emotions;
    j["status"] = e.status;
    j["n_steps"] = e.n_steps;
    j["mel"] = e.mel_path;
    os << j.dump() << "\n";
  }
}

inline std::vector<GroupFileEntry> read_group_manifest(const std::string& path) {
  std::ifstream is(path);
  require(bool(is), "read_group_manifest: cannot open " + path);
  std::vector<GroupFileEntry> entries;
  std::string line;
  i64 line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error("read_group_manifest: line " + std::to_string(line_no) + ": " + e.what());
    }
    GroupFileEntry e;
    e.id = j.at("id").get<std::string>();
    e.group_id = j.at("group_id").get<i64>();
    e.style_values = j.at("style").get<std::vector<double>>();
    const auto em = j.at("emotions").get<std::vector<double>>();
    require(em.size() == 5, "read_group_manifest: emotions block must have 5 entries");
    for (size_t k = 0; k < 5; ++k) e.emotions[k] = em[k];
    e.status = j.at("status").get<std::string>();
    e.n_steps = j.at("n_steps").get<i64>();
    e.mel_path = j.at("mel").get<std::string>();
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace gantron
