// gantron/cli.hpp

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

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gantron/gantron.hpp"

namespace gantron::cli {

namespace fs = std::filesystem;

// --- documented configuration registry ---

inline std::vector<RunConfig::KeySpec> config_registry() {
  return {
      {"mel.sample_rate", "22050", "mel_features", "waveform sample rate in Hz"},
      {"mel.n_fft", "1024", "mel_features", "FFT size (power of two)"},
      {"mel.hop_length", "256", "mel_features", "frame hop in samples"},
      {"mel.win_length", "1024", "mel_features", "analysis window in samples"},
      {"mel.n_mels", "80", "mel_features", "number of mel bands"},
      {"mel.fmin", "0", "mel_features", "lowest band edge in Hz"},
      {"mel.fmax", "8000", "mel_features", "highest band edge in Hz"},
      {"corpus.charset", "", "corpus", "charset file (empty = builtin latin set)"},
      {"corpus.split_train", "0.85", "corpus", "training split ratio"},
      {"corpus.split_val", "0.05", "corpus", "validation split ratio"},
      {"corpus.split_test", "0.10", "corpus", "test split ratio"},
      {"generator.embedding_dim", "512", "generator_net", "character embedding width"},
      {"generator.encoder_conv_layers", "3", "generator_net", "encoder conv stack depth"},
      {"generator.encoder_conv_filters", "512", "generator_net", "encoder conv channels"},
      {"generator.encoder_conv_kernel", "5", "generator_net", "encoder conv kernel (odd)"},
      {"generator.encoder_rnn_dim", "256", "generator_net", "encoder LSTM width per direction"},
      {"generator.prenet_dim", "256", "generator_net", "pre-net width"},
      {"generator.attention_rnn_dim", "1024", "generator_net", "attention LSTM width"},
      {"generator.decoder_rnn_dim", "1024", "generator_net", "decoder LSTM width"},
      {"generator.attention_dim", "128", "generator_net", "attention projection width"},
      {"generator.location_filters", "32", "generator_net", "location feature channels"},
      {"generator.location_kernel", "31", "generator_net", "location conv kernel (odd)"},
      {"generator.postnet_layers", "5", "generator_net", "post-net conv depth"},
      {"generator.postnet_filters", "512", "generator_net", "post-net conv channels"},
      {"generator.postnet_kernel", "5", "generator_net", "post-net kernel (odd)"},
      {"generator.max_decoder_steps", "1000", "generator_net", "synthesis step cap"},
      {"generator.gate_threshold", "0.5", "generator_net", "stop-token sigmoid threshold"},
      {"generator.prenet_dropout", "0.5", "generator_net", "pre-net dropout (also at inference)"},
      {"generator.style_placement", "decoder", "generator_net",
       "style token injection point: encoder|decoder"},
      {"generator.noise_dim", "128", "generator_net", "noise block size for noise-bearing tokens"},
      {"discriminator.kind", "linear", "discriminator_net", "critic type: linear|convolutional"},
      {"discriminator.window_size", "20", "discriminator_net", "frames per window"},
      {"discriminator.hidden", "", "discriminator_net",
       "comma list of block widths (empty = per-kind default)"},
      {"discriminator.conv_out_channels", "80", "discriminator_net", "final conv channels"},
      {"discriminator.conv_kernel", "5", "discriminator_net", "conv kernel (odd)"},
      {"discriminator.dropout", "0.5", "discriminator_net", "block dropout rate"},
      {"discriminator.max_overlap", "10", "discriminator_net",
       "max random window overlap (linear kind)"},
      {"losses.guided_g", "0.2", "losses", "guided-attention sharpness"},
      {"losses.warmup_steps", "5000", "losses", "guided-attention warm-up steps"},
      {"losses.warmup_enabled", "true", "losses", "enable the guided-attention warm-up"},
      {"losses.weight_mel", "1.0", "losses", "mel term weight"},
      {"losses.weight_gate", "1.0", "losses", "gate term weight"},
      {"losses.weight_wasserstein", "1.0", "losses", "adversarial term weight"},
      {"losses.weight_attention", "1.0", "losses", "guided-attention term weight"},
      {"trainer.gen_updates_per_disc", "2", "trainer", "generator updates per critic update"},
      {"trainer.clip_c", "0.01", "trainer", "critic weight clipping bound"},
      {"trainer.lr_gen", "0.001", "trainer", "generator learning rate"},
      {"trainer.lr_disc", "0.0001", "trainer", "critic learning rate"},
      {"trainer.batch_size", "8", "trainer", "training batch size"},
      {"trainer.max_steps", "1000", "trainer", "generator updates to run"},
      {"trainer.validation_interval", "100", "trainer", "generator updates between validations"},
      {"trainer.checkpoint_interval", "500", "trainer", "generator updates between checkpoints"},
      {"trainer.use_gradient_penalty", "false", "trainer",
       "gradient-penalty critic stub (unsupported; weight clipping is the implemented mode)"},
      {"evaluation.intensity_min", "0.5", "evaluation", "strong-emotion intensity lower bound"},
      {"evaluation.intensity_max", "1.0", "evaluation", "strong-emotion intensity upper bound"},
      {"evaluation.epochs", "12", "evaluation", "classifier training epochs"},
      {"evaluation.batch_size", "16", "evaluation", "classifier batch size"},
      {"evaluation.lr", "0.001", "evaluation", "classifier learning rate"},
  };
}

// --- shared helpers ---

inline u64 resolve_seed(std::optional<u64> flag_seed) {
  if (flag_seed) return *flag_seed;
  if (const char* env = std::getenv("GANTRON_SEED")) return std::stoull(env);
  return 1234;
}

inline void apply_overrides(RunConfig& cfg, const std::string& config_file,
                            const std::vector<std::string>& sets) {
  if (!config_file.empty()) cfg.load_file(config_file);
  for (const std::string& kv : sets) {
    const size_t eq = kv.find('=');
    require(eq != std::string::npos, "--set expects key=value, got: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
}

// Every run directory gets the effective config, seed, version and command
// line; together with the checkpoint these reproduce the run.
inline void write_run_info(const std::string& out_dir, const RunConfig& cfg, u64 seed,
                           const std::vector<std::string>& args) {
  fs::create_directories(out_dir);
  std::ofstream eff(fs::path(out_dir) / "effective.cfg");
  require(bool(eff), "write_run_info: cannot write effective.cfg");
  eff << cfg.render();
  std::ofstream info(fs::path(out_dir) / "run_info.txt");
  require(bool(info), "write_run_info: cannot write run_info.txt");
  info << "version: " << kVersionString << "\n";
  info << "seed: " << seed << "\n";
  info << "command:";
  for (const auto& a : args) info << " " << a;
  info << "\n";
}

inline MelConfig mel_config_from(const RunConfig& cfg) {
  MelConfig mc;
  mc.sample_rate = cfg.get_i("mel.sample_rate");
  mc.n_fft = cfg.get_i("mel.n_fft");
  mc.hop_length = cfg.get_i("mel.hop_length");
  mc.win_length = cfg.get_i("mel.win_length");
  mc.n_mels = cfg.get_i("mel.n_mels");
  mc.fmin = cfg.get_d("mel.fmin");
  mc.fmax = cfg.get_d("mel.fmax");
  mc.validate();
  return mc;
}

inline Charset charset_from(const RunConfig& cfg) {
  const std::string path = cfg.get("corpus.charset");
  return path.empty() ? Charset::basic_latin() : Charset::load(path);
}

// --- model variants ---

struct ModelVariant {
  std::string name;
  std::vector<std::string> datasets;  // which manifests the variant trains on
  StyleMode style_mode;
};

inline ModelVariant select_model_variant(const std::string& name) {
  if (name == "baseline") return {name, {"lj"}, StyleMode::noise_only};
  if (name == "expressive") return {name, {"lj", "vesus"}, StyleMode::noise_only};
  if (name == "labelled") return {name, {"lj", "vesus"}, StyleMode::labels_only};
  if (name == "complete") return {name, {"lj", "vesus"}, StyleMode::labels_plus_noise};
  throw Error("unknown model type '" + name +
              "' (valid: baseline, expressive, labelled, complete)");
}

namespace detail {

struct LoadedCorpus {
  std::vector<UtteranceRecord> train, val;
  i64 n_speakers = 1;
};

inline LoadedCorpus load_training_corpus(const ModelVariant& variant, const std::string& lj,
                                         const std::string& vesus, const RunConfig& cfg,
                                         u64 seed) {
  const std::array<double, 3> ratios = {cfg.get_d("corpus.split_train"),
                                        cfg.get_d("corpus.split_val"),
                                        cfg.get_d("corpus.split_test")};
  LoadedCorpus corpus;
  i64 max_speaker = 0;
  i64 dataset_index = 0;
  for (const std::string& ds : variant.datasets) {
    const std::string& path = ds == "lj" ? lj : vesus;
    require(!path.empty(), "train: model type '" + variant.name + "' needs --" + ds);
    auto records = parse_manifest(path, ManifestFormat::vesus);
    require(!records.empty(), "train: manifest " + path + " is empty");
    const fs::path base = fs::path(path).parent_path();
    for (auto& rec : records) {
      require(!rec.mel_path.empty(),
              "train: record " + rec.id + " has no mel_path; run preprocess first");
      if (!fs::path(rec.mel_path).is_absolute()) rec.mel_path = (base / rec.mel_path).string();
      max_speaker = std::max(max_speaker, rec.speaker_id);
    }
    DatasetSplits splits = split_dataset(records, ratios, seed + u64(dataset_index));
    corpus.train.insert(corpus.train.end(), splits.train.begin(), splits.train.end());
    corpus.val.insert(corpus.val.end(), splits.val.begin(), splits.val.end());
    ++dataset_index;
  }
  corpus.n_speakers = max_speaker + 1;
  return corpus;
}

struct EncodedCorpus {
  std::vector<CollateItem> items;
};

inline EncodedCorpus encode_corpus(const std::vector<UtteranceRecord>& records,
                                   const Charset& charset, StyleMode mode, bool has_speaker,
                                   i64 n_speakers, i64 noise_dim, Rng& rng) {
  EncodedCorpus out;
  for (const auto& rec : records) {
    CollateItem item;
    item.symbols = encode_text(rec.text, charset).ids;
    item.mel = read_mel_file(rec.mel_path);
    std::optional<std::array<double, 5>> labels;
    if (mode != StyleMode::noise_only)
      labels = rec.emotion_labels ? *rec.emotion_labels : std::array<double, 5>{0, 0, 0, 0, 0};
    std::optional<std::pair<i64, i64>> speaker;
    if (has_speaker) speaker = {rec.speaker_id, n_speakers};
    item.style = build_style_token(mode, labels, speaker,
                                   mode == StyleMode::labels_only ? 0 : noise_dim, rng);
    out.items.push_back(std::move(item));
  }
  return out;
}

inline PaddedBatch sample_batch(const EncodedCorpus& corpus, i64 batch_size, Rng& rng) {
  std::vector<CollateItem> picked;
  for (i64 i = 0; i < batch_size; ++i)
    picked.push_back(corpus.items[size_t(rng.uniform_int(0, i64(corpus.items.size()) - 1))]);
  return collate_batch(std::move(picked));
}

inline std::vector<PaddedBatch> fixed_batches(const EncodedCorpus& corpus, i64 batch_size) {
  std::vector<PaddedBatch> out;
  for (size_t ofs = 0; ofs < corpus.items.size(); ofs += size_t(batch_size)) {
    const size_t end = std::min(corpus.items.size(), ofs + size_t(batch_size));
    std::vector<CollateItem> chunk(corpus.items.begin() + i64(ofs),
                                   corpus.items.begin() + i64(end));
    out.push_back(collate_batch(std::move(chunk)));
  }
  return out;
}

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream is(path);
  require(bool(is), "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace detail

// --- subcommands ---

inline int cmd_preprocess(const std::string& format, const std::string& manifest,
                          const std::string& audio_dir, const std::string& out_dir,
                          RunConfig& cfg, u64 seed, const std::vector<std::string>& args) {
  const MelConfig mel_cfg = mel_config_from(cfg);
  const Charset charset = charset_from(cfg);
  write_run_info(out_dir, cfg, seed, args);
  fs::create_directories(fs::path(out_dir) / "mels");

  const ManifestFormat fmt = format == "lj" ? ManifestFormat::lj : ManifestFormat::vesus;
  std::vector<UtteranceRecord> records = parse_manifest(manifest, fmt);
  const fs::path manifest_base = fs::path(manifest).parent_path();

  i64 done = 0;
  for (auto& rec : records) {
    (void)encode_text(rec.text, charset);  // surface encoding problems now
    if (fmt == ManifestFormat::lj) {
      const fs::path wav_path =
          (audio_dir.empty() ? manifest_base / "wavs" : fs::path(audio_dir)) / (rec.id + ".wav");
      WavData wav = read_wav(wav_path.string());
      require(wav.sample_rate == mel_cfg.sample_rate,
              "preprocess: " + rec.id + " sample rate " + std::to_string(wav.sample_rate) +
                  " != mel.sample_rate " + std::to_string(mel_cfg.sample_rate));
      MelSpectrogram mel = waveform_to_mel(wav.samples, mel_cfg);
      rec.mel_path = (fs::path("mels") / (rec.id + ".mels")).string();
      write_mel_file(mel, (fs::path(out_dir) / rec.mel_path).string());
    } else {
      require(!rec.mel_path.empty(), "preprocess: vesus record " + rec.id + " lacks mel_path");
      fs::path src = rec.mel_path;
      if (!src.is_absolute()) src = manifest_base / src;
      (void)read_mel_file(src.string());  // validate container
      rec.mel_path = fs::absolute(src).string();
    }
    ++done;
  }
  write_manifest_jsonl(records, (fs::path(out_dir) / "manifest.jsonl").string());
  std::cout << "preprocess: wrote " << done << " records to " << out_dir << "\n";
  return 0;
}

inline int cmd_train(const std::string& model_type, const std::string& lj,
                     const std::string& vesus, const std::string& out_dir,
                     const std::string& resume, RunConfig& cfg, u64 seed,
                     const std::vector<std::string>& args) {
  const ModelVariant variant = select_model_variant(model_type);
  const Charset charset = charset_from(cfg);
  write_run_info(out_dir, cfg, seed, args);

  detail::LoadedCorpus corpus = detail::load_training_corpus(variant, lj, vesus, cfg, seed);
  const bool has_speaker = corpus.n_speakers > 1;
  const i64 noise_dim =
      variant.style_mode == StyleMode::labels_only ? 0 : cfg.get_i("generator.noise_dim");
  const i64 token_len = style_token_length(variant.style_mode, has_speaker, noise_dim);

  std::unique_ptr<TrainState> state;
  if (!resume.empty()) {
    state = load_checkpoint(resume);
    state->config.max_steps = cfg.get_i("trainer.max_steps");
  } else {
    GeneratorConfig gcfg;
    gcfg.charset_size = charset.size();
    gcfg.embedding_dim = cfg.get_i("generator.embedding_dim");
    gcfg.encoder_conv_layers = cfg.get_i("generator.encoder_conv_layers");
    gcfg.encoder_conv_filters = cfg.get_i("generator.encoder_conv_filters");
    gcfg.encoder_conv_kernel = cfg.get_i("generator.encoder_conv_kernel");
    gcfg.encoder_rnn_dim = cfg.get_i("generator.encoder_rnn_dim");
    gcfg.style_token_len = token_len;
    gcfg.style_placement = style_placement_from_string(cfg.get("generator.style_placement"));
    gcfg.prenet_dim = cfg.get_i("generator.prenet_dim");
    gcfg.attention_rnn_dim = cfg.get_i("generator.attention_rnn_dim");
    gcfg.decoder_rnn_dim = cfg.get_i("generator.decoder_rnn_dim");
    gcfg.attention_dim = cfg.get_i("generator.attention_dim");
    gcfg.location_filters = cfg.get_i("generator.location_filters");
    gcfg.location_kernel = cfg.get_i("generator.location_kernel");
    gcfg.n_mels = cfg.get_i("mel.n_mels");
    gcfg.postnet_layers = cfg.get_i("generator.postnet_layers");
    gcfg.postnet_filters = cfg.get_i("generator.postnet_filters");
    gcfg.postnet_kernel = cfg.get_i("generator.postnet_kernel");
    gcfg.max_decoder_steps = cfg.get_i("generator.max_decoder_steps");
    gcfg.gate_threshold = cfg.get_d("generator.gate_threshold");
    gcfg.prenet_dropout = cfg.get_d("generator.prenet_dropout");

    DiscriminatorConfig dcfg;
    dcfg.kind = disc_kind_from_string(cfg.get("discriminator.kind"));
    dcfg.window_size = cfg.get_i("discriminator.window_size");
    dcfg.n_mels = gcfg.n_mels;
    const std::string hidden = cfg.get("discriminator.hidden");
    if (hidden.empty()) {
      dcfg.hidden = dcfg.kind == DiscKind::convolutional ? std::vector<i64>{1024, 512, 512, 512}
                                                         : std::vector<i64>{512, 512, 512};
    } else {
      dcfg.hidden = gantron::detail::split_i64(hidden);
    }
    dcfg.conv_out_channels = cfg.get_i("discriminator.conv_out_channels");
    dcfg.conv_kernel = cfg.get_i("discriminator.conv_kernel");
    dcfg.dropout = cfg.get_d("discriminator.dropout");
    dcfg.max_overlap = cfg.get_i("discriminator.max_overlap");

    TrainConfig tcfg;
    tcfg.gen_updates_per_disc = cfg.get_i("trainer.gen_updates_per_disc");
    tcfg.clip_c = cfg.get_d("trainer.clip_c");
    tcfg.lr_gen = cfg.get_d("trainer.lr_gen");
    tcfg.lr_disc = cfg.get_d("trainer.lr_disc");
    tcfg.batch_size = cfg.get_i("trainer.batch_size");
    tcfg.max_steps = cfg.get_i("trainer.max_steps");
    tcfg.validation_interval = cfg.get_i("trainer.validation_interval");
    tcfg.checkpoint_interval = cfg.get_i("trainer.checkpoint_interval");
    tcfg.seed = seed;
    tcfg.use_gradient_penalty = cfg.get_b("trainer.use_gradient_penalty");

    GuidedAttentionConfig acfg;
    acfg.g = cfg.get_d("losses.guided_g");
    acfg.warmup_steps = cfg.get_i("losses.warmup_steps");
    acfg.enabled = cfg.get_b("losses.warmup_enabled");

    LossWeights weights;
    weights.mel = cfg.get_d("losses.weight_mel");
    weights.gate = cfg.get_d("losses.weight_gate");
    weights.wasserstein = cfg.get_d("losses.weight_wasserstein");
    weights.attention = cfg.get_d("losses.weight_attention");

    state = std::make_unique<TrainState>(gcfg, dcfg, tcfg, acfg, weights);
    state->metadata["model_type"] = variant.name;
    state->metadata["style_mode"] = to_string(variant.style_mode);
    state->metadata["has_speaker"] = has_speaker ? "1" : "0";
    state->metadata["n_speakers"] = std::to_string(corpus.n_speakers);
    state->metadata["noise_dim"] = std::to_string(noise_dim);
    state->metadata["mel.sample_rate"] = cfg.get("mel.sample_rate");
    state->metadata["mel.hop_length"] = cfg.get("mel.hop_length");
    std::string joined;
    for (i64 i = 0; i < charset.size(); ++i) {
      if (i) joined += "\t";
      joined += charset.symbols[size_t(i)];
    }
    state->metadata["charset"] = joined;
  }

  // the data pipeline rng is part of the train state, so resumed runs draw
  // identical batches
  Rng style_rng = Rng::stream(state->config.seed, 0x57);
  detail::EncodedCorpus train_set =
      detail::encode_corpus(corpus.train, charset, variant.style_mode, has_speaker,
                            corpus.n_speakers, noise_dim, style_rng);
  detail::EncodedCorpus val_set =
      detail::encode_corpus(corpus.val, charset, variant.style_mode, has_speaker,
                            corpus.n_speakers, noise_dim, style_rng);
  require(!train_set.items.empty(), "train: empty training split");
  const std::vector<PaddedBatch> val_batches =
      val_set.items.empty() ? std::vector<PaddedBatch>{}
                            : detail::fixed_batches(val_set, state->config.batch_size);

  std::ofstream metrics(fs::path(out_dir) / "metrics.log", std::ios::app);
  require(bool(metrics), "train: cannot open metrics.log");

  const i64 ratio = state->config.gen_updates_per_disc;
  while (state->global_step < state->config.max_steps) {
    PaddedBatch disc_batch =
        detail::sample_batch(train_set, state->config.batch_size, state->rng);
    std::vector<PaddedBatch> gen_batches;
    for (i64 i = 0; i < ratio; ++i)
      gen_batches.push_back(detail::sample_batch(train_set, state->config.batch_size, state->rng));
    std::vector<LossReport> reports = train_cycle(*state, disc_batch, gen_batches);
    for (size_t i = 1; i < reports.size(); ++i)  // index 0 is the critic report
      metrics << format_metrics_line(reports[i], "train") << "\n";
    metrics.flush();

    if (!val_batches.empty() && state->global_step % state->config.validation_interval == 0) {
      LossReport vr = validate(*state, val_batches);
      metrics << format_metrics_line(vr, "val") << "\n";
      metrics.flush();
    }
    if (state->global_step % state->config.checkpoint_interval == 0) {
      save_checkpoint(*state, (fs::path(out_dir) /
                               ("checkpoint_" + std::to_string(state->global_step) + ".gtrn"))
                                  .string());
    }
  }
  save_checkpoint(*state, (fs::path(out_dir) / "checkpoint_final.gtrn").string());
  std::cout << "train: " << state->global_step << " generator steps, " << state->disc_step
            << " critic steps; checkpoint_final.gtrn written to " << out_dir << "\n";
  return 0;
}

namespace detail {

struct ModelBundle {
  std::unique_ptr<TrainState> state;
  Charset charset;
  TokenLayout layout;
  MelConfig mel_cfg;
  i64 n_speakers = 1;
};

inline ModelBundle load_model(const std::string& checkpoint) {
  ModelBundle b;
  b.state = load_checkpoint(checkpoint);
  auto need = [&](const std::string& key) {
    auto it = b.state->metadata.find(key);
    require(it != b.state->metadata.end(), "checkpoint lacks metadata key " + key);
    return it->second;
  };
  b.layout.mode = style_mode_from_string(need("style_mode"));
  b.layout.has_speaker = need("has_speaker") == "1";
  b.layout.noise_dim = std::stoll(need("noise_dim"));
  b.n_speakers = std::stoll(need("n_speakers"));
  b.mel_cfg.n_mels = b.state->generator.config().n_mels;
  b.mel_cfg.sample_rate = std::stoll(need("mel.sample_rate"));
  b.mel_cfg.hop_length = std::stoll(need("mel.hop_length"));
  std::stringstream ss(need("charset"));
  std::string sym;
  while (std::getline(ss, sym, '\t')) b.charset.symbols.push_back(sym);
  require(b.charset.size() == b.state->generator.config().charset_size,
          "checkpoint charset does not match generator");
  return b;
}

}  // namespace detail

inline int cmd_synthesize(const std::string& checkpoint, const std::string& text,
                          const std::string& out_file, const std::string& emotions_csv,
                          i64 speaker, u64 noise_seed, u64 seed, i64 max_steps,
                          double gate_threshold) {
  detail::ModelBundle bundle = detail::load_model(checkpoint);

  std::optional<std::array<double, 5>> labels;
  if (bundle.layout.mode != StyleMode::noise_only) {
    std::array<double, 5> values{0, 0, 0, 0, 0};
    if (!emotions_csv.empty()) {
      std::stringstream ss(emotions_csv);
      std::string item;
      size_t k = 0;
      while (std::getline(ss, item, ',')) {
        require(k < 5, "--emotions expects exactly 5 comma-separated values");
        values[k++] = std::stod(item);
      }
      require(k == 5, "--emotions expects exactly 5 comma-separated values");
    }
    labels = values;
  }
  std::optional<std::pair<i64, i64>> speaker_arg;
  if (bundle.layout.has_speaker) speaker_arg = {speaker, bundle.n_speakers};

  Rng noise_rng(noise_seed);
  const StyleToken token = build_style_token(bundle.layout.mode, labels, speaker_arg,
                                             bundle.layout.noise_dim, noise_rng);
  SynthesisResult res = synthesize(bundle.state->generator, text, bundle.charset, token, seed,
                                   bundle.mel_cfg, max_steps, gate_threshold);
  fs::create_directories(fs::path(out_file).parent_path().empty()
                             ? "."
                             : fs::path(out_file).parent_path().string());
  write_mel_file(res.mel, out_file);
  std::cout << "synthesize: " << to_string(res.status) << " after " << res.n_steps
            << " steps; wrote " << out_file << "\n";
  return 0;
}

inline int cmd_eval_groups(const std::string& checkpoint, const std::string& mode_name,
                           i64 n_files, const std::string& texts_file,
                           const std::string& out_dir, i64 speaker, RunConfig& cfg, u64 seed,
                           const std::vector<std::string>& args) {
  detail::ModelBundle bundle = detail::load_model(checkpoint);
  write_run_info(out_dir, cfg, seed, args);
  const std::vector<std::string> texts = detail::read_lines(texts_file);

  if (bundle.layout.has_speaker) {
    require(speaker >= 0 && speaker < bundle.n_speakers, "eval-groups: speaker out of range");
    bundle.layout.speaker_value =
        double(speaker) / double(std::max<i64>(1, bundle.n_speakers - 1));
  }

  const GroupTokenMode mode = group_token_mode_from_string(mode_name);
  Rng spec_rng = Rng::stream(seed, 0x6701);
  const std::vector<GroupSpec> specs = build_group_specs(
      mode, {cfg.get_d("evaluation.intensity_min"), cfg.get_d("evaluation.intensity_max")},
      bundle.layout.noise_dim, spec_rng);

  std::vector<GroupFileEntry> all_entries;
  nlohmann::json failure_rates = nlohmann::json::array();
  for (const GroupSpec& spec : specs) {
    GroupGenerationResult gen = generate_group(bundle.state->generator, bundle.charset, texts,
                                               spec, bundle.layout, n_files, seed, out_dir,
                                               bundle.mel_cfg);
    failure_rates.push_back(gen.failure_rate);
    all_entries.insert(all_entries.end(), gen.entries.begin(), gen.entries.end());
    std::cout << "group " << spec.group_id << " (" << to_string(spec.mode)
              << "): failure rate " << gen.failure_rate << "\n";
  }
  const std::string manifest_path = (fs::path(out_dir) / "group_manifest.jsonl").string();
  write_group_manifest(all_entries, manifest_path);

  ClassifierConfig ccfg;
  ccfg.epochs = cfg.get_i("evaluation.epochs");
  ccfg.batch_size = cfg.get_i("evaluation.batch_size");
  ccfg.lr = cfg.get_d("evaluation.lr");
  ccfg.split = {cfg.get_d("corpus.split_train"), cfg.get_d("corpus.split_val"),
                cfg.get_d("corpus.split_test")};
  EvalReport report = run_group_classification(manifest_path, ccfg, seed);

  nlohmann::json j = eval_report_json(report);
  j["failure_rates"] = failure_rates;
  j["mode"] = mode_name;
  std::ofstream(fs::path(out_dir) / "report.json") << j.dump(2) << "\n";
  write_confusion_csv(report, (fs::path(out_dir) / "confusion.csv").string());
  write_series_csv({{"val_accuracy", report.val_accuracy_per_epoch}},
                   (fs::path(out_dir) / "accuracy_curve.csv").string());
  write_line_chart_svg({{"val_accuracy", report.val_accuracy_per_epoch}},
                       "group separability (" + mode_name + ")",
                       (fs::path(out_dir) / "accuracy_curve.svg").string());
  std::cout << "eval-groups: test accuracy " << report.accuracy << " over " << report.n_test
            << " files\n";
  return 0;
}

inline int cmd_augment_check(const std::vector<std::string>& real_manifests,
                             const std::string& generated_manifest, const std::string& out_dir,
                             RunConfig& cfg, u64 seed, const std::vector<std::string>& args) {
  write_run_info(out_dir, cfg, seed, args);
  ClassifierConfig ccfg;
  ccfg.epochs = cfg.get_i("evaluation.epochs");
  ccfg.batch_size = cfg.get_i("evaluation.batch_size");
  ccfg.lr = cfg.get_d("evaluation.lr");
  ccfg.split = {cfg.get_d("corpus.split_train"), cfg.get_d("corpus.split_val"),
                cfg.get_d("corpus.split_test")};
  AugmentationReport report = augmentation_check(real_manifests, generated_manifest, ccfg, seed);

  nlohmann::json j;
  j["baseline"] = eval_report_json(report.baseline);
  j["augmented"] = eval_report_json(report.augmented);
  j["difference"] = report.difference;
  std::ofstream(fs::path(out_dir) / "augmentation_report.json") << j.dump(2) << "\n";
  write_series_csv({{"baseline", report.baseline.val_accuracy_per_epoch},
                    {"augmented", report.augmented.val_accuracy_per_epoch}},
                   (fs::path(out_dir) / "augmentation_curve.csv").string());
  write_line_chart_svg({{"baseline", report.baseline.val_accuracy_per_epoch},
                        {"augmented", report.augmented.val_accuracy_per_epoch}},
                       "augmentation check", (fs::path(out_dir) / "augmentation_curve.svg").string());
  std::cout << "augment-check: baseline " << report.baseline.accuracy << ", augmented "
            << report.augmented.accuracy << ", difference " << report.difference << "\n";
  return 0;
}

// --- entry point ---

inline int run(std::vector<std::string> args) {
  CLI::App app{"gantron: emotion-conditioned text-to-mel adversarial training and evaluation"};
  app.require_subcommand(1);

  std::string config_file;
  std::vector<std::string> sets;
  std::optional<u64> seed_flag;
  app.add_option("--config", config_file, "key = value configuration file")
      ->capture_default_str();
  app.add_option("--set", sets, "override a config key (key=value, repeatable)");
  app.add_option("--seed", seed_flag, "global seed (falls back to env GANTRON_SEED, then 1234)");

  // preprocess
  auto* pre = app.add_subcommand("preprocess", "compute mel containers and an encoded manifest");
  std::string pre_format = "lj", pre_manifest, pre_audio_dir, pre_out;
  pre->add_option("--format", pre_format, "manifest format: lj|vesus")
      ->check(CLI::IsMember({"lj", "vesus"}))
      ->capture_default_str();
  pre->add_option("--manifest", pre_manifest, "input manifest path")->required();
  pre->add_option("--audio-dir", pre_audio_dir,
                  "wav directory (default: <manifest dir>/wavs; lj format only)");
  pre->add_option("--out-dir", pre_out, "output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "adversarial training");
  std::string train_model = "labelled", train_lj, train_vesus, train_out, train_resume;
  std::optional<i64> train_max_steps;
  std::string train_disc;
  train->add_option("--model-type", train_model,
                    "variant: baseline|expressive|labelled|complete")
      ->check(CLI::IsMember({"baseline", "expressive", "labelled", "complete"}))
      ->capture_default_str();
  train->add_option("--lj", train_lj, "preprocessed LJ-style manifest (jsonl)");
  train->add_option("--vesus", train_vesus, "preprocessed VESUS-style manifest (jsonl)");
  train->add_option("--out-dir", train_out, "run directory")->required();
  train->add_option("--resume", train_resume, "checkpoint to resume from");
  train->add_option("--max-steps", train_max_steps, "override trainer.max_steps");
  train->add_option("--disc", train_disc, "override discriminator.kind (linear|convolutional)");

  // synthesize
  auto* synth = app.add_subcommand("synthesize", "text + style token to mel container");
  std::string sy_ckpt, sy_text, sy_out, sy_emotions;
  i64 sy_speaker = 0;
  u64 sy_noise_seed = 0;
  i64 sy_max_steps = -1;
  double sy_gate = -1.0;
  synth->add_option("--checkpoint", sy_ckpt, "trained checkpoint")->required();
  synth->add_option("--text", sy_text, "input text")->required();
  synth->add_option("--out", sy_out, "output .mels path")->required();
  synth->add_option("--emotions", sy_emotions,
                    "anger,fear,happiness,sadness,neutral intensities in [0,1]");
  synth->add_option("--speaker", sy_speaker, "speaker index")->capture_default_str();
  synth->add_option("--noise-seed", sy_noise_seed, "seed for the noise block")
      ->capture_default_str();
  synth->add_option("--max-steps", sy_max_steps, "decoder step cap (-1 = model default)")
      ->capture_default_str();
  synth->add_option("--gate-threshold", sy_gate, "stop threshold (-1 = model default)")
      ->capture_default_str();

  // eval-groups
  auto* eval = app.add_subcommand("eval-groups", "six-group generation + separability report");
  std::string ev_ckpt, ev_mode = "labels", ev_texts, ev_out;
  i64 ev_n_files = 100, ev_speaker = 0;
  eval->add_option("--checkpoint", ev_ckpt, "trained checkpoint")->required();
  eval->add_option("--mode", ev_mode,
                   "labels|noise|control|ablation_fixed_label|ablation_fixed_noise")
      ->capture_default_str();
  eval->add_option("--n-files", ev_n_files, "files generated per group")->capture_default_str();
  eval->add_option("--texts", ev_texts, "file with one utterance text per line")->required();
  eval->add_option("--out-dir", ev_out, "output directory")->required();
  eval->add_option("--speaker", ev_speaker, "speaker index for generation")
      ->capture_default_str();

  // augment-check
  auto* aug = app.add_subcommand("augment-check", "real vs real+generated classifier comparison");
  std::vector<std::string> ag_real;
  std::string ag_generated, ag_out;
  aug->add_option("--real", ag_real, "real manifest (jsonl; repeatable)")->required();
  aug->add_option("--generated", ag_generated, "group manifest of generated files")->required();
  aug->add_option("--out-dir", ag_out, "output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());  // CLI11 convention
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage problems exit 1
  }

  try {
    RunConfig cfg(config_registry());
    apply_overrides(cfg, config_file, sets);
    const u64 seed = resolve_seed(seed_flag);

    if (*pre) return cmd_preprocess(pre_format, pre_manifest, pre_audio_dir, pre_out, cfg, seed,
                                    args);
    if (*train) {
      if (train_max_steps) cfg.set("trainer.max_steps", std::to_string(*train_max_steps));
      if (!train_disc.empty()) cfg.set("discriminator.kind", train_disc);
      return cmd_train(train_model, train_lj, train_vesus, train_out, train_resume, cfg, seed,
                       args);
    }
    if (*synth) return cmd_synthesize(sy_ckpt, sy_text, sy_out, sy_emotions, sy_speaker,
                                      sy_noise_seed, seed, sy_max_steps, sy_gate);
    if (*eval) return cmd_eval_groups(ev_ckpt, ev_mode, ev_n_files, ev_texts, ev_out, ev_speaker,
                                      cfg, seed, args);
    if (*aug) return cmd_augment_check(ag_real, ag_generated, ag_out, cfg, seed, args);
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace gantron::cli
