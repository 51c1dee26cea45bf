// gantron/corpus.hpp

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

#include <array>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "gantron/common.hpp"
#include "gantron/mel.hpp"
#include "gantron/rng.hpp"

namespace gantron {

// Canonical emotion order used by style tokens, manifests and evaluators.
// "disgust" appears in some corpora but is not part of the supported set and
// is dropped at ingestion.
constexpr std::array<const char*, 5> kEmotionNames = {"anger", "fear", "happiness", "sadness",
                                                      "neutral"};
constexpr i64 kNumEmotions = 5;

struct UtteranceRecord {
  std::string id;
  std::string text;
  std::string mel_path;  // may be empty before preprocessing
  i64 speaker_id = 0;
  std::optional<std::array<double, 5>> emotion_labels;
};

enum class ManifestFormat { lj, vesus };

// --- text encoding ---

struct Charset {
  std::vector<std::string> symbols;  // index 0 = pad, index 1 = unknown

  i64 size() const { return i64(symbols.size()); }

  i64 find(const std::string& sym) const {
    for (size_t i = 0; i < symbols.size(); ++i)
      if (symbols[i] == sym) return i64(i);
    return -1;
  }

  static Charset basic_latin() {
    Charset cs;
    cs.symbols = {"<pad>", "<unk>", " "};
    for (char c = 'a'; c <= 'z'; ++c) cs.symbols.emplace_back(1, c);
    for (char c = '0'; c <= '9'; ++c) cs.symbols.emplace_back(1, c);
    for (char c : std::string(".,!?'\"-:;()")) cs.symbols.emplace_back(1, c);
    return cs;
  }

  // One symbol per line; line 0 pad, line 1 unknown.
  static Charset load(const std::string& path) {
    std::ifstream is(path);
    require(bool(is), "Charset::load: cannot open " + path);
    Charset cs;
    std::string line;
    while (std::getline(is, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      cs.symbols.push_back(line);
    }
    require(cs.symbols.size() >= 2, "Charset::load: need pad and unknown symbols");
    return cs;
  }
};

namespace detail {

// Decodes the next UTF-8 code point starting at i; returns its byte length.
inline size_t utf8_advance(const std::string& s, size_t i) {
  const unsigned char c = static_cast<unsigned char>(s[i]);
  size_t len = 1;
  if ((c & 0x80) == 0x00) len = 1;
  else if ((c & 0xE0) == 0xC0) len = 2;
  else if ((c & 0xF0) == 0xE0) len = 3;
  else if ((c & 0xF8) == 0xF0) len = 4;
  return std::min(len, s.size() - i);
}

inline std::string normalize_text(const std::string& text) {
  std::string out;
  bool in_space = true;  // leading whitespace trimmed
  for (char ch : text) {
    char c = ch;
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
    if (c >= 'A' && c <= 'Z') c = char(c - 'A' + 'a');
    if (c == ' ') {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(c);
      in_space = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

}  // namespace detail

struct EncodedText {
  std::vector<i64> ids;
  i64 unknown_count = 0;
};

// Lowercases, collapses whitespace, then maps one id per UTF-8 code point.
// Unknown symbols map to the unknown id and are counted.
inline EncodedText encode_text(const std::string& text, const Charset& charset) {
  require(charset.size() >= 2, "encode_text: charset must contain pad and unknown");
  const std::string norm = detail::normalize_text(text);
  require(!norm.empty(), "encode_text: text empty after normalization");
  EncodedText out;
  size_t i = 0;
  while (i < norm.size()) {
    const size_t len = detail::utf8_advance(norm, i);
    const std::string sym = norm.substr(i, len);
    i += len;
    i64 id = charset.find(sym);
    if (id < 0) {
      id = 1;
      ++out.unknown_count;
    }
    out.ids.push_back(id);
  }
  return out;
}

// --- manifest parsing ---
// LJ style: one `id|raw text` or `id|raw text|normalized text` per line.
// VESUS style: one JSON object per line with id, text, speaker, mel_path and
// emotions{name: intensity}.

inline std::vector<UtteranceRecord> parse_manifest(const std::string& path,
                                                   ManifestFormat format,
                                                   std::ostream* diag = nullptr) {
  std::ifstream is(path);
  require(bool(is), "parse_manifest: cannot open " + path);
  std::ostream& warn = diag ? *diag : std::cerr;

  std::vector<UtteranceRecord> records;
  std::set<std::string> seen;
  std::string line;
  i64 line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    UtteranceRecord rec;
    if (format == ManifestFormat::lj) {
      const size_t p1 = line.find('|');
      require(p1 != std::string::npos,
              "parse_manifest: line " + std::to_string(line_no) + ": missing '|'");
      rec.id = line.substr(0, p1);
      const size_t p2 = line.find('|', p1 + 1);
      rec.text = p2 == std::string::npos ? line.substr(p1 + 1)
                                         : line.substr(p2 + 1);  // normalized field preferred
      rec.speaker_id = 0;
      rec.emotion_labels = std::array<double, 5>{0, 0, 0, 0, 0};  // unlabelled corpus
    } else {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw Error("parse_manifest: line " + std::to_string(line_no) + ": " + e.what());
      }
      require(j.contains("id") && j.contains("text"),
              "parse_manifest: line " + std::to_string(line_no) + ": missing id/text");
      rec.id = j["id"].get<std::string>();
      rec.text = j["text"].get<std::string>();
      rec.speaker_id = j.value("speaker", 0);
      rec.mel_path = j.value("mel_path", std::string());
      if (j.contains("emotions")) {
        std::array<double, 5> labels{0, 0, 0, 0, 0};
        for (const auto& [name, value] : j["emotions"].items()) {
          i64 idx = -1;
          for (i64 e = 0; e < kNumEmotions; ++e)
            if (name == kEmotionNames[size_t(e)]) idx = e;
          if (idx < 0) {
            warn << "parse_manifest: line " << line_no << ": dropping unsupported emotion '"
                 << name << "'\n";
            continue;
          }
          double v;
          if (value.is_array()) {  // per-annotator intensities; take the mean
            require(!value.empty(), "parse_manifest: line " + std::to_string(line_no) +
                                        ": empty annotator list");
            double s = 0.0;
            for (const auto& x : value) s += x.get<double>();
            v = s / double(value.size());
          } else {
            v = value.get<double>();
          }
          require(v >= 0.0 && v <= 1.0, "parse_manifest: line " + std::to_string(line_no) +
                                            ": intensity outside [0,1]");
          labels[size_t(idx)] = v;
        }
        rec.emotion_labels = labels;
      }
    }
    require(!rec.id.empty(),
            "parse_manifest: line " + std::to_string(line_no) + ": empty id");
    require(!detail::normalize_text(rec.text).empty(),
            "parse_manifest: line " + std::to_string(line_no) + ": empty text");
    require(seen.insert(rec.id).second,
            "parse_manifest: line " + std::to_string(line_no) + ": duplicate id " + rec.id);
    records.push_back(std::move(rec));
  }
  if (records.empty()) warn << "parse_manifest: " << path << " produced no records\n";
  return records;
}

inline void write_manifest_jsonl(const std::vector<UtteranceRecord>& records,
                                 const std::string& path) {
  std::ofstream os(path);
  require(bool(os), "write_manifest_jsonl: cannot open " + path);
  for (const auto& rec : records) {
    nlohmann::json j;
    j["id"] = rec.id;
    j["text"] = rec.text;
    j["speaker"] = rec.speaker_id;
    j["mel_path"] = rec.mel_path;
    if (rec.emotion_labels) {
      nlohmann::json em;
      for (i64 e = 0; e < kNumEmotions; ++e)
        em[kEmotionNames[size_t(e)]] = (*rec.emotion_labels)[size_t(e)];
      j["emotions"] = em;
    }
    os << j.dump() << "\n";
  }
}

// --- dataset split ---

struct DatasetSplits {
  std::vector<UtteranceRecord> train, val, test;
};

// Deterministic shuffled partition. Val and test sizes are the rounded
// ratios; any rounding remainder lands in train.
inline DatasetSplits split_dataset(const std::vector<UtteranceRecord>& records,
                                   std::array<double, 3> ratios, u64 seed) {
  const double sum = ratios[0] + ratios[1] + ratios[2];
  require(std::abs(sum - 1.0) < 1e-9, "split_dataset: ratios must sum to 1");
  for (double r : ratios) require(r >= 0.0, "split_dataset: negative ratio");
  const i64 n = i64(records.size());
  require(n >= 3, "split_dataset: need at least 3 records");

  std::vector<i64> order(static_cast<size_t>(n));
  for (i64 i = 0; i < n; ++i) order[size_t(i)] = i;
  Rng rng(seed);
  for (i64 i = n - 1; i > 0; --i) std::swap(order[size_t(i)], order[size_t(rng.uniform_int(0, i))]);

  const i64 n_val = i64(std::llround(ratios[1] * double(n)));
  const i64 n_test = i64(std::llround(ratios[2] * double(n)));
  const i64 n_train = n - n_val - n_test;
  require(n_train >= 0, "split_dataset: rounding left no training data");

  DatasetSplits splits;
  for (i64 i = 0; i < n; ++i) {
    const UtteranceRecord& r = records[size_t(order[size_t(i)])];
    if (i < n_train) splits.train.push_back(r);
    else if (i < n_train + n_val) splits.val.push_back(r);
    else splits.test.push_back(r);
  }
  return splits;
}

// --- style tokens ---

enum class StyleMode { noise_only, labels_only, labels_plus_noise };

inline const char* to_string(StyleMode m) {
  switch (m) {
    case StyleMode::noise_only: return "noise_only";
    case StyleMode::labels_only: return "labels_only";
    case StyleMode::labels_plus_noise: return "labels_plus_noise";
  }
  return "?";
}

inline StyleMode style_mode_from_string(const std::string& s) {
  if (s == "noise_only") return StyleMode::noise_only;
  if (s == "labels_only") return StyleMode::labels_only;
  if (s == "labels_plus_noise") return StyleMode::labels_plus_noise;
  throw Error("unknown style mode: " + s);
}

// Conditioning vector: optional speaker value, then the emotion block, then
// the noise block, all in [0,1].
struct StyleToken {
  std::vector<double> values;
  StyleMode mode = StyleMode::labels_only;
  bool has_speaker = false;

  i64 size() const { return i64(values.size()); }

  i64 emotion_offset() const { return has_speaker ? 1 : 0; }

  // The emotion block, when the mode carries labels.
  std::array<double, 5> emotion_block() const {
    require(mode != StyleMode::noise_only, "StyleToken: no emotion block in noise_only mode");
    std::array<double, 5> out{};
    for (i64 e = 0; e < kNumEmotions; ++e) out[size_t(e)] = values[size_t(emotion_offset() + e)];
    return out;
  }
};

inline i64 style_token_length(StyleMode mode, bool has_speaker, i64 noise_dim) {
  i64 len = has_speaker ? 1 : 0;
  if (mode != StyleMode::noise_only) len += kNumEmotions;
  if (mode != StyleMode::labels_only) len += noise_dim;
  return len;
}

inline StyleToken build_style_token(StyleMode mode,
                                    std::optional<std::array<double, 5>> labels,
                                    std::optional<std::pair<i64, i64>> speaker,
                                    i64 noise_dim, Rng& rng) {
  require(noise_dim >= 0, "build_style_token: negative noise_dim");
  if (mode == StyleMode::noise_only) {
    require(!labels.has_value(), "build_style_token: noise_only forbids labels");
    require(noise_dim > 0, "build_style_token: noise_only needs noise_dim > 0");
  } else if (mode == StyleMode::labels_only) {
    require(noise_dim == 0, "build_style_token: labels_only forbids noise");
    require(labels.has_value(), "build_style_token: labels_only needs labels");
  } else {
    require(labels.has_value() && noise_dim > 0,
            "build_style_token: labels_plus_noise needs labels and noise");
  }

  StyleToken tok;
  tok.mode = mode;
  tok.has_speaker = speaker.has_value();
  if (speaker) {
    const auto [index, n_speakers] = *speaker;
    require(n_speakers >= 1 && index >= 0 && index < n_speakers,
            "build_style_token: speaker index out of range");
    tok.values.push_back(double(index) / double(std::max<i64>(1, n_speakers - 1)));
  }
  if (labels) {
    for (double v : *labels) {
      require(v >= 0.0 && v <= 1.0, "build_style_token: emotion label outside [0,1]");
      tok.values.push_back(v);
    }
  }
  for (i64 i = 0; i < noise_dim; ++i) tok.values.push_back(rng.uniform());
  return tok;
}

// --- batch collation ---

struct PaddedBatch {
  std::vector<std::vector<i64>> symbols;  // [B][Lmax], pad id 0
  std::vector<i64> text_lengths;
  Tensor mels;         // [B, n_mels, Tmax]
  std::vector<i64> mel_lengths;
  Tensor gate_target;  // [B, Tmax]; 1.0 at the final valid frame and beyond
  Tensor styles;       // [B, token_len]

  i64 batch_size() const { return i64(symbols.size()); }
  i64 max_text_len() const { return symbols.empty() ? 0 : i64(symbols[0].size()); }
  i64 max_frames() const { return mels.rank() == 3 ? mels.dim(2) : 0; }
  i64 n_mels() const { return mels.rank() == 3 ? mels.dim(1) : 0; }

  // 0/1 mask of shape [B, n_mels, Tmax] marking valid mel cells.
  Tensor mel_mask() const {
    Tensor mask({batch_size(), n_mels(), max_frames()});
    for (i64 b = 0; b < batch_size(); ++b)
      for (i64 m = 0; m < n_mels(); ++m)
        for (i64 t = 0; t < mel_lengths[size_t(b)]; ++t) mask(b, m, t) = 1.0;
    return mask;
  }

  // 0/1 mask of shape [B, Tmax] marking valid frames.
  Tensor frame_mask() const {
    Tensor mask({batch_size(), max_frames()});
    for (i64 b = 0; b < batch_size(); ++b)
      for (i64 t = 0; t < mel_lengths[size_t(b)]; ++t) mask(b, t) = 1.0;
    return mask;
  }
};

struct CollateItem {
  std::vector<i64> symbols;
  MelSpectrogram mel;
  StyleToken style;
};

// Sorts by descending text length, pads symbols with id 0 and mels with
// zero frames, and derives gate targets from the mel lengths.
inline PaddedBatch collate_batch(std::vector<CollateItem> items) {
  require(!items.empty(), "collate_batch: empty batch");
  const i64 n_mels = items[0].mel.n_mels();
  const i64 token_len = items[0].style.size();
  for (const auto& it : items) {
    require(!it.symbols.empty(), "collate_batch: empty symbol sequence");
    require(it.mel.n_mels() == n_mels, "collate_batch: inconsistent n_mels");
    require(it.mel.n_frames() >= 1, "collate_batch: empty mel");
    require(it.style.size() == token_len, "collate_batch: inconsistent style token length");
  }
  std::stable_sort(items.begin(), items.end(), [](const CollateItem& a, const CollateItem& b) {
    return a.symbols.size() > b.symbols.size();
  });

  const i64 B = i64(items.size());
  i64 max_len = 0, max_frames = 0;
  for (const auto& it : items) {
    max_len = std::max(max_len, i64(it.symbols.size()));
    max_frames = std::max(max_frames, it.mel.n_frames());
  }

  PaddedBatch batch;
  batch.mels = Tensor({B, n_mels, max_frames});
  batch.gate_target = Tensor({B, max_frames});
  batch.styles = Tensor({B, token_len});
  for (i64 b = 0; b < B; ++b) {
    const CollateItem& it = items[size_t(b)];
    std::vector<i64> padded = it.symbols;
    padded.resize(size_t(max_len), 0);
    batch.symbols.push_back(std::move(padded));
    batch.text_lengths.push_back(i64(it.symbols.size()));
    const i64 frames = it.mel.n_frames();
    batch.mel_lengths.push_back(frames);
    for (i64 m = 0; m < n_mels; ++m)
      for (i64 t = 0; t < frames; ++t) batch.mels(b, m, t) = it.mel.data(m, t);
    for (i64 t = frames - 1; t < max_frames; ++t) batch.gate_target(b, t) = 1.0;
    for (i64 k = 0; k < token_len; ++k) batch.styles(b, k) = it.style.values[size_t(k)];
  }
  return batch;
}

}  // namespace gantron
