// gantron/evaluation.hpp

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

#include <algorithm>
#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gantron/inference.hpp"
#include "gantron/optimizer.hpp"
#include "gantron/plot.hpp"

namespace gantron {

// Quantitative evaluation: a small window classifier tries to separate
// generated files back into their style-token groups, and the augmentation
// check compares an emotion classifier trained on real data against one
// trained on real + generated data. Classifier features come from the mels
// alone; style tokens never reach the feature path.

constexpr i64 kClassifierWindow = 80;

// Uniform random 80-frame slice; mels shorter than the window repeat their
// final frame. Returns [n_mels, window].
inline Tensor sample_classifier_window(const MelSpectrogram& mel, Rng& rng) {
  require(mel.n_frames() >= 1, "sample_classifier_window: empty mel");
  const i64 n = mel.n_frames();
  const i64 start = n > kClassifierWindow ? rng.uniform_int(0, n - kClassifierWindow) : 0;
  Tensor out({mel.n_mels(), kClassifierWindow});
  for (i64 f = 0; f < kClassifierWindow; ++f) {
    const i64 t = std::min(start + f, n - 1);
    for (i64 m = 0; m < mel.n_mels(); ++m) out(m, f) = mel.data(m, t);
  }
  return out;
}

struct ClassifierConfig {
  i64 n_mels = 80;
  i64 classes = 6;
  std::array<i64, 3> channels{8, 16, 16};
  i64 kernel = 3;
  i64 epochs = 12;
  i64 batch_size = 16;
  double lr = 1e-3;
  std::array<double, 3> split{0.85, 0.05, 0.10};

  void validate() const {
    require(n_mels >= 1 && classes >= 2, "ClassifierConfig: dims");
    require(kernel % 2 == 1, "ClassifierConfig: kernel must be odd");
    require(epochs >= 1 && batch_size >= 1 && lr > 0.0, "ClassifierConfig: training params");
  }
};

// 2-D conv net over [1, window, n_mels] slices: three conv+relu+pool blocks
// and a pooled linear head.
class WindowClassifier {
 public:
  WindowClassifier() = default;

  WindowClassifier(ClassifierConfig cfg, u64 seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng(seed);
    conv1_.init(1, cfg_.channels[0], cfg_.kernel, cfg_.kernel, rng);
    conv2_.init(cfg_.channels[0], cfg_.channels[1], cfg_.kernel, cfg_.kernel, rng);
    conv3_.init(cfg_.channels[1], cfg_.channels[2], cfg_.kernel, cfg_.kernel, rng);
    head_.init(cfg_.channels[2], cfg_.classes, rng);
  }

  const ClassifierConfig& config() const { return cfg_; }

  // window [n_mels, 80] -> logits [1, classes]
  ad::Var logits(nn::Ctx& ctx, const Tensor& window) const {
    require(window.rank() == 2 && window.dim(0) == cfg_.n_mels &&
                window.dim(1) == kClassifierWindow,
            "WindowClassifier: bad window shape");
    ad::Tape& t = ctx.tape;
    Tensor x({1, kClassifierWindow, cfg_.n_mels});
    for (i64 f = 0; f < kClassifierWindow; ++f)
      for (i64 m = 0; m < cfg_.n_mels; ++m) x(0, f, m) = window(m, f);
    ad::Var v = t.constant(std::move(x));
    v = t.avg_pool2d(t.relu(conv1_.forward(ctx, v)), 2);
    v = t.avg_pool2d(t.relu(conv2_.forward(ctx, v)), 2);
    v = t.avg_pool2d(t.relu(conv3_.forward(ctx, v)), 2);
    return head_.forward(ctx, t.channel_mean(v));
  }

  i64 predict(const Tensor& window) const {
    ad::Tape tape;
    tape.set_recording(false);
    nn::Ctx ctx{tape};
    ctx.training = false;
    ctx.grad_enabled = false;
    const Tensor& l = logits(const_cast<nn::Ctx&>(ctx), window).val();
    i64 best = 0;
    for (i64 c = 1; c < cfg_.classes; ++c)
      if (l(0, c) > l(0, best)) best = c;
    return best;
  }

  void collect_params(std::vector<nn::ParamRef>& out) {
    conv1_.collect("clf.conv1", out);
    conv2_.collect("clf.conv2", out);
    conv3_.collect("clf.conv3", out);
    head_.collect("clf.head", out);
  }

 private:
  ClassifierConfig cfg_;
  nn::Conv2d conv1_, conv2_, conv3_;
  nn::Linear head_;
};

struct EvalReport {
  double accuracy = 0.0;
  std::vector<double> precision, recall;  // per class
  Tensor confusion;                       // [classes, classes], rows = true class
  i64 n_train = 0, n_test = 0;
  u64 seed = 0;
  std::vector<double> val_accuracy_per_epoch;
};

namespace detail {

struct LabeledMel {
  MelSpectrogram mel;
  i64 label = 0;
};

struct SplitIdx {
  std::vector<i64> train, val, test;
};

// Stratified split: each class partitioned by the ratios, remainder to train.
inline SplitIdx stratified_split(const std::vector<LabeledMel>& data, i64 classes,
                                 std::array<double, 3> ratios, Rng& rng) {
  SplitIdx out;
  for (i64 c = 0; c < classes; ++c) {
    std::vector<i64> idx;
    for (i64 i = 0; i < i64(data.size()); ++i)
      if (data[size_t(i)].label == c) idx.push_back(i);
    for (i64 i = i64(idx.size()) - 1; i > 0; --i)
      std::swap(idx[size_t(i)], idx[size_t(rng.uniform_int(0, i))]);
    const i64 n = i64(idx.size());
    const i64 n_val = i64(std::llround(ratios[1] * double(n)));
    const i64 n_test = i64(std::llround(ratios[2] * double(n)));
    const i64 n_train = n - n_val - n_test;
    for (i64 i = 0; i < n; ++i) {
      if (i < n_train) out.train.push_back(idx[size_t(i)]);
      else if (i < n_train + n_val) out.val.push_back(idx[size_t(i)]);
      else out.test.push_back(idx[size_t(i)]);
    }
  }
  return out;
}

struct Standardizer {
  double mean = 0.0, stdev = 1.0;

  void fit(const std::vector<LabeledMel>& data, const std::vector<i64>& idx) {
    double s = 0.0, n = 0.0;
    for (i64 i : idx) {
      for (double v : data[size_t(i)].mel.data.data) s += v;
      n += double(data[size_t(i)].mel.data.numel());
    }
    mean = n > 0 ? s / n : 0.0;
    double ss = 0.0;
    for (i64 i : idx)
      for (double v : data[size_t(i)].mel.data.data) ss += (v - mean) * (v - mean);
    stdev = n > 1 ? std::sqrt(ss / n) : 1.0;
    if (stdev < 1e-8) stdev = 1.0;
  }

  void apply(Tensor& t) const {
    for (auto& v : t.data) v = (v - mean) / stdev;
  }
};

// Shared train/evaluate loop used by both evaluation protocols. Evaluation
// draws a fresh random window per prediction.
inline EvalReport train_and_evaluate(const std::vector<LabeledMel>& data,
                                     const ClassifierConfig& cfg, u64 seed,
                                     const std::vector<i64>* extra_train = nullptr,
                                     const std::vector<LabeledMel>* extra_data = nullptr) {
  Rng rng(seed ^ 0x5eedc1a5u);
  Rng split_rng(seed);
  SplitIdx split = stratified_split(data, cfg.classes, cfg.split, split_rng);
  require(!split.train.empty() && !split.test.empty(),
          "train_and_evaluate: split produced empty train or test set");

  Standardizer scaler;
  scaler.fit(data, split.train);

  WindowClassifier clf(cfg, rng.next_u64());
  std::vector<nn::ParamRef> params;
  clf.collect_params(params);
  Adam opt(cfg.lr);

  // training pool: (source, index); source 0 = data, 1 = extra_data
  std::vector<std::pair<int, i64>> pool;
  for (i64 i : split.train) pool.push_back({0, i});
  if (extra_train && extra_data)
    for (i64 i : *extra_train) pool.push_back({1, i});

  auto fetch = [&](std::pair<int, i64> p, Rng& r) {
    const LabeledMel& lm = p.first == 0 ? data[size_t(p.second)] : (*extra_data)[size_t(p.second)];
    Tensor w = sample_classifier_window(lm.mel, r);
    scaler.apply(w);
    return std::make_pair(std::move(w), lm.label);
  };

  EvalReport report;
  report.seed = seed;
  report.n_train = i64(pool.size());
  report.n_test = i64(split.test.size());

  for (i64 epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (i64 i = i64(pool.size()) - 1; i > 0; --i)
      std::swap(pool[size_t(i)], pool[size_t(rng.uniform_int(0, i))]);
    for (size_t ofs = 0; ofs < pool.size(); ofs += size_t(cfg.batch_size)) {
      const size_t end = std::min(pool.size(), ofs + size_t(cfg.batch_size));
      ad::Tape tape;
      nn::Ctx ctx{tape};
      ctx.training = true;
      ctx.rng = &rng;
      std::vector<ad::Var> rows;
      std::vector<i64> labels;
      for (size_t k = ofs; k < end; ++k) {
        auto [w, label] = fetch(pool[k], rng);
        rows.push_back(clf.logits(ctx, w));
        labels.push_back(label);
      }
      ad::Var loss = tape.softmax_xent(tape.concat_rows(rows), labels);
      tape.backward(loss);
      opt.step(params, ctx);
    }
    // validation accuracy per epoch (falls back to test when val is empty)
    const std::vector<i64>& vset = split.val.empty() ? split.test : split.val;
    i64 correct = 0;
    for (i64 i : vset) {
      Tensor w = sample_classifier_window(data[size_t(i)].mel, rng);
      scaler.apply(w);
      if (clf.predict(w) == data[size_t(i)].label) ++correct;
    }
    report.val_accuracy_per_epoch.push_back(double(correct) / double(vset.size()));
  }

  report.confusion = Tensor({cfg.classes, cfg.classes});
  i64 correct = 0;
  for (i64 i : split.test) {
    Tensor w = sample_classifier_window(data[size_t(i)].mel, rng);
    scaler.apply(w);
    const i64 pred = clf.predict(w);
    report.confusion(data[size_t(i)].label, pred) += 1.0;
    if (pred == data[size_t(i)].label) ++correct;
  }
  report.accuracy = double(correct) / double(split.test.size());
  report.precision.assign(size_t(cfg.classes), 0.0);
  report.recall.assign(size_t(cfg.classes), 0.0);
  for (i64 c = 0; c < cfg.classes; ++c) {
    double col = 0.0, row = 0.0;
    for (i64 k = 0; k < cfg.classes; ++k) {
      col += report.confusion(k, c);
      row += report.confusion(c, k);
    }
    report.precision[size_t(c)] = col > 0 ? report.confusion(c, c) / col : 0.0;
    report.recall[size_t(c)] = row > 0 ? report.confusion(c, c) / row : 0.0;
  }
  return report;
}

}  // namespace detail

// Trains the group classifier on generated files only and reports test
// separability. The manifest must cover all six groups; mel paths resolve
// relative to the manifest's directory.
inline EvalReport run_group_classification(const std::string& manifest_path,
                                           ClassifierConfig cfg, u64 seed) {
  namespace fs = std::filesystem;
  const std::vector<GroupFileEntry> entries = read_group_manifest(manifest_path);
  require(!entries.empty(), "run_group_classification: empty manifest");
  const fs::path base = fs::path(manifest_path).parent_path();

  std::array<bool, 6> present{};
  std::vector<detail::LabeledMel> data;
  for (const auto& e : entries) {
    require(e.group_id >= 0 && e.group_id < 6, "run_group_classification: bad group id");
    present[size_t(e.group_id)] = true;
    detail::LabeledMel lm;
    lm.mel = read_mel_file((base / e.mel_path).string());
    lm.label = e.group_id;
    data.push_back(std::move(lm));
  }
  for (i64 g = 0; g < 6; ++g)
    require(present[size_t(g)],
            "run_group_classification: group " + std::to_string(g) + " absent from manifest");

  cfg.classes = 6;
  cfg.n_mels = data[0].mel.n_mels();
  return detail::train_and_evaluate(data, cfg, seed);
}

struct AugmentationReport {
  EvalReport baseline;   // real data only
  EvalReport augmented;  // real + generated
  double difference = 0.0;  // augmented - baseline accuracy
};

// Two classifier runs over the shared five emotions, evaluated on the same
// held-out real test split. Real records without any usable emotion mass
// are discarded; generated files take the argmax of their token's emotion
// block as label.
inline AugmentationReport augmentation_check(const std::vector<std::string>& real_manifests,
                                             const std::string& generated_manifest,
                                             ClassifierConfig cfg, u64 seed) {
  namespace fs = std::filesystem;
  require(!real_manifests.empty(), "augmentation_check: no real manifests");

  std::vector<detail::LabeledMel> real;
  for (const std::string& mpath : real_manifests) {
    const fs::path base = fs::path(mpath).parent_path();
    i64 discarded = 0;
    for (const UtteranceRecord& rec : parse_manifest(mpath, ManifestFormat::vesus)) {
      require(rec.emotion_labels.has_value(),
              "augmentation_check: real record " + rec.id + " has no emotion labels");
      const auto& labels = *rec.emotion_labels;
      i64 best = 0;
      for (i64 e = 1; e < kNumEmotions; ++e)
        if (labels[size_t(e)] > labels[size_t(best)]) best = e;
      if (labels[size_t(best)] <= 0.0) {
        ++discarded;  // no mass on the shared emotions
        continue;
      }
      detail::LabeledMel lm;
      lm.mel = read_mel_file((base / rec.mel_path).string());
      lm.label = best;
      real.push_back(std::move(lm));
    }
    (void)discarded;
  }
  require(!real.empty(), "augmentation_check: no usable real records after emotion filtering");

  std::vector<detail::LabeledMel> generated;
  const fs::path gen_base = fs::path(generated_manifest).parent_path();
  for (const GroupFileEntry& e : read_group_manifest(generated_manifest)) {
    double mass = 0.0;
    for (double v : e.emotions) mass += v;
    require(mass > 0.0, "augmentation_check: generated entry " + e.id +
                            " carries no emotion block; labels mode required");
    i64 best = 0;
    for (i64 k = 1; k < kNumEmotions; ++k)
      if (e.emotions[size_t(k)] > e.emotions[size_t(best)]) best = k;
    detail::LabeledMel lm;
    lm.mel = read_mel_file((gen_base / e.mel_path).string());
    lm.label = best;
    generated.push_back(std::move(lm));
  }

  cfg.classes = kNumEmotions;
  cfg.n_mels = real[0].mel.n_mels();
  for (const auto& lm : generated)
    require(lm.mel.n_mels() == cfg.n_mels,
            "augmentation_check: generated mel bands differ from real data");

  AugmentationReport report;
  report.baseline = detail::train_and_evaluate(real, cfg, seed);
  std::vector<i64> extra_idx;
  for (i64 i = 0; i < i64(generated.size()); ++i) extra_idx.push_back(i);
  report.augmented = detail::train_and_evaluate(real, cfg, seed, &extra_idx, &generated);
  report.difference = report.augmented.accuracy - report.baseline.accuracy;
  return report;
}

// --- report serialization ---

inline nlohmann::json eval_report_json(const EvalReport& r) {
  nlohmann::json j;
  j["accuracy"] = r.accuracy;
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["n_train"] = r.n_train;
  j["n_test"] = r.n_test;
  j["seed"] = r.seed;
  j["val_accuracy_per_epoch"] = r.val_accuracy_per_epoch;
  std::vector<std::vector<double>> conf;
  for (i64 a = 0; a < r.confusion.dim(0); ++a) {
    std::vector<double> row;
    for (i64 b = 0; b < r.confusion.dim(1); ++b) row.push_back(r.confusion(a, b));
    conf.push_back(std::move(row));
  }
  j["confusion"] = conf;
  return j;
}

inline void write_confusion_csv(const EvalReport& r, const std::string& path) {
  std::ofstream os(path);
  require(bool(os), "write_confusion_csv: cannot open " + path);
  const i64 c = r.confusion.dim(0);
  os << "true\\pred";
  for (i64 b = 0; b < c; ++b) os << "," << b;
  os << "\n";
  for (i64 a = 0; a < c; ++a) {
    os << a;
    for (i64 b = 0; b < c; ++b) os << "," << r.confusion(a, b);
    os << "\n";
  }
}

}  // namespace gantron
