// gantron/groups.hpp

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
#include <optional>
#include <string>
#include <vector>

#include "gantron/corpus.hpp"

namespace gantron {

// Six style-token group definitions for the separability evaluation. A spec
// freezes whatever is fixed for its group at build time; per-file randomness
// is drawn at generation time.

enum class GroupMode {
  fixed_noise,              // one random noise token shared by the group
  strong_label,             // one emotion at a fixed intensity, others zero
  random_label,             // one fixed random label vector
  fixed_label_random_noise, // fixed label block, fresh noise per file
  fixed_noise_random_label, // fixed noise block, fresh labels per file
  per_file_random_noise,    // fresh noise per file (control)
};

inline const char* to_string(GroupMode m) {
  switch (m) {
    case GroupMode::fixed_noise: return "fixed_noise";
    case GroupMode::strong_label: return "strong_label";
    case GroupMode::random_label: return "random_label";
    case GroupMode::fixed_label_random_noise: return "fixed_label_random_noise";
    case GroupMode::fixed_noise_random_label: return "fixed_noise_random_label";
    case GroupMode::per_file_random_noise: return "per_file_random_noise";
  }
  return "?";
}

struct GroupSpec {
  i64 group_id = 0;
  GroupMode mode = GroupMode::per_file_random_noise;
  i64 emotion_index = -1;  // strong_label only
  std::optional<std::array<double, 5>> fixed_labels;
  std::optional<std::vector<double>> fixed_noise;
  i64 noise_dim = 0;

  bool has_label_block() const {
    return mode == GroupMode::strong_label || mode == GroupMode::random_label ||
           mode == GroupMode::fixed_label_random_noise ||
           mode == GroupMode::fixed_noise_random_label;
  }

  bool has_noise_block() const {
    return mode == GroupMode::fixed_noise || mode == GroupMode::fixed_label_random_noise ||
           mode == GroupMode::fixed_noise_random_label ||
           mode == GroupMode::per_file_random_noise;
  }
};

enum class GroupTokenMode {
  labels,                // five strong emotions + one random-label group
  noise,                 // six fixed random noise tokens
  control,               // per-file random noise in every group
  ablation_fixed_label,  // fixed labels, random noise per file
  ablation_fixed_noise,  // fixed noise, random labels per file
};

inline const char* to_string(GroupTokenMode m) {
  switch (m) {
    case GroupTokenMode::labels: return "labels";
    case GroupTokenMode::noise: return "noise";
    case GroupTokenMode::control: return "control";
    case GroupTokenMode::ablation_fixed_label: return "ablation_fixed_label";
    case GroupTokenMode::ablation_fixed_noise: return "ablation_fixed_noise";
  }
  return "?";
}

inline GroupTokenMode group_token_mode_from_string(const std::string& s) {
  if (s == "labels") return GroupTokenMode::labels;
  if (s == "noise") return GroupTokenMode::noise;
  if (s == "control") return GroupTokenMode::control;
  if (s == "ablation_fixed_label" || s == "fixed-label") return GroupTokenMode::ablation_fixed_label;
  if (s == "ablation_fixed_noise" || s == "fixed-noise") return GroupTokenMode::ablation_fixed_noise;
  throw Error("unknown group token mode: " + s);
}

inline std::vector<GroupSpec> build_group_specs(GroupTokenMode mode,
                                                std::pair<double, double> intensity_range,
                                                i64 noise_dim, Rng& rng) {
  require(intensity_range.first >= 0.0 && intensity_range.second <= 1.0 &&
              intensity_range.first <= intensity_range.second,
          "build_group_specs: intensity range must lie inside [0,1]");
  std::vector<GroupSpec> specs(6);
  for (i64 g = 0; g < 6; ++g) specs[size_t(g)].group_id = g;

  auto strong = [&](GroupSpec& spec, i64 emotion) {
    spec.emotion_index = emotion;
    std::array<double, 5> labels{0, 0, 0, 0, 0};
    labels[size_t(emotion)] = rng.uniform(intensity_range.first, intensity_range.second);
    spec.fixed_labels = labels;
  };
  auto random_labels = [&](GroupSpec& spec) {
    std::array<double, 5> labels{};
    for (auto& v : labels) v = rng.uniform();
    spec.fixed_labels = labels;
  };
  auto fixed_noise = [&](GroupSpec& spec) {
    require(noise_dim > 0, "build_group_specs: noise mode needs noise_dim > 0");
    std::vector<double> noise(static_cast<size_t>(noise_dim));
    for (auto& v : noise) v = rng.uniform();
    spec.fixed_noise = std::move(noise);
    spec.noise_dim = noise_dim;
  };

  switch (mode) {
    case GroupTokenMode::labels:
      for (i64 g = 0; g < 5; ++g) {
        specs[size_t(g)].mode = GroupMode::strong_label;
        strong(specs[size_t(g)], g);
      }
      specs[5].mode = GroupMode::random_label;
      random_labels(specs[5]);
      break;
    case GroupTokenMode::noise:
      for (auto& spec : specs) {
        spec.mode = GroupMode::fixed_noise;
        fixed_noise(spec);
      }
      break;
    case GroupTokenMode::control:
      require(noise_dim > 0, "build_group_specs: control mode needs noise_dim > 0");
      for (auto& spec : specs) {
        spec.mode = GroupMode::per_file_random_noise;
        spec.noise_dim = noise_dim;
      }
      break;
    case GroupTokenMode::ablation_fixed_label:
      require(noise_dim > 0, "build_group_specs: ablation needs noise_dim > 0");
      for (i64 g = 0; g < 5; ++g) {
        specs[size_t(g)].mode = GroupMode::fixed_label_random_noise;
        strong(specs[size_t(g)], g);
        specs[size_t(g)].noise_dim = noise_dim;
      }
      specs[5].mode = GroupMode::fixed_label_random_noise;
      random_labels(specs[5]);
      specs[5].noise_dim = noise_dim;
      break;
    case GroupTokenMode::ablation_fixed_noise:
      require(noise_dim > 0, "build_group_specs: ablation needs noise_dim > 0");
      for (auto& spec : specs) {
        spec.mode = GroupMode::fixed_noise_random_label;
        fixed_noise(spec);
      }
      break;
  }
  return specs;
}

// Token layout expected by the model the groups are generated with.
struct TokenLayout {
  StyleMode mode = StyleMode::labels_only;
  bool has_speaker = false;
  double speaker_value = 0.0;
  i64 noise_dim = 0;
};

// Draws one file's style token from a group spec. Fixed blocks come from the
// spec; per-file blocks come from rng.
inline StyleToken style_token_for_file(const GroupSpec& spec, const TokenLayout& layout,
                                       Rng& rng) {
  StyleToken tok;
  tok.mode = layout.mode;
  tok.has_speaker = layout.has_speaker;
  if (layout.has_speaker) {
    require(layout.speaker_value >= 0.0 && layout.speaker_value <= 1.0,
            "style_token_for_file: speaker value outside [0,1]");
    tok.values.push_back(layout.speaker_value);
  }
  if (layout.mode != StyleMode::noise_only) {
    require(spec.has_label_block(),
            "style_token_for_file: model expects labels but group has none");
    if (spec.fixed_labels) {
      for (double v : *spec.fixed_labels) tok.values.push_back(v);
    } else {
      for (i64 e = 0; e < kNumEmotions; ++e) tok.values.push_back(rng.uniform());
    }
  }
  if (layout.mode != StyleMode::labels_only) {
    require(layout.noise_dim > 0, "style_token_for_file: layout needs noise_dim > 0");
    require(spec.has_noise_block(),
            "style_token_for_file: model expects noise but group has none");
    if (spec.fixed_noise) {
      require(i64(spec.fixed_noise->size()) == layout.noise_dim,
              "style_token_for_file: noise dim mismatch");
      for (double v : *spec.fixed_noise) tok.values.push_back(v);
    } else {
      for (i64 i = 0; i < layout.noise_dim; ++i) tok.values.push_back(rng.uniform());
    }
  }
  return tok;
}

}  // namespace gantron
