// gantron/mel.hpp

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
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gantron/common.hpp"
#include "gantron/tensor.hpp"

namespace gantron {

// Waveform -> log-mel extraction and the binary container every other module
// exchanges spectrograms in.

struct MelConfig {
  i64 sample_rate = 22050;
  i64 n_fft = 1024;
  i64 hop_length = 256;
  i64 win_length = 1024;
  i64 n_mels = 80;
  double fmin = 0.0;
  double fmax = 8000.0;
  double log_floor = 1e-5;  // clamp before the natural log

  void validate() const {
    require(n_mels > 0, "MelConfig: n_mels must be positive");
    require(sample_rate > 0 && n_fft > 0 && hop_length > 0 && win_length > 0,
            "MelConfig: sizes must be positive");
    require((n_fft & (n_fft - 1)) == 0, "MelConfig: n_fft must be a power of two");
    require(hop_length <= win_length && win_length <= n_fft,
            "MelConfig: need hop_length <= win_length <= n_fft");
    require(fmin >= 0.0 && fmin < fmax, "MelConfig: need 0 <= fmin < fmax");
    require(fmax <= double(sample_rate) / 2.0, "MelConfig: fmax beyond Nyquist");
  }
};

struct MelSpectrogram {
  Tensor data;  // [n_mels, n_frames]
  MelConfig config;

  i64 n_mels() const { return data.dim(0); }
  i64 n_frames() const { return data.dim(1); }
};

struct MelFilterbank {
  Tensor weights;  // [n_mels, n_fft/2 + 1]
};

// 2595 * log10(1 + f/700)
inline double hz_to_mel(double f) {
  require(f >= 0.0, "hz_to_mel: negative frequency");
  return 2595.0 * std::log10(1.0 + f / 700.0);
}

inline double mel_to_hz(double m) {
  require(m >= 0.0, "mel_to_hz: negative mel value");
  return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0);
}

// Triangular filters with mel-equally-spaced centers between fmin and fmax,
// evaluated at FFT bin centers k * sample_rate / n_fft.
inline MelFilterbank build_mel_filterbank(const MelConfig& cfg) {
  cfg.validate();
  const i64 n_bins = cfg.n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(cfg.fmin);
  const double mel_hi = hz_to_mel(cfg.fmax);
  std::vector<double> hz_pts(size_t(cfg.n_mels) + 2);
  for (i64 i = 0; i < cfg.n_mels + 2; ++i)
    hz_pts[size_t(i)] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * double(i) / double(cfg.n_mels + 1));

  MelFilterbank fb;
  fb.weights = Tensor({cfg.n_mels, n_bins});
  for (i64 m = 0; m < cfg.n_mels; ++m) {
    const double lo = hz_pts[size_t(m)];
    const double center = hz_pts[size_t(m) + 1];
    const double hi = hz_pts[size_t(m) + 2];
    bool any_positive = false;
    for (i64 k = 0; k < n_bins; ++k) {
      const double f = double(k) * double(cfg.sample_rate) / double(cfg.n_fft);
      double wgt = 0.0;
      if (f > lo && f < center) {
        wgt = (f - lo) / (center - lo);
      } else if (f == center) {
        wgt = 1.0;
      } else if (f > center && f < hi) {
        wgt = (hi - f) / (hi - center);
      }
      fb.weights(m, k) = wgt;
      any_positive = any_positive || wgt > 0.0;
    }
    require(any_positive, "build_mel_filterbank: band " + std::to_string(m) +
                              " covers no FFT bin; lower n_mels or raise n_fft");
  }
  return fb;
}

namespace detail {

// Iterative radix-2 complex FFT; n must be a power of two (enforced by
// MelConfig). Sizes here are small enough that a self-contained kernel beats
// carrying a library dependency for one call site.
inline void fft_radix2(std::vector<std::complex<double>>& a) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * M_PI / double(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

}  // namespace detail

// Log-compressed mel spectrogram of a waveform. Framing uses no implicit
// padding: n_frames = floor((len - win_length)/hop_length) + 1. Each frame is
// Hann-windowed, zero-padded to n_fft, and reduced to a power spectrum before
// the filterbank and the clamped natural log.
inline MelSpectrogram waveform_to_mel(const std::vector<double>& samples, const MelConfig& cfg) {
  cfg.validate();
  require(!samples.empty(), "waveform_to_mel: empty waveform");
  require(i64(samples.size()) >= cfg.win_length,
          "waveform_to_mel: waveform shorter than one window");
  const i64 n_frames = (i64(samples.size()) - cfg.win_length) / cfg.hop_length + 1;
  const i64 n_bins = cfg.n_fft / 2 + 1;
  const MelFilterbank fb = build_mel_filterbank(cfg);

  std::vector<double> window(static_cast<size_t>(cfg.win_length));
  for (i64 i = 0; i < cfg.win_length; ++i)
    window[size_t(i)] = 0.5 * (1.0 - std::cos(2.0 * M_PI * double(i) / double(cfg.win_length)));

  MelSpectrogram mel;
  mel.config = cfg;
  mel.data = Tensor({cfg.n_mels, n_frames});

  std::vector<std::complex<double>> buf(static_cast<size_t>(cfg.n_fft));
  std::vector<double> power(static_cast<size_t>(n_bins));
  for (i64 t = 0; t < n_frames; ++t) {
    const i64 start = t * cfg.hop_length;
    for (i64 i = 0; i < cfg.n_fft; ++i) {
      const double s =
          i < cfg.win_length ? samples[size_t(start + i)] * window[size_t(i)] : 0.0;
      buf[size_t(i)] = {s, 0.0};
    }
    detail::fft_radix2(buf);
    for (i64 k = 0; k < n_bins; ++k) power[size_t(k)] = std::norm(buf[size_t(k)]);
    for (i64 m = 0; m < cfg.n_mels; ++m) {
      double acc = 0.0;
      for (i64 k = 0; k < n_bins; ++k) acc += fb.weights(m, k) * power[size_t(k)];
      mel.data(m, t) = std::log(std::max(acc, cfg.log_floor));
    }
  }
  return mel;
}

// --- binary mel container ---
// header: magic "MELS", version u32, n_mels u32, n_frames u32,
// sample_rate u32, hop_length u32; payload: row-major f32 little-endian.

constexpr u32 kMelContainerVersion = 1;

inline void write_mel(const MelSpectrogram& mel, std::ostream& os) {
  os.write("MELS", 4);
  bin::write_u32(os, kMelContainerVersion);
  bin::write_u32(os, u32(mel.n_mels()));
  bin::write_u32(os, u32(mel.n_frames()));
  bin::write_u32(os, u32(mel.config.sample_rate));
  bin::write_u32(os, u32(mel.config.hop_length));
  for (double v : mel.data.data) bin::write_f32(os, float(v));
  require(bool(os), "write_mel: stream failure");
}

inline void write_mel_file(const MelSpectrogram& mel, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  require(bool(os), "write_mel_file: cannot open " + path);
  write_mel(mel, os);
}

inline MelSpectrogram read_mel(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  require(bool(is) && std::string(magic, 4) == "MELS", "read_mel: bad magic");
  const u32 version = bin::read_u32(is);
  require(version == kMelContainerVersion,
          "read_mel: unsupported container version " + std::to_string(version));
  const i64 n_mels = bin::read_u32(is);
  const i64 n_frames = bin::read_u32(is);
  MelSpectrogram mel;
  mel.config.sample_rate = bin::read_u32(is);
  mel.config.hop_length = bin::read_u32(is);
  mel.config.n_mels = n_mels;
  require(n_mels > 0 && n_frames > 0, "read_mel: empty container");
  mel.data = Tensor({n_mels, n_frames});
  for (auto& v : mel.data.data) v = double(bin::read_f32(is));
  require(bool(is), "read_mel: truncated payload");
  return mel;
}

inline MelSpectrogram read_mel_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(bool(is), "read_mel_file: cannot open " + path);
  return read_mel(is);
}

}  // namespace gantron
