// gantron/wav.hpp

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

#include <fstream>
#include <string>
#include <vector>

#include "gantron/common.hpp"

namespace gantron {

struct WavData {
  std::vector<double> samples;  // mono; multi-channel inputs averaged
  i64 sample_rate = 0;
};

// Minimal RIFF/WAVE reader: PCM16 and IEEE float32.
inline WavData read_wav(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(bool(is), "read_wav: cannot open " + path);
  char tag[4];
  is.read(tag, 4);
  require(bool(is) && std::string(tag, 4) == "RIFF", "read_wav: not a RIFF file");
  bin::read_u32(is);  // riff size
  is.read(tag, 4);
  require(bool(is) && std::string(tag, 4) == "WAVE", "read_wav: not a WAVE file");

  u32 audio_format = 0, channels = 0, sample_rate = 0, bits = 0;
  std::vector<char> payload;
  while (is.read(tag, 4)) {
    const u32 chunk_size = bin::read_u32(is);
    const std::string id(tag, 4);
    if (id == "fmt ") {
      audio_format = bin::read_u16(is);
      channels = bin::read_u16(is);
      sample_rate = bin::read_u32(is);
      bin::read_u32(is);  // byte rate
      bin::read_u16(is);  // block align
      bits = bin::read_u16(is);
      if (chunk_size > 16) is.seekg(chunk_size - 16, std::ios::cur);
    } else if (id == "data") {
      payload.resize(chunk_size);
      is.read(payload.data(), chunk_size);
      require(bool(is), "read_wav: truncated data chunk");
      break;
    } else {
      is.seekg(chunk_size + (chunk_size & 1), std::ios::cur);
    }
  }
  require(sample_rate > 0 && channels > 0, "read_wav: missing fmt chunk");
  require(!payload.empty(), "read_wav: missing data chunk");

  WavData wav;
  wav.sample_rate = sample_rate;
  if (audio_format == 1 && bits == 16) {
    const size_t n = payload.size() / 2 / channels;
    wav.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (u32 c = 0; c < channels; ++c) {
        const size_t off = (i * channels + c) * 2;
        const u32 lo = static_cast<unsigned char>(payload[off]);
        const u32 hi = static_cast<unsigned char>(payload[off + 1]);
        const auto s = static_cast<std::int16_t>(lo | (hi << 8));
        acc += double(s) / 32768.0;
      }
      wav.samples[i] = acc / double(channels);
    }
  } else if (audio_format == 3 && bits == 32) {
    const size_t n = payload.size() / 4 / channels;
    wav.samples.resize(n);
    for (size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (u32 c = 0; c < channels; ++c) {
        const size_t off = (i * channels + c) * 4;
        u32 v = 0;
        for (int b = 0; b < 4; ++b)
          v |= u32(static_cast<unsigned char>(payload[off + size_t(b)])) << (8 * b);
        float f;
        std::memcpy(&f, &v, 4);
        acc += double(f);
      }
      wav.samples[i] = acc / double(channels);
    }
  } else {
    throw Error("read_wav: unsupported format (want PCM16 or float32), got format=" +
                std::to_string(audio_format) + " bits=" + std::to_string(bits));
  }
  return wav;
}

// PCM16 writer, handy for fixtures and round-trip checks.
inline void write_wav(const std::vector<double>& samples, i64 sample_rate,
                      const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  require(bool(os), "write_wav: cannot open " + path);
  const u32 data_size = u32(samples.size() * 2);
  os.write("RIFF", 4);
  bin::write_u32(os, 36 + data_size);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  bin::write_u32(os, 16);
  bin::write_u16(os, 1);   // PCM
  bin::write_u16(os, 1);   // mono
  bin::write_u32(os, u32(sample_rate));
  bin::write_u32(os, u32(sample_rate * 2));  // byte rate
  bin::write_u16(os, 2);   // block align
  bin::write_u16(os, 16);  // bits
  os.write("data", 4);
  bin::write_u32(os, data_size);
  for (double s : samples) {
    const double clamped = std::min(1.0, std::max(-1.0, s));
    const std::int16_t v = std::int16_t(std::lround(clamped * 32767.0));
    os.put(char(v & 0xff));
    os.put(char((v >> 8) & 0xff));
  }
}

}  // namespace gantron
