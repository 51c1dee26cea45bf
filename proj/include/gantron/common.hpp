// gantron/common.hpp

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

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gantron {

using i64 = std::int64_t;
using u64 = std::uint64_t;
using u32 = std::uint32_t;

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

constexpr const char* kVersionString = "gantron 0.1.0";

// --- little-endian binary helpers (containers and checkpoints) ---

namespace bin {

inline void write_u32(std::ostream& os, u32 v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& os, u64 v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_u16(std::ostream& os, u32 v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

inline u32 read_u16(std::istream& is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  require(bool(is), "binary read: truncated u16");
  return u32(b[0]) | (u32(b[1]) << 8);
}

inline u32 read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  require(bool(is), "binary read: truncated u32");
  return u32(b[0]) | (u32(b[1]) << 8) | (u32(b[2]) << 16) | (u32(b[3]) << 24);
}

inline u64 read_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  require(bool(is), "binary read: truncated u64");
  u64 v = 0;
  for (int i = 0; i < 8; ++i) v |= u64(b[i]) << (8 * i);
  return v;
}

inline void write_f32(std::ostream& os, float f) {
  static_assert(sizeof(float) == 4);
  u32 v;
  std::memcpy(&v, &f, 4);
  write_u32(os, v);
}

inline float read_f32(std::istream& is) {
  u32 v = read_u32(is);
  float f;
  std::memcpy(&f, &v, 4);
  return f;
}

inline void write_f64(std::ostream& os, double d) {
  static_assert(sizeof(double) == 8);
  u64 v;
  std::memcpy(&v, &d, 8);
  write_u64(os, v);
}

inline double read_f64(std::istream& is) {
  u64 v = read_u64(is);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

inline void write_string(std::ostream& os, const std::string& s) {
  write_u32(os, static_cast<u32>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
  u32 n = read_u32(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  require(bool(is), "binary read: truncated string");
  return s;
}

}  // namespace bin

// FNV-1a, used to fingerprint config snapshots in checkpoint headers.
inline u64 fnv1a64(const std::string& s) {
  u64 h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace gantron
