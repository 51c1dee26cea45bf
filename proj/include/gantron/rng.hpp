// gantron/rng.hpp

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

#include "gantron/common.hpp"

namespace gantron {

// xoshiro256++ with splitmix64 seeding. The state is four u64 words so a
// checkpoint can capture and restore the stream exactly; std::mt19937 and the
// standard distributions carry hidden state that does not round-trip as
// cleanly. Every draw is a pure function of the state (no cached Box-Muller
// pair), which keeps resumed runs bit-identical.
class Rng {
 public:
  Rng() : Rng(0) {}

  explicit Rng(u64 seed) {
    u64 x = seed;
    for (auto& w : s_) w = splitmix64(x);
  }

  // Independent stream derived from a base seed, for parallel workers:
  // stream(base, i) and stream(base, j) are decorrelated for i != j.
  static Rng stream(u64 base_seed, u64 stream_id) {
    Rng r;
    u64 x = base_seed;
    (void)splitmix64(x);
    x ^= 0x9e3779b97f4a7c15ull * (stream_id + 1);
    for (auto& w : r.s_) w = splitmix64(x);
    return r;
  }

  u64 next_u64() {
    const u64 result = rotl(s_[0] + s_[3], 23) + s_[0];
    const u64 t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // [0, 1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive range
  i64 uniform_int(i64 lo, i64 hi) {
    require(hi >= lo, "uniform_int: empty range");
    u64 span = u64(hi - lo) + 1;
    return lo + i64(next_u64() % span);
  }

  double normal() {
    // Box-Muller; recomputed per call so a draw never depends on cached state.
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  std::array<u64, 4> state() const { return s_; }
  void set_state(const std::array<u64, 4>& s) { s_ = s; }

 private:
  static u64 rotl(u64 x, int k) { return (x << k) | (x >> (64 - k)); }

  static u64 splitmix64(u64& x) {
    u64 z = (x += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::array<u64, 4> s_{};
};

}  // namespace gantron
