// weakspk/rng.h

// Copyright 2026 The weakspk Authors
//
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

#ifndef WEAKSPK_RNG_H_
#define WEAKSPK_RNG_H_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string_view>
#include <utility>

namespace weakspk {

// SplitMix64 output finalizer.
constexpr uint64_t Mix64(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

// Derives an independent stream seed from (seed, stream).  Used for
// per-recording and per-epoch substreams so that parallel and serial
// generation see the same numbers.
constexpr uint64_t DeriveSeed(uint64_t seed, uint64_t stream) {
  return Mix64(Mix64(seed ^ 0x6A09E667F3BCC909ULL) +
               (stream + 1) * 0xD1B54A32D192ED03ULL);
}

// 64-bit FNV-1a, used to turn short tags into stream ids.
constexpr uint64_t Fnv1a(std::string_view s,
                         uint64_t h = 0xCBF29CE484222325ULL) {
  for (char c : s) {
    h ^= static_cast<uint8_t>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Counter-based generator: output i of a stream with key k is
/// Mix64(k + (i + 1) * kGoldenGamma), where k = Mix64(seed).  This is
/// SplitMix64 with an explicit counter, so any implementation that
/// follows the formulas below reproduces the same stream.
///
/// Derived distributions are also spelled out (no std:: distributions,
/// whose output differs between standard libraries):
///   Uniform()     = (u64 >> 11) * 2^-53
///   UniformInt(n) = rejection on u64 < (2^64 mod n), then u64 mod n
///   Gaussian()    = Box-Muller cosine branch, u1 = 1 - Uniform()
class Rng {
 public:
  explicit Rng(uint64_t seed) : key_(Mix64(seed)) {}

  uint64_t NextU64() {
    ++counter_;
    return Mix64(key_ + counter_ * kGoldenGamma);
  }

  double Uniform() { return static_cast<double>(NextU64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).  n must be positive.
  uint64_t UniformInt(uint64_t n) {
    const uint64_t threshold = (0 - n) % n;
    for (;;) {
      uint64_t x = NextU64();
      if (x >= threshold) return x % n;
    }
  }

  // Uniform integer in [lo, hi], inclusive.
  int64_t UniformRange(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(UniformInt(static_cast<uint64_t>(hi - lo) + 1));
  }

  bool Bernoulli(double p) { return Uniform() < p; }

  double Gaussian() {
    const double u1 = 1.0 - Uniform();
    const double u2 = Uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double Gaussian(double mean, double stddev) { return mean + stddev * Gaussian(); }

  // Fisher-Yates, high index first.
  template <typename T>
  void Shuffle(std::span<T> items) {
    for (size_t i = items.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(UniformInt(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  uint64_t counter() const { return counter_; }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
};

}  // namespace weakspk

#endif  // WEAKSPK_RNG_H_
