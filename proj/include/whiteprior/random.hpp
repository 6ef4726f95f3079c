// Copyright 2026 The whiteprior Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace whiteprior {

/// Stream identifiers, so the same user seed drives independent streams.
enum class StreamTag : std::uint64_t {
  kAwgn = 0xA076'1D64'78BD'642FULL,
  kPhantom = 0xE703'7ED1'A0B4'28DBULL,
  kStochasticDraw = 0x8EBC'6AF0'9C88'C6E3ULL,
  kBenchmark = 0x5899'65CC'7537'4CC3ULL,
};

inline constexpr std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E37'79B9'7F4A'7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58'476D'1CE4'E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D0'49BB'1331'11EBULL;
  return z ^ (z >> 31);
}

/// Counter-based generator: draw k is splitmix64(key + k * golden), where the
/// key mixes the seed with a stream tag. Standard normals come from the
/// Box-Muller transform applied to consecutive uniform pairs; this pins the
/// sequence independently of the standard library implementation.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, StreamTag tag)
      : key_(splitmix64(seed ^ static_cast<std::uint64_t>(tag))) {}

  std::uint64_t next_u64() {
    return splitmix64(key_ + 0x9E37'79B9'7F4A'7C15ULL * counter_++);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer on [0, n), n > 0.
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] keeps log finite.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace whiteprior
