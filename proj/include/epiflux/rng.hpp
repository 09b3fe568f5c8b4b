/*
 * Copyright 2026 The epiflux Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef EPIFLUX_RNG_HPP
#define EPIFLUX_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

namespace epiflux {

/// splitmix64 finaliser (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Sub-seed derivation used for every replica, individual and auxiliary
/// stream: sub_seed(master, i) = splitmix64(master ^ splitmix64(i)).
/// Changing this breaks reproducibility of stored runs.
constexpr std::uint64_t sub_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(master ^ splitmix64(index));
}

/// Stream tags for auxiliary (non-indexed) streams.
enum class StreamTag : std::uint64_t {
  initial_condition = 0xA11CE00000000001ULL,
  gaussian = 0xA11CE00000000002ULL,
  replica = 0xA11CE00000000003ULL,
};

constexpr std::uint64_t sub_seed(std::uint64_t master, StreamTag tag) noexcept {
  return splitmix64(master ^ static_cast<std::uint64_t>(tag));
}

/// Random stream with portable variate transforms. The engine is
/// std::mt19937_64, whose output sequence is fixed by the standard; the
/// transforms below are written out so results do not depend on the
/// standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

  double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

  /// Standard normal by Box–Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    const double phi = 2.0 * M_PI * uniform();
    spare_ = r * std::sin(phi);
    has_spare_ = true;
    return r * std::cos(phi);
  }

  /// Index drawn from a cumulative distribution (last entry == total mass).
  int discrete(std::span<const double> cdf) {
    const double u = uniform() * cdf.back();
    int lo = 0;
    int hi = static_cast<int>(cdf.size()) - 1;
    while (lo < hi) {
      const int mid = (lo + hi) / 2;
      if (u < cdf[mid]) hi = mid; else lo = mid + 1;
    }
    return lo;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace epiflux

#endif  // EPIFLUX_RNG_HPP
