/* Copyright 2026 the unimo authors
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
#ifndef UNIMO_RNG_HPP
#define UNIMO_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <random>

namespace unimo {

/// Seeded RNG with hand-rolled distributions. mt19937_64 output is
/// bit-reproducible per the standard; std::uniform_real_distribution is
/// implementation-defined, so uniforms are derived from raw draws here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // modulo bias is irrelevant at the ranges used here (n << 2^64)
    return gen_() % n;
  }

  /// Standard normal via Box-Muller (deterministic draw order).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Uniform direction on the unit sphere.
  std::array<double, 3> unit_vector() {
    // z uniform in [-1,1], azimuth uniform
    double z = uniform(-1.0, 1.0);
    double phi = uniform(0.0, 2.0 * M_PI);
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace unimo

#endif
