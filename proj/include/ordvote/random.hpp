// Copyright 2026 The ordvote Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include <boost/math/distributions/normal.hpp>

namespace ordvote {

/// SplitMix64 finalizer; used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of sub-stream `stream` of `base`. Distinct (base, stream) pairs give
/// unrelated seeds.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix64(mix64(base) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

/// Seeded random stream. All draws are deterministic given the seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal(double mean = 0.0, double sd = 1.0) {
    return mean + sd * normal_(engine_);
  }

  double gamma(double shape) {
    std::gamma_distribution<double> g(shape, 1.0);
    return g(engine_);
  }

  std::size_t uniform_index(std::size_t n) {
    std::uniform_int_distribution<std::size_t> d(0, n - 1);
    return d(engine_);
  }

  /// Index drawn with probabilities proportional to `weights`.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    for (std::size_t k = 0; k + 1 < weights.size(); ++k) {
      if (u < weights[k]) return k;
      u -= weights[k];
    }
    return weights.size() - 1;
  }

  /// Dirichlet draw via normalized gammas. Entries are renormalized so the
  /// sum is 1 to rounding and clamped away from zero.
  std::vector<double> dirichlet(std::span<const double> concentration) {
    std::vector<double> x(concentration.size());
    double total = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      x[k] = std::max(gamma(concentration[k]), 1e-300);
      total += x[k];
    }
    for (double& v : x) v /= total;
    return x;
  }

  /// Normal(mean, sd^2) truncated to (lo, hi). Inverse-CDF sampling, done
  /// in the lower tail when the interval lies above the mean; intervals
  /// beyond the reach of the CDF use rejection sampling.
  double truncated_normal(double mean, double sd, double lo, double hi) {
    double a = (lo - mean) / sd;
    double b = (hi - mean) / sd;
    const bool flip = a > 0.0;
    if (flip) {
      std::swap(a, b);
      a = -a;
      b = -b;
    }
    const boost::math::normal standard;
    const double pa = std::isinf(a) ? 0.0 : boost::math::cdf(standard, a);
    const double pb = std::isinf(b) ? 1.0 : boost::math::cdf(standard, b);
    double z;
    if (pb > 1e-280 && pb > pa) {
      const double u = pa + uniform() * (pb - pa);
      z = u > 0.0 && u < 1.0 ? boost::math::quantile(standard, u) : (pa > 0.0 ? a : b);
      z = std::clamp(z, a, b);
    } else {
      z = -far_tail(-b, -a);
    }
    const double x = mean + sd * (flip ? -z : z);
    return std::clamp(x, lo, hi);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  /// Standard normal restricted to [c, d] with c > 0 far in the tail.
  double far_tail(double c, double d) {
    if (c * (d - c) < 1.0) {
      for (;;) {
        const double z = c + (d - c) * uniform();
        if (std::log(uniform()) < -0.5 * (z * z - c * c)) return z;
      }
    }
    const double rate = 0.5 * (c + std::sqrt(c * c + 4.0));
    for (;;) {
      const double z = c - std::log(uniform()) / rate;
      if (z > d) continue;
      if (std::log(uniform()) < -0.5 * (z - rate) * (z - rate)) return z;
    }
  }

  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// log Pr(Z > x) for a standard normal Z, accurate far into the upper tail.
inline double log_upper_tail(double x) {
  if (x < 30.0) return std::log(0.5 * std::erfc(x / std::sqrt(2.0)));
  const double r = 1.0 / (x * x);
  const double series = 1.0 - r * (1.0 - r * (3.0 - r * (15.0 - r * 105.0)));
  return -0.5 * x * x - std::log(x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

/// log of the mass a Normal(mean, sd^2) puts on (lo, hi).
inline double log_normal_interval_mass(double mean, double sd, double lo, double hi) {
  double a = std::isinf(lo) ? -std::numeric_limits<double>::infinity() : (lo - mean) / sd;
  double b = std::isinf(hi) ? std::numeric_limits<double>::infinity() : (hi - mean) / sd;
  if (b < 0) {
    std::swap(a, b);
    a = -a;
    b = -b;
  }
  if (a > 0) {
    // Both ends in the upper tail: Q(a) - Q(b) without cancellation.
    const double la = log_upper_tail(a);
    if (std::isinf(b)) return la;
    return la + std::log1p(-std::exp(log_upper_tail(b) - la));
  }
  const double qa = std::isinf(a) ? 0.0 : std::exp(log_upper_tail(-a));
  const double qb = std::isinf(b) ? 0.0 : std::exp(log_upper_tail(b));
  return std::log1p(-(qa + qb));
}

}  // namespace ordvote
