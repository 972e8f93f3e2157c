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

// Shared fixtures and hand-rolled generators for the test suites.

#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "ordvote.hpp"

namespace ordvote::testing {

/// Small random-value generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  double normal(double mean = 0.0, double sd = 1.0) {
    return std::normal_distribution<double>(mean, sd)(eng_);
  }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(eng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  bool coin(double p = 0.5) { return uniform(0.0, 1.0) < p; }

  /// n strictly increasing values with gaps of at least min_gap.
  std::vector<double> ordered(std::size_t n, double lo, double hi, double min_gap = 1e-3) {
    std::vector<double> xs(n);
    for (double& x : xs) x = uniform(lo, hi);
    std::sort(xs.begin(), xs.end());
    for (std::size_t i = 1; i < n; ++i) xs[i] = std::max(xs[i], xs[i - 1] + min_gap);
    return xs;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

/// Voters V1..Vn and performers P1..Pm (disjoint codes), every pair observed
/// in every year, random covariates, scores uniform over the scale.
inline Dataset toy_dataset(std::size_t voters, std::size_t performers, std::size_t years,
                           std::uint64_t seed, ScoreScale scale = ScoreScale()) {
  Gen g(seed);
  Dataset d;
  d.scale = scale;
  for (std::size_t v = 0; v < voters; ++v) d.voters.push_back("V" + std::to_string(v + 1));
  for (std::size_t p = 0; p < performers; ++p) d.performers.push_back("P" + std::to_string(p + 1));
  d.pairs = PairStructure(voters, performers);
  for (std::size_t p = 0; p < performers; ++p) {
    for (std::size_t t = 0; t < years; ++t) {
      CovariateProfile prof;
      prof.year_offset = static_cast<int>(t);
      prof.language = static_cast<Language>(g.index(3));
      prof.act_type = static_cast<ActType>(g.index(3));
      d.covariates[{p, d.base_year + static_cast<int>(t)}] = prof;
    }
  }
  for (std::size_t v = 0; v < voters; ++v) {
    for (std::size_t p = 0; p < performers; ++p) {
      d.pairs.border[d.pairs.index(v, p)] = g.coin(0.3);
      if (g.coin(0.5)) d.pairs.set_migration(v, p, g.uniform(0.1, 3.0));
      for (std::size_t t = 0; t < years; ++t) {
        d.records.push_back({v, p, d.base_year + static_cast<int>(t), g.index(scale.size())});
      }
    }
  }
  d.finalize();
  return d;
}

/// A valid state with every location parameter 0.
inline ParameterState zero_state(const Dataset& d, std::size_t K) {
  ParameterState s;
  for (std::size_t c = 0; c < d.scale.cutpoint_count(); ++c) {
    s.cutpoints.push_back(-1.0 + 2.0 * static_cast<double>(c) /
                                     static_cast<double>(std::max<std::size_t>(1, d.scale.cutpoint_count() - 1)));
  }
  s.alpha.assign(d.pair_count(), 0.0);
  s.delta.assign(K * d.performer_count(), 0.0);
  s.zeta.assign(K, 1.0 / static_cast<double>(K));
  s.regions.assign(d.voter_count(), 0);
  for (std::size_t v = 0; v < s.regions.size(); ++v) s.regions[v] = v % K;
  return s;
}

/// A random valid state.
inline ParameterState random_state(const Dataset& d, std::size_t K, Gen& g) {
  ParameterState s;
  s.cutpoints = g.ordered(d.scale.cutpoint_count(), -3.0, 3.0, 0.05);
  for (double& b : s.beta) b = g.normal(0.0, 0.1);
  s.gamma = g.normal();
  s.psi = g.normal();
  s.phi = g.normal(0.0, 0.3);
  s.sigma_alpha = g.uniform(0.3, 1.5);
  s.sigma_delta = g.uniform(0.3, 1.5);
  s.delta.resize(K * d.performer_count());
  for (double& x : s.delta) x = g.normal(0.0, s.sigma_delta);
  s.zeta.assign(K, 0.0);
  double total = 0.0;
  for (double& z : s.zeta) total += (z = g.uniform(0.2, 1.0));
  for (double& z : s.zeta) z /= total;
  s.regions.resize(d.voter_count());
  for (auto& r : s.regions) r = g.index(K);
  s.alpha.resize(d.pair_count());
  for (std::size_t h = 0; h < s.alpha.size(); ++h) {
    s.alpha[h] = g.normal(theta_for_pair(s, d, h), s.sigma_alpha);
  }
  return s;
}

inline ModelConfig model_for(const Dataset& d, std::size_t K) {
  ModelConfig m;
  m.clusters = K;
  m.scale = d.scale;
  return m;
}

/// Fresh empty directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("ordvote_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace ordvote::testing
