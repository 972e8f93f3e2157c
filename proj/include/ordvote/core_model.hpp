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

// Model mathematics for hierarchical cumulative-logit regression of
// voter -> performer scores.
//
//   Pr(y <= s) = logistic(lambda_s - mu),   s = 1..S-1
//   mu    = beta . x(performer, year) + alpha[v,p]
//   alpha[v,p] ~ Normal(theta[v,p], sigma_alpha^2)
//   theta[v,p] = gamma + delta[R_v, p] + psi * border[v,p] + phi * z[v,p]
//
// Everything in this header is a pure function of its arguments.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "ordvote/errors.hpp"

namespace ordvote {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Floor applied to log-probabilities before exponentiation; exp(-745) is
/// the smallest positive subnormal double.
inline constexpr double kLogProbFloor = -745.0;

// ---------------------------------------------------------------------------
// Score scale

/// Ordered set of admissible scores. Categories are indexed 0..S-1 internally
/// (the CSV formats carry the raw score values).
class ScoreScale {
 public:
  ScoreScale() : ScoreScale(std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 10, 12}) {}

  explicit ScoreScale(std::vector<int> values) : values_(std::move(values)) {
    if (values_.size() < 2) {
      throw ConfigError("score scale needs at least two values");
    }
    for (std::size_t i = 1; i < values_.size(); ++i) {
      if (values_[i] <= values_[i - 1]) {
        throw ConfigError("score scale values must be strictly increasing");
      }
    }
  }

  std::size_t size() const { return values_.size(); }
  std::size_t cutpoint_count() const { return values_.size() - 1; }
  const std::vector<int>& values() const { return values_; }

  std::optional<std::size_t> category_of(int score) const {
    auto it = std::lower_bound(values_.begin(), values_.end(), score);
    if (it == values_.end() || *it != score) return std::nullopt;
    return static_cast<std::size_t>(it - values_.begin());
  }

  int score_of(std::size_t category) const { return values_.at(category); }

  bool operator==(const ScoreScale&) const = default;

 private:
  std::vector<int> values_;
};

// ---------------------------------------------------------------------------
// Covariates

enum class Language { English, Own, Mixed };
enum class ActType { Group, FemaleSolo, MaleSolo };

/// Number of fixed-effect coefficients.
inline constexpr std::size_t kBetaCount = 5;

/// Positions of the fixed-effect coefficients in ParameterState::beta.
/// English and Group are the reference categories.
enum class Coefficient : std::size_t {
  Year = 0,
  MixedLanguage = 1,
  OwnLanguage = 2,
  FemaleSolo = 3,
  MaleSolo = 4,
};

inline std::optional<Language> parse_language(std::string_view s) {
  if (s == "English") return Language::English;
  if (s == "Own") return Language::Own;
  if (s == "Mixed") return Language::Mixed;
  return std::nullopt;
}

inline std::optional<ActType> parse_act_type(std::string_view s) {
  if (s == "Group") return ActType::Group;
  if (s == "FemaleSolo") return ActType::FemaleSolo;
  if (s == "MaleSolo") return ActType::MaleSolo;
  return std::nullopt;
}

inline const char* to_string(Language l) {
  switch (l) {
    case Language::English: return "English";
    case Language::Own: return "Own";
    case Language::Mixed: return "Mixed";
  }
  return "?";
}

inline const char* to_string(ActType a) {
  switch (a) {
    case ActType::Group: return "Group";
    case ActType::FemaleSolo: return "FemaleSolo";
    case ActType::MaleSolo: return "MaleSolo";
  }
  return "?";
}

struct CovariateProfile {
  int year_offset = 0;
  Language language = Language::English;
  ActType act_type = ActType::Group;

  /// Dummy-coded design row, aligned with Coefficient.
  std::array<double, kBetaCount> design() const {
    std::array<double, kBetaCount> x{};
    x[static_cast<std::size_t>(Coefficient::Year)] = year_offset;
    x[static_cast<std::size_t>(Coefficient::MixedLanguage)] = language == Language::Mixed;
    x[static_cast<std::size_t>(Coefficient::OwnLanguage)] = language == Language::Own;
    x[static_cast<std::size_t>(Coefficient::FemaleSolo)] = act_type == ActType::FemaleSolo;
    x[static_cast<std::size_t>(Coefficient::MaleSolo)] = act_type == ActType::MaleSolo;
    return x;
  }

  bool operator==(const CovariateProfile&) const = default;
};

// ---------------------------------------------------------------------------
// Pair structure

/// Dense voter x performer tables of border indicators and migration stocks.
/// Adjacency is stored exactly as given; nothing is symmetrized.
struct PairStructure {
  std::size_t voters = 0;
  std::size_t performers = 0;
  std::vector<std::uint8_t> border;
  std::vector<double> migration;
  std::vector<std::uint8_t> migration_present;

  PairStructure() = default;
  PairStructure(std::size_t v, std::size_t p)
      : voters(v), performers(p), border(v * p, 0), migration(v * p, 0.0),
        migration_present(v * p, 0) {}

  std::size_t index(std::size_t v, std::size_t p) const { return v * performers + p; }

  bool adjacent(std::size_t v, std::size_t p) const { return border[index(v, p)] != 0; }

  /// z * I(z): exactly zero when no migration is recorded.
  double migration_term(std::size_t v, std::size_t p) const {
    const auto i = index(v, p);
    return migration_present[i] ? migration[i] : 0.0;
  }

  void set_migration(std::size_t v, std::size_t p, double z) {
    migration[index(v, p)] = z;
    migration_present[index(v, p)] = 1;
  }

  bool operator==(const PairStructure&) const = default;
};

// ---------------------------------------------------------------------------
// Dataset

struct Record {
  std::size_t voter = 0;
  std::size_t performer = 0;
  int year = 0;
  std::size_t category = 0;

  bool operator==(const Record&) const = default;
};

/// Observed scores with covariates and pair structure. Call finalize() after
/// filling the public fields; it validates and builds the derived indexes.
class Dataset {
 public:
  ScoreScale scale;
  int base_year = 1998;
  std::vector<std::string> voters;
  std::vector<std::string> performers;
  std::vector<Record> records;
  std::map<std::pair<std::size_t, int>, CovariateProfile> covariates;
  PairStructure pairs;

  void finalize() {
    const std::size_t V = voters.size();
    const std::size_t P = performers.size();
    if (pairs.voters != V || pairs.performers != P) {
      throw DataError("pair structure dimensions do not match voters/performers");
    }
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> pair_lookup;
    std::set<std::tuple<std::size_t, std::size_t, int>> seen;
    for (std::size_t r = 0; r < records.size(); ++r) {
      const Record& rec = records[r];
      if (rec.voter >= V || rec.performer >= P) {
        throw DataError("record " + std::to_string(r) + ": identifier index out of range");
      }
      if (voters[rec.voter] == performers[rec.performer]) {
        throw DataError("record " + std::to_string(r) + ": self-vote by " + voters[rec.voter]);
      }
      if (rec.category >= scale.size()) {
        throw DataError("record " + std::to_string(r) + ": category out of range");
      }
      if (!seen.insert({rec.voter, rec.performer, rec.year}).second) {
        throw DataError("record " + std::to_string(r) + ": duplicate (voter, performer, year)");
      }
      if (!covariates.contains({rec.performer, rec.year})) {
        throw DataError("record " + std::to_string(r) + ": no covariates for performer " +
                        performers[rec.performer] + " in " + std::to_string(rec.year));
      }
      pair_lookup.emplace(std::make_pair(rec.voter, rec.performer), 0);
    }
    for (const auto& [key, profile] : covariates) {
      if (key.first >= P) throw DataError("covariate row for unknown performer");
      if (profile.year_offset != key.second - base_year || profile.year_offset < 0) {
        throw DataError("covariate year offset inconsistent for " + performers[key.first] +
                        " in " + std::to_string(key.second));
      }
    }

    observed_pairs_.clear();
    for (auto& [key, idx] : pair_lookup) {
      idx = observed_pairs_.size();
      observed_pairs_.push_back(key);
    }
    record_pair_.resize(records.size());
    design_.resize(records.size());
    records_of_pair_.assign(observed_pairs_.size(), {});
    pairs_of_voter_.assign(V, {});
    pairs_of_performer_.assign(P, {});
    for (std::size_t r = 0; r < records.size(); ++r) {
      const Record& rec = records[r];
      const std::size_t h = pair_lookup.at({rec.voter, rec.performer});
      record_pair_[r] = h;
      records_of_pair_[h].push_back(r);
      design_[r] = covariates.at({rec.performer, rec.year}).design();
    }
    for (std::size_t h = 0; h < observed_pairs_.size(); ++h) {
      pairs_of_voter_[observed_pairs_[h].first].push_back(h);
      pairs_of_performer_[observed_pairs_[h].second].push_back(h);
    }
    pair_lookup_ = std::move(pair_lookup);
    finalized_ = true;
  }

  bool finalized() const { return finalized_; }

  std::size_t voter_count() const { return voters.size(); }
  std::size_t performer_count() const { return performers.size(); }
  /// H: number of distinct observed (voter, performer) pairs.
  std::size_t pair_count() const { return observed_pairs_.size(); }

  const std::vector<std::pair<std::size_t, std::size_t>>& observed_pairs() const {
    return observed_pairs_;
  }
  std::optional<std::size_t> pair_index(std::size_t v, std::size_t p) const {
    auto it = pair_lookup_.find({v, p});
    if (it == pair_lookup_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t pair_of_record(std::size_t r) const { return record_pair_[r]; }
  const std::array<double, kBetaCount>& design_of_record(std::size_t r) const {
    return design_[r];
  }
  const std::vector<std::size_t>& records_of_pair(std::size_t h) const {
    return records_of_pair_[h];
  }
  const std::vector<std::size_t>& pairs_of_voter(std::size_t v) const {
    return pairs_of_voter_[v];
  }
  const std::vector<std::size_t>& pairs_of_performer(std::size_t p) const {
    return pairs_of_performer_[p];
  }

  /// Equality of the observable content (derived indexes follow from it).
  bool operator==(const Dataset& o) const {
    return scale == o.scale && base_year == o.base_year && voters == o.voters &&
           performers == o.performers && records == o.records &&
           covariates == o.covariates && pairs == o.pairs;
  }

 private:
  bool finalized_ = false;
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> pair_lookup_;
  std::vector<std::pair<std::size_t, std::size_t>> observed_pairs_;
  std::vector<std::size_t> record_pair_;
  std::vector<std::array<double, kBetaCount>> design_;
  std::vector<std::vector<std::size_t>> records_of_pair_;
  std::vector<std::vector<std::size_t>> pairs_of_voter_;
  std::vector<std::vector<std::size_t>> pairs_of_performer_;
};

// ---------------------------------------------------------------------------
// Parameters and configuration

/// One full assignment of every model unknown. Regions are 0-based.
/// delta is stored row-major, K rows of P performers.
struct ParameterState {
  std::vector<double> cutpoints;
  std::array<double, kBetaCount> beta{};
  std::vector<double> alpha;
  double gamma = 0.0;
  std::vector<double> delta;
  double psi = 0.0;
  double phi = 0.0;
  std::vector<std::size_t> regions;
  std::vector<double> zeta;
  double sigma_alpha = 1.0;
  double sigma_delta = 1.0;

  std::size_t clusters() const { return zeta.size(); }
  std::size_t performers() const { return zeta.empty() ? 0 : delta.size() / zeta.size(); }
  double delta_at(std::size_t k, std::size_t p) const { return delta[k * performers() + p]; }
  double& delta_at(std::size_t k, std::size_t p) { return delta[k * performers() + p]; }

  bool operator==(const ParameterState&) const = default;
};

struct ModelConfig {
  std::size_t clusters = 1;
  double cutpoint_prior_variance = 10.0;
  /// q: prior standard deviation of every beta (Q = q^2 I, m = 0).
  double beta_prior_sd = 1e4;
  /// Prior variance of gamma, psi and phi.
  double effect_prior_variance = 1e4;
  /// Dirichlet concentration per cluster; empty means all ones.
  std::vector<double> dirichlet_concentration;
  double log_sd_lower = -3.0;
  double log_sd_upper = 3.0;
  /// Fix gamma at 0 (removes the gamma/cutpoint translation ridge).
  bool pin_gamma = false;
  ScoreScale scale;

  double concentration(std::size_t k) const {
    return dirichlet_concentration.empty() ? 1.0 : dirichlet_concentration[k];
  }

  void validate() const {
    if (clusters < 1) throw ConfigError("cluster count K must be >= 1");
    if (!(cutpoint_prior_variance > 0)) throw ConfigError("cutpoint prior variance must be > 0");
    if (!(beta_prior_sd > 0)) throw ConfigError("beta prior sd must be > 0");
    if (!(effect_prior_variance > 0)) throw ConfigError("effect prior variance must be > 0");
    if (!dirichlet_concentration.empty()) {
      if (dirichlet_concentration.size() != clusters) {
        throw ConfigError("dirichlet concentration needs K entries");
      }
      for (double a : dirichlet_concentration) {
        if (!(a > 0)) throw ConfigError("dirichlet concentration must be > 0");
      }
    }
    if (!(log_sd_lower < log_sd_upper)) throw ConfigError("log-sd bounds must be ordered");
  }
};

// ---------------------------------------------------------------------------
// Scalar helpers

inline double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(logistic(x)) without overflow or cancellation.
inline double log_logistic(double x) {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

inline double normal_log_density(double x, double mean, double variance) {
  const double d = x - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + d * d / variance);
}

inline bool strictly_increasing(std::span<const double> v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Category probabilities

/// log Pr(y = category | cutpoints, mu) computed in log space. Cutpoints are
/// assumed ordered; the caller validates.
inline double log_category_prob(std::span<const double> cutpoints, double mu,
                                std::size_t category) {
  const std::size_t last = cutpoints.size();
  if (category == 0) return log_logistic(cutpoints[0] - mu);
  if (category == last) return log_logistic(mu - cutpoints[last - 1]);
  const double hi = cutpoints[category] - mu;
  const double lo = cutpoints[category - 1] - mu;
  double a;
  double b;
  if (lo > 0) {
    // Upper tail: F(hi) - F(lo) = F(-lo) - F(-hi).
    a = log_logistic(-lo);
    b = log_logistic(-hi);
  } else {
    a = log_logistic(hi);
    b = log_logistic(lo);
  }
  return a + std::log(-std::expm1(b - a));
}

/// Category probabilities pi_1..pi_S for one linear predictor.
inline std::vector<double> category_probs(std::span<const double> cutpoints, double mu) {
  if (cutpoints.empty()) throw InvariantError("at least one cutpoint required");
  if (!strictly_increasing(cutpoints)) {
    throw InvariantError("cutpoints must be strictly increasing");
  }
  std::vector<double> probs(cutpoints.size() + 1);
  for (std::size_t s = 0; s < probs.size(); ++s) {
    probs[s] = std::exp(std::max(log_category_prob(cutpoints, mu, s), kLogProbFloor));
  }
  return probs;
}

// ---------------------------------------------------------------------------
// Linear predictors

inline double fixed_effects(const std::array<double, kBetaCount>& beta,
                            const std::array<double, kBetaCount>& design) {
  double acc = 0.0;
  for (std::size_t j = 0; j < kBetaCount; ++j) acc += beta[j] * design[j];
  return acc;
}

/// mu = beta . x(profile) + alpha[pair].
inline double linear_predictor(const ParameterState& state, const CovariateProfile& profile,
                               std::size_t pair) {
  return fixed_effects(state.beta, profile.design()) + state.alpha.at(pair);
}

/// Linear predictor of record r of a finalized dataset.
inline double record_linear_predictor(const ParameterState& state, const Dataset& data,
                                      std::size_t r) {
  return fixed_effects(state.beta, data.design_of_record(r)) +
         state.alpha[data.pair_of_record(r)];
}

/// theta = gamma + delta[R_v, p] + psi * border + phi * z * I(z).
inline double theta_mean(const ParameterState& state, std::size_t voter, std::size_t performer,
                         const PairStructure& structure) {
  const std::size_t k = state.regions.at(voter);
  if (k >= state.clusters()) throw InvariantError("region index out of range");
  return state.gamma + state.delta_at(k, performer) +
         state.psi * (structure.adjacent(voter, performer) ? 1.0 : 0.0) +
         state.phi * structure.migration_term(voter, performer);
}

/// theta for observed pair h, with the voter's region replaced by `region`.
inline double theta_for_pair(const ParameterState& state, const Dataset& data, std::size_t h,
                             std::size_t region) {
  const auto [v, p] = data.observed_pairs()[h];
  return state.gamma + state.delta_at(region, p) +
         state.psi * (data.pairs.adjacent(v, p) ? 1.0 : 0.0) +
         state.phi * data.pairs.migration_term(v, p);
}

inline double theta_for_pair(const ParameterState& state, const Dataset& data, std::size_t h) {
  return theta_for_pair(state, data, h, state.regions[data.observed_pairs()[h].first]);
}

// ---------------------------------------------------------------------------
// Likelihood and prior

struct LikelihoodResult {
  double value = 0.0;
  /// Records whose category probability underflowed to exactly zero.
  std::size_t underflows = 0;
};

/// Sum of log pi over the selected records (all records when `subset` is
/// empty and `use_subset` is false).
inline LikelihoodResult log_likelihood_detail(const ParameterState& state, const Dataset& data,
                                              std::span<const std::size_t> subset,
                                              bool use_subset) {
  LikelihoodResult out;
  const std::size_t n = use_subset ? subset.size() : data.records.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = use_subset ? subset[i] : i;
    const double lp = log_category_prob(state.cutpoints, record_linear_predictor(state, data, r),
                                        data.records[r].category);
    if (lp == kNegInf || std::isnan(lp)) {
      ++out.underflows;
      out.value = kNegInf;
    } else if (out.value != kNegInf) {
      out.value += lp;
    }
  }
  return out;
}

inline double log_likelihood(const ParameterState& state, const Dataset& data) {
  return log_likelihood_detail(state, data, {}, false).value;
}

inline double log_likelihood(const ParameterState& state, const Dataset& data,
                             std::span<const std::size_t> subset) {
  return log_likelihood_detail(state, data, subset, true).value;
}

inline double log_dirichlet_density(std::span<const double> x, const ModelConfig& config) {
  double total = 0.0;
  double out = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double a = config.concentration(k);
    total += a;
    out += (a - 1.0) * std::log(x[k]) - std::lgamma(a);
  }
  return out + std::lgamma(total);
}

/// Describes the first violated ParameterState invariant, if any.
inline std::optional<std::string> state_violation(const ParameterState& state,
                                                  const Dataset& data,
                                                  const ModelConfig& config) {
  const std::size_t K = config.clusters;
  if (state.cutpoints.size() != config.scale.cutpoint_count()) return "cutpoint count";
  if (!strictly_increasing(state.cutpoints)) return "cutpoints not strictly increasing";
  if (state.alpha.size() != data.pair_count()) return "alpha size";
  if (state.zeta.size() != K) return "zeta size";
  if (state.delta.size() != K * data.performer_count()) return "delta size";
  if (state.regions.size() != data.voter_count()) return "regions size";
  double sum = 0.0;
  for (double z : state.zeta) {
    if (!(z > 0.0)) return "zeta entry not positive";
    sum += z;
  }
  if (std::abs(sum - 1.0) > 1e-12) return "zeta does not sum to 1";
  for (std::size_t r : state.regions) {
    if (r >= K) return "region out of range";
  }
  for (double s : {state.sigma_alpha, state.sigma_delta}) {
    if (!(s > 0.0)) return "non-positive standard deviation";
    const double l = std::log(s);
    if (l < config.log_sd_lower || l > config.log_sd_upper) return "log sd out of bounds";
  }
  if (config.pin_gamma && state.gamma != 0.0) return "gamma pinned at 0";
  return std::nullopt;
}

/// Joint log prior density. Returns -inf exactly when the state violates a
/// constraint. The uniform log-sd prior contributes 0 inside its bounds.
inline double log_prior(const ParameterState& state, const Dataset& data,
                        const ModelConfig& config) {
  if (state_violation(state, data, config)) return kNegInf;

  double lp = 0.0;
  for (double l : state.cutpoints) lp += normal_log_density(l, 0.0, config.cutpoint_prior_variance);
  const double beta_var = config.beta_prior_sd * config.beta_prior_sd;
  for (double b : state.beta) lp += normal_log_density(b, 0.0, beta_var);

  const double var_alpha = state.sigma_alpha * state.sigma_alpha;
  for (std::size_t h = 0; h < data.pair_count(); ++h) {
    lp += normal_log_density(state.alpha[h], theta_for_pair(state, data, h), var_alpha);
  }
  const double var_delta = state.sigma_delta * state.sigma_delta;
  for (double d : state.delta) lp += normal_log_density(d, 0.0, var_delta);

  if (!config.pin_gamma) lp += normal_log_density(state.gamma, 0.0, config.effect_prior_variance);
  lp += normal_log_density(state.psi, 0.0, config.effect_prior_variance);
  lp += normal_log_density(state.phi, 0.0, config.effect_prior_variance);

  for (std::size_t r : state.regions) lp += std::log(state.zeta[r]);
  lp += log_dirichlet_density(state.zeta, config);
  return lp;
}

}  // namespace ordvote
