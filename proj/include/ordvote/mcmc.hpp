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

// Metropolis-within-Gibbs sampler.
//
// One sweep applies, in order:
//   cutpoints        truncated random-walk Metropolis per cutpoint
//   intercept shift  joint translation of (cutpoints, alpha, gamma)
//   beta             adaptive random-walk Metropolis per coefficient
//   alpha            random-walk Metropolis per observed pair
//   theta block      exact Gibbs for gamma, psi, phi, delta
//   regions          exact categorical draw per voter
//   zeta             exact Dirichlet draw
//   variances        random-walk Metropolis on log sigma_alpha, log sigma_delta
//
// Proposal scales adapt towards 44% acceptance during burn-in only.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ordvote/core_model.hpp"
#include "ordvote/io.hpp"
#include "ordvote/random.hpp"

namespace ordvote {

struct SamplerConfig {
  std::size_t chains = 2;
  /// Post-burn-in iterations (before thinning).
  std::size_t iterations = 11000;
  std::size_t burn_in = 1000;
  std::size_t thin = 20;
  std::uint64_t seed = 1998;
  /// Iterations of proposal adaptation; capped at burn_in. Unset: all of burn-in.
  std::optional<std::size_t> adapt_window;
  /// Read `iterations` as the total including burn-in.
  bool iterations_include_burn_in = false;
  /// Verify every ParameterState invariant after each sweep.
  bool check_invariants = false;
  /// Worker threads; 0 means one per chain.
  std::size_t jobs = 0;
  double target_acceptance = 0.44;

  void validate() const {
    if (chains < 1) throw ConfigError("chains must be >= 1");
    if (thin < 1) throw ConfigError("thin must be >= 1");
    if (iterations_include_burn_in && iterations < burn_in) {
      throw ConfigError("total iterations smaller than burn-in");
    }
    if (!(target_acceptance > 0 && target_acceptance < 1)) {
      throw ConfigError("target acceptance must lie in (0, 1)");
    }
  }

  std::size_t retained_iterations() const {
    return iterations_include_burn_in ? iterations - burn_in : iterations;
  }
  std::size_t stored_draws() const { return retained_iterations() / thin; }
  std::size_t adaptation_iterations() const {
    return std::min(adapt_window.value_or(burn_in), burn_in);
  }
};

/// Names and shapes needed to interpret a draw archive without the dataset.
struct ArchiveLayout {
  std::vector<std::string> voters;
  std::vector<std::string> performers;
  std::vector<std::pair<std::size_t, std::size_t>> observed_pairs;
  std::size_t clusters = 1;
  std::size_t cutpoints = 0;

  static ArchiveLayout of(const Dataset& data, std::size_t clusters) {
    return {data.voters, data.performers, data.observed_pairs(), clusters,
            data.scale.cutpoint_count()};
  }

  bool operator==(const ArchiveLayout&) const = default;
};

struct PosteriorDraws {
  SamplerConfig sampler;
  ModelConfig model;
  std::string dataset_digest;
  ArchiveLayout layout;
  std::vector<std::vector<ParameterState>> chains;
  /// deviance[c][i] = -2 log_likelihood(chains[c][i]).
  std::vector<std::vector<double>> deviance;

  std::size_t chain_count() const { return chains.size(); }
  std::size_t draws_per_chain() const { return chains.empty() ? 0 : chains.front().size(); }
  std::size_t total_draws() const { return chain_count() * draws_per_chain(); }
};

// ---------------------------------------------------------------------------
// Exact full conditionals

struct NormalConditional {
  double mean = 0.0;
  double variance = 0.0;
};

namespace detail {

/// Conditional of a coefficient c entering theta_h linearly as c * x_h, with
/// alpha_h ~ Normal(theta_h, sigma_alpha^2) and c ~ Normal(0, prior_var).
/// `current` is the coefficient's present value, removed from theta.
template <class Covariate>
NormalConditional linear_theta_conditional(const ParameterState& s, const Dataset& data,
                                           std::span<const std::size_t> pairs, double current,
                                           double prior_var, Covariate&& x) {
  const double var_alpha = s.sigma_alpha * s.sigma_alpha;
  double xx = 0.0;
  double xr = 0.0;
  for (std::size_t h : pairs) {
    const double xh = x(h);
    if (xh == 0.0) continue;
    const double resid = s.alpha[h] - (theta_for_pair(s, data, h) - current * xh);
    xx += xh * xh;
    xr += xh * resid;
  }
  const double precision = xx / var_alpha + 1.0 / prior_var;
  return {(xr / var_alpha) / precision, 1.0 / precision};
}

inline std::vector<std::size_t> all_pairs(const Dataset& data) {
  std::vector<std::size_t> out(data.pair_count());
  for (std::size_t h = 0; h < out.size(); ++h) out[h] = h;
  return out;
}

}  // namespace detail

inline NormalConditional gamma_conditional(const ParameterState& s, const Dataset& data,
                                           const ModelConfig& config) {
  const auto pairs = detail::all_pairs(data);
  return detail::linear_theta_conditional(s, data, pairs, s.gamma, config.effect_prior_variance,
                                          [](std::size_t) { return 1.0; });
}

inline NormalConditional psi_conditional(const ParameterState& s, const Dataset& data,
                                         const ModelConfig& config) {
  const auto pairs = detail::all_pairs(data);
  return detail::linear_theta_conditional(
      s, data, pairs, s.psi, config.effect_prior_variance, [&](std::size_t h) {
        const auto [v, p] = data.observed_pairs()[h];
        return data.pairs.adjacent(v, p) ? 1.0 : 0.0;
      });
}

inline NormalConditional phi_conditional(const ParameterState& s, const Dataset& data,
                                         const ModelConfig& config) {
  const auto pairs = detail::all_pairs(data);
  return detail::linear_theta_conditional(
      s, data, pairs, s.phi, config.effect_prior_variance, [&](std::size_t h) {
        const auto [v, p] = data.observed_pairs()[h];
        return data.pairs.migration_term(v, p);
      });
}

/// Conditional of delta[k, p]. With no voter of region k scoring p this is
/// the prior Normal(0, sigma_delta^2).
inline NormalConditional delta_conditional(const ParameterState& s, const Dataset& data,
                                           std::size_t k, std::size_t p) {
  const auto& pairs = data.pairs_of_performer(p);
  return detail::linear_theta_conditional(
      s, data, pairs, s.delta_at(k, p), s.sigma_delta * s.sigma_delta, [&](std::size_t h) {
        return s.regions[data.observed_pairs()[h].first] == k ? 1.0 : 0.0;
      });
}

/// Pr(R_v = k | rest), computed in log space with max-subtraction.
inline std::vector<double> region_probabilities(const ParameterState& s, const Dataset& data,
                                                std::size_t voter) {
  const std::size_t K = s.clusters();
  const double var_alpha = s.sigma_alpha * s.sigma_alpha;
  std::vector<double> logw(K);
  for (std::size_t k = 0; k < K; ++k) {
    double lw = std::log(s.zeta[k]);
    for (std::size_t h : data.pairs_of_voter(voter)) {
      lw += normal_log_density(s.alpha[h], theta_for_pair(s, data, h, k), var_alpha);
    }
    logw[k] = lw;
  }
  const double mx = *std::max_element(logw.begin(), logw.end());
  double total = 0.0;
  for (double& w : logw) {
    w = std::exp(w - mx);
    total += w;
  }
  for (double& w : logw) w /= total;
  return logw;
}

/// Dirichlet parameters of zeta | regions: a_k + #{v : R_v = k}.
inline std::vector<double> zeta_posterior(const ParameterState& s, const ModelConfig& config) {
  std::vector<double> a(config.clusters);
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = config.concentration(k);
  for (std::size_t r : s.regions) a[r] += 1.0;
  return a;
}

// ---------------------------------------------------------------------------
// Initialization

/// Starting state: cutpoints at the logits of the (half-count smoothed)
/// cumulative score frequencies, regions uniform at random, all other
/// location parameters 0, unit standard deviations, uniform zeta.
inline ParameterState init_state(const ModelConfig& config, const Dataset& data, Rng& rng) {
  config.validate();
  if (data.records.empty()) throw DataError("cannot initialize on an empty dataset");
  if (!(data.scale == config.scale)) throw ConfigError("model score scale differs from the data");
  const std::size_t S = data.scale.size();
  const std::size_t K = config.clusters;
  std::vector<double> counts(S, 0.5);
  for (const auto& r : data.records) counts[r.category] += 1.0;
  double total = 0.0;
  for (double c : counts) total += c;

  ParameterState s;
  double cum = 0.0;
  for (std::size_t c = 0; c + 1 < S; ++c) {
    cum += counts[c];
    const double f = cum / total;
    s.cutpoints.push_back(std::log(f / (1.0 - f)));
  }
  s.alpha.assign(data.pair_count(), 0.0);
  s.delta.assign(K * data.performer_count(), 0.0);
  s.zeta.assign(K, 1.0 / static_cast<double>(K));
  s.regions.resize(data.voter_count());
  for (auto& r : s.regions) r = rng.uniform_index(K);
  return s;
}

// ---------------------------------------------------------------------------
// Per-chain sampler

/// Random-walk proposal scale with Robbins-Monro adaptation on the log scale.
struct AdaptiveScale {
  double log_scale = 0.0;
  std::size_t adapt_steps = 0;
  std::size_t proposed = 0;
  std::size_t accepted = 0;

  explicit AdaptiveScale(double scale = 1.0) : log_scale(std::log(scale)) {}

  double scale() const { return std::exp(log_scale); }

  void record(bool was_accepted, bool adapting, double target) {
    ++proposed;
    if (was_accepted) ++accepted;
    if (adapting) {
      ++adapt_steps;
      const double gain = std::pow(static_cast<double>(adapt_steps), -0.6);
      log_scale += gain * ((was_accepted ? 1.0 : 0.0) - target);
      log_scale = std::clamp(log_scale, -20.0, 5.0);
    }
  }

  double acceptance_rate() const {
    return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  }
};

enum class ScaleParameter { Alpha, Delta };

class ChainSampler {
 public:
  ChainSampler(Dataset data, ModelConfig model, ParameterState init, std::uint64_t seed)
      : data_(std::move(data)), model_(std::move(model)), state_(std::move(init)),
        rng_(derive_seed(seed, 0)) {
    if (!data_.finalized()) data_.finalize();
    model_.validate();
    if (auto bad = state_violation(state_, data_, model_)) {
      throw InvariantError("initial state: " + *bad);
    }
    cutpoint_scales_.assign(data_.scale.cutpoint_count(), AdaptiveScale(0.1));
    for (std::size_t j = 0; j < kBetaCount; ++j) {
      beta_scales_[j] = AdaptiveScale(j == static_cast<std::size_t>(Coefficient::Year) ? 0.01 : 0.1);
    }
    alpha_scales_.assign(data_.pair_count(), AdaptiveScale(0.5));
    pair_rngs_.reserve(data_.pair_count());
    for (std::size_t h = 0; h < data_.pair_count(); ++h) {
      pair_rngs_.emplace_back(derive_seed(seed, 1000 + h));
    }
    rebuild_indexes();
    refresh();
  }

  const ParameterState& state() const { return state_; }
  const Dataset& data() const { return data_; }
  const ModelConfig& model() const { return model_; }

  void set_state(ParameterState s) {
    state_ = std::move(s);
    refresh();
  }

  /// Replaces every record's score category (successive-conditional testing).
  void replace_categories(std::span<const std::size_t> categories) {
    for (std::size_t r = 0; r < data_.records.size(); ++r) data_.records[r].category = categories[r];
    rebuild_indexes();
  }

  void set_adapting(bool adapting) { adapting_ = adapting; }
  void set_target_acceptance(double target) { target_ = target; }
  void enable_intercept_shift(bool on) { shift_enabled_ = on; }

  /// Recomputes the cached linear predictors from the state.
  void refresh() {
    mu_.resize(data_.records.size());
    for (std::size_t r = 0; r < mu_.size(); ++r) mu_[r] = record_linear_predictor(state_, data_, r);
  }

  void sweep() {
    refresh();
    update_cutpoints();
    if (shift_enabled_) update_intercept_shift();
    update_beta_block();
    update_alpha();
    update_theta_block();
    update_regions();
    update_zeta();
    update_variances();
  }

  // -- cutpoints ----------------------------------------------------------

  std::pair<double, double> cutpoint_bounds(std::size_t s) const {
    const auto& c = state_.cutpoints;
    const double lo = s == 0 ? -std::numeric_limits<double>::infinity() : c[s - 1];
    const double hi = s + 1 == c.size() ? std::numeric_limits<double>::infinity() : c[s + 1];
    return {lo, hi};
  }

  /// Log Metropolis-Hastings ratio for moving cutpoint s to `proposal`,
  /// including the truncated-proposal correction.
  double cutpoint_log_ratio(std::size_t s, double proposal) const {
    const double current = state_.cutpoints[s];
    if (proposal == current) return 0.0;
    const auto [lo, hi] = cutpoint_bounds(s);
    if (!(proposal > lo && proposal < hi)) return kNegInf;
    std::vector<double> moved = state_.cutpoints;
    moved[s] = proposal;
    double ratio = cutpoint_loglik(moved, s) - cutpoint_loglik(state_.cutpoints, s);
    ratio += normal_log_density(proposal, 0.0, model_.cutpoint_prior_variance) -
             normal_log_density(current, 0.0, model_.cutpoint_prior_variance);
    const double h = cutpoint_scales_[s].scale();
    ratio += log_normal_interval_mass(current, h, lo, hi) -
             log_normal_interval_mass(proposal, h, lo, hi);
    return ratio;
  }

  void update_cutpoints() {
    for (std::size_t s = 0; s < state_.cutpoints.size(); ++s) {
      const auto [lo, hi] = cutpoint_bounds(s);
      const double proposal =
          rng_.truncated_normal(state_.cutpoints[s], cutpoint_scales_[s].scale(), lo, hi);
      const bool accept = metropolis_accept(cutpoint_log_ratio(s, proposal), rng_);
      if (accept) state_.cutpoints[s] = proposal;
      cutpoint_scales_[s].record(accept, adapting_, target_);
    }
  }

  // -- intercept shift ----------------------------------------------------

  /// Log ratio for translating cutpoints, alpha and gamma (or all of delta
  /// when gamma is pinned) by c. The likelihood and the alpha - theta
  /// residuals are invariant, so only the affected priors enter.
  double shift_log_ratio(double c) const {
    if (c == 0.0) return 0.0;
    double ratio = 0.0;
    for (double l : state_.cutpoints) {
      ratio += normal_log_density(l + c, 0.0, model_.cutpoint_prior_variance) -
               normal_log_density(l, 0.0, model_.cutpoint_prior_variance);
    }
    if (model_.pin_gamma) {
      const double var = state_.sigma_delta * state_.sigma_delta;
      for (double d : state_.delta) {
        ratio += normal_log_density(d + c, 0.0, var) - normal_log_density(d, 0.0, var);
      }
    } else {
      ratio += normal_log_density(state_.gamma + c, 0.0, model_.effect_prior_variance) -
               normal_log_density(state_.gamma, 0.0, model_.effect_prior_variance);
    }
    return ratio;
  }

  void update_intercept_shift() {
    const double c = rng_.normal(0.0, shift_scale_.scale());
    const bool accept = metropolis_accept(shift_log_ratio(c), rng_);
    if (accept) {
      for (double& l : state_.cutpoints) l += c;
      for (double& a : state_.alpha) a += c;
      for (double& m : mu_) m += c;
      if (model_.pin_gamma) {
        for (double& d : state_.delta) d += c;
      } else {
        state_.gamma += c;
      }
    }
    shift_scale_.record(accept, adapting_, target_);
  }

  // -- beta ---------------------------------------------------------------

  double beta_log_ratio(std::size_t j, double proposal) const {
    const double current = state_.beta[j];
    if (proposal == current) return 0.0;
    const double step = proposal - current;
    double ratio = 0.0;
    for (std::size_t r : records_with_beta_[j]) {
      const double x = data_.design_of_record(r)[j];
      const std::size_t c = data_.records[r].category;
      ratio += log_category_prob(state_.cutpoints, mu_[r] + step * x, c) -
               log_category_prob(state_.cutpoints, mu_[r], c);
    }
    const double var = model_.beta_prior_sd * model_.beta_prior_sd;
    ratio += normal_log_density(proposal, 0.0, var) - normal_log_density(current, 0.0, var);
    return ratio;
  }

  void update_beta_block() {
    for (std::size_t j = 0; j < kBetaCount; ++j) {
      const double proposal = rng_.normal(state_.beta[j], beta_scales_[j].scale());
      const bool accept = metropolis_accept(beta_log_ratio(j, proposal), rng_);
      if (accept) {
        const double step = proposal - state_.beta[j];
        for (std::size_t r : records_with_beta_[j]) mu_[r] += step * data_.design_of_record(r)[j];
        state_.beta[j] = proposal;
      }
      beta_scales_[j].record(accept, adapting_, target_);
    }
  }

  // -- alpha --------------------------------------------------------------

  double alpha_log_ratio(std::size_t h, double proposal) const {
    const double current = state_.alpha[h];
    if (proposal == current) return 0.0;
    const double step = proposal - current;
    double ratio = 0.0;
    for (std::size_t r : data_.records_of_pair(h)) {
      const std::size_t c = data_.records[r].category;
      ratio += log_category_prob(state_.cutpoints, mu_[r] + step, c) -
               log_category_prob(state_.cutpoints, mu_[r], c);
    }
    const double theta = theta_for_pair(state_, data_, h);
    const double var = state_.sigma_alpha * state_.sigma_alpha;
    ratio += normal_log_density(proposal, theta, var) - normal_log_density(current, theta, var);
    return ratio;
  }

  /// Pairs are conditionally independent given everything else; each uses its
  /// own random stream so the order of evaluation does not affect the draws.
  void update_alpha() {
    for (std::size_t h = 0; h < data_.pair_count(); ++h) {
      Rng& rng = pair_rngs_[h];
      const double proposal = rng.normal(state_.alpha[h], alpha_scales_[h].scale());
      const bool accept = metropolis_accept(alpha_log_ratio(h, proposal), rng);
      if (accept) {
        const double step = proposal - state_.alpha[h];
        for (std::size_t r : data_.records_of_pair(h)) mu_[r] += step;
        state_.alpha[h] = proposal;
      }
      alpha_scales_[h].record(accept, adapting_, target_);
    }
  }

  // -- theta block (exact) ------------------------------------------------

  void update_theta_block() {
    if (!model_.pin_gamma) {
      const auto g = gamma_conditional(state_, data_, model_);
      state_.gamma = rng_.normal(g.mean, std::sqrt(g.variance));
    }
    const auto ps = psi_conditional(state_, data_, model_);
    state_.psi = rng_.normal(ps.mean, std::sqrt(ps.variance));
    const auto ph = phi_conditional(state_, data_, model_);
    state_.phi = rng_.normal(ph.mean, std::sqrt(ph.variance));
    for (std::size_t k = 0; k < state_.clusters(); ++k) {
      for (std::size_t p = 0; p < data_.performer_count(); ++p) {
        const auto d = delta_conditional(state_, data_, k, p);
        state_.delta_at(k, p) = rng_.normal(d.mean, std::sqrt(d.variance));
      }
    }
  }

  // -- regions and zeta (exact) -------------------------------------------

  void update_regions() {
    if (state_.clusters() == 1) return;
    for (std::size_t v = 0; v < data_.voter_count(); ++v) {
      const auto probs = region_probabilities(state_, data_, v);
      state_.regions[v] = rng_.categorical(probs);
    }
  }

  void update_zeta() {
    if (state_.clusters() == 1) return;
    state_.zeta = rng_.dirichlet(zeta_posterior(state_, model_));
  }

  // -- variances ----------------------------------------------------------

  double log_sd_log_ratio(ScaleParameter which, double proposed_log_sd) const {
    const double current = std::log(which == ScaleParameter::Alpha ? state_.sigma_alpha
                                                                   : state_.sigma_delta);
    if (proposed_log_sd == current) return 0.0;
    if (proposed_log_sd < model_.log_sd_lower || proposed_log_sd > model_.log_sd_upper) {
      return kNegInf;
    }
    const double var_now = std::exp(2.0 * current);
    const double var_new = std::exp(2.0 * proposed_log_sd);
    double ratio = 0.0;
    if (which == ScaleParameter::Alpha) {
      for (std::size_t h = 0; h < data_.pair_count(); ++h) {
        const double theta = theta_for_pair(state_, data_, h);
        ratio += normal_log_density(state_.alpha[h], theta, var_new) -
                 normal_log_density(state_.alpha[h], theta, var_now);
      }
    } else {
      for (double d : state_.delta) {
        ratio += normal_log_density(d, 0.0, var_new) - normal_log_density(d, 0.0, var_now);
      }
    }
    return ratio;
  }

  void update_variances() {
    for (auto which : {ScaleParameter::Alpha, ScaleParameter::Delta}) {
      double& sigma = which == ScaleParameter::Alpha ? state_.sigma_alpha : state_.sigma_delta;
      AdaptiveScale& scale = log_sd_scales_[which == ScaleParameter::Alpha ? 0 : 1];
      const double proposal = rng_.normal(std::log(sigma), scale.scale());
      const bool accept = metropolis_accept(log_sd_log_ratio(which, proposal), rng_);
      if (accept) sigma = std::exp(proposal);
      scale.record(accept, adapting_, target_);
    }
  }

  /// Mean acceptance rate of each random-walk block.
  std::vector<std::pair<std::string, double>> acceptance_rates() const {
    auto mean_rate = [](std::span<const AdaptiveScale> scales) {
      double acc = 0.0;
      for (const auto& s : scales) acc += s.acceptance_rate();
      return scales.empty() ? 0.0 : acc / static_cast<double>(scales.size());
    };
    return {{"cutpoints", mean_rate(cutpoint_scales_)},
            {"shift", shift_scale_.acceptance_rate()},
            {"beta", mean_rate(beta_scales_)},
            {"alpha", mean_rate(alpha_scales_)},
            {"sigma.alpha", log_sd_scales_[0].acceptance_rate()},
            {"sigma.delta", log_sd_scales_[1].acceptance_rate()}};
  }

 private:
  static bool metropolis_accept(double log_ratio, Rng& rng) {
    if (log_ratio >= 0.0) return true;
    if (std::isnan(log_ratio) || log_ratio == kNegInf) return false;
    return std::log(rng.uniform()) < log_ratio;
  }

  void rebuild_indexes() {
    records_by_category_.assign(data_.scale.size(), {});
    for (auto& v : records_with_beta_) v.clear();
    for (std::size_t r = 0; r < data_.records.size(); ++r) {
      records_by_category_[data_.records[r].category].push_back(r);
      const auto& x = data_.design_of_record(r);
      for (std::size_t j = 0; j < kBetaCount; ++j) {
        if (x[j] != 0.0) records_with_beta_[j].push_back(r);
      }
    }
  }

  /// Log likelihood of the records that depend on cutpoint s, i.e. those in
  /// categories s and s + 1.
  double cutpoint_loglik(std::span<const double> cutpoints, std::size_t s) const {
    double acc = 0.0;
    for (std::size_t c : {s, s + 1}) {
      for (std::size_t r : records_by_category_[c]) acc += log_category_prob(cutpoints, mu_[r], c);
    }
    return acc;
  }

  Dataset data_;
  ModelConfig model_;
  ParameterState state_;
  Rng rng_;
  std::vector<Rng> pair_rngs_;
  std::vector<double> mu_;
  std::vector<std::vector<std::size_t>> records_by_category_;
  std::array<std::vector<std::size_t>, kBetaCount> records_with_beta_;

  std::vector<AdaptiveScale> cutpoint_scales_;
  std::array<AdaptiveScale, kBetaCount> beta_scales_;
  std::vector<AdaptiveScale> alpha_scales_;
  std::array<AdaptiveScale, 2> log_sd_scales_{AdaptiveScale(0.2), AdaptiveScale(0.2)};
  AdaptiveScale shift_scale_{0.1};
  bool adapting_ = false;
  bool shift_enabled_ = true;
  double target_ = 0.44;
};

// ---------------------------------------------------------------------------
// Multi-chain run

namespace detail {

struct ChainOutput {
  std::vector<ParameterState> draws;
  std::vector<double> deviance;
};

inline ChainOutput run_chain(const SamplerConfig& config, const ModelConfig& model,
                             const Dataset& data, std::size_t chain) {
  const std::uint64_t chain_seed = derive_seed(config.seed, chain);
  Rng init_rng(derive_seed(chain_seed, 1));
  ParameterState init = init_state(model, data, init_rng);
  ChainOutput out;
  if (config.stored_draws() == 0) return out;

  ChainSampler sampler(data, model, std::move(init), derive_seed(chain_seed, 2));
  sampler.set_target_acceptance(config.target_acceptance);
  const std::size_t adapt = config.adaptation_iterations();
  const std::size_t total = config.burn_in + config.retained_iterations();
  out.draws.reserve(config.stored_draws());
  for (std::size_t it = 0; it < total; ++it) {
    sampler.set_adapting(it < adapt);
    sampler.sweep();
    if (config.check_invariants) {
      if (auto bad = state_violation(sampler.state(), data, model)) {
        throw InvariantError("chain " + std::to_string(chain + 1) + ", iteration " +
                             std::to_string(it) + ": " + *bad);
      }
    }
    if (it < config.burn_in) continue;
    const std::size_t retained = it - config.burn_in + 1;
    if (retained % config.thin == 0 && out.draws.size() < config.stored_draws()) {
      out.draws.push_back(sampler.state());
      out.deviance.push_back(-2.0 * log_likelihood(sampler.state(), data));
    }
  }
  return out;
}

}  // namespace detail

/// Runs every chain and returns the thinned post-burn-in draws. Chains use
/// independent streams derived from the seed, so the archive is identical
/// whether chains run serially or on worker threads.
inline PosteriorDraws run(const SamplerConfig& config, const ModelConfig& model,
                          const Dataset& data) {
  config.validate();
  model.validate();
  if (!data.finalized()) throw DataError("dataset is not finalized");

  PosteriorDraws out;
  out.sampler = config;
  out.model = model;
  out.dataset_digest = dataset_digest(data);
  out.layout = ArchiveLayout::of(data, model.clusters);
  out.chains.resize(config.chains);
  out.deviance.resize(config.chains);

  std::vector<std::exception_ptr> errors(config.chains);
  auto work = [&](std::size_t c) {
    try {
      auto res = detail::run_chain(config, model, data, c);
      out.chains[c] = std::move(res.draws);
      out.deviance[c] = std::move(res.deviance);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };

  const std::size_t jobs = std::min(config.jobs == 0 ? config.chains : config.jobs, config.chains);
  if (jobs <= 1) {
    for (std::size_t c = 0; c < config.chains; ++c) work(c);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t c = next++; c < config.chains; c = next++) work(c);
      });
    }
    for (auto& t : workers) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace ordvote
