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

// Convergence diagnostics and the deviance information criterion.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ordvote/archive.hpp"
#include "ordvote/core_model.hpp"
#include "ordvote/mcmc.hpp"

namespace ordvote {

/// A statistic that may be undefined on constant input. Degenerate values
/// are never NaN for PSRF; for autocorrelation and ESS they are NaN.
struct Diagnostic {
  double value = 0.0;
  bool degenerate = false;
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Correctly rounded sum of doubles (Shewchuk / msum). The result does not
/// depend on the order of the inputs, and duplicating every input doubles it
/// exactly.
inline double exact_sum(std::span<const double> xs) {
  std::vector<double> partials;
  for (double x : xs) {
    std::size_t i = 0;
    for (double y : partials) {
      if (std::abs(x) < std::abs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials[i++] = lo;
      x = hi;
    }
    partials.resize(i);
    partials.push_back(x);
  }
  std::size_t n = partials.size();
  if (n == 0) return 0.0;
  double hi = partials[--n];
  double lo = 0.0;
  while (n > 0) {
    const double x = hi;
    const double y = partials[--n];
    hi = x + y;
    const double yr = hi - x;
    lo = y - yr;
    if (lo != 0.0) break;
  }
  // Round half-way cases correctly.
  if (n > 0 && ((lo < 0 && partials[n - 1] < 0) || (lo > 0 && partials[n - 1] > 0))) {
    const double y = lo * 2.0;
    const double x = hi + y;
    if (y == x - hi) hi = x;
  }
  return hi;
}

/// Mean with one exact-residual correction step: m0 = sum / n, then
/// m0 + sum(x - m0) / n with each difference split exactly (TwoSum). Order
/// and duplication invariant, and exact when all inputs are equal.
inline double exact_mean(std::span<const double> xs) {
  const double n = static_cast<double>(xs.size());
  const double m0 = exact_sum(xs) / n;
  std::vector<double> residuals;
  residuals.reserve(2 * xs.size());
  for (double x : xs) {
    const double d = x - m0;
    const double z = d - x;
    residuals.push_back(d);
    residuals.push_back((x - (d - z)) + (-m0 - z));
  }
  return m0 + exact_sum(residuals) / n;
}

inline double order_invariant_mean(std::span<const double> xs) { return exact_mean(xs); }

namespace detail {

inline double mean_of(std::span<const double> xs) {
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

inline double sample_variance(std::span<const double> xs) {
  const double m = mean_of(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return acc / static_cast<double>(xs.size() - 1);
}

inline bool constant(std::span<const double> xs) {
  return std::all_of(xs.begin(), xs.end(), [&](double x) { return x == xs.front(); });
}

}  // namespace detail

/// Classic potential scale reduction factor
///   sqrt(((n-1)/n W + B/n) / W)
/// W: mean within-chain variance, B: n times the variance of the chain
/// means. With split = true each chain is halved first.
inline Diagnostic gelman_rubin(std::span<const std::vector<double>> traces, bool split = false) {
  std::vector<std::vector<double>> chains;
  for (const auto& t : traces) {
    if (split) {
      const std::size_t half = t.size() / 2;
      chains.emplace_back(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(half));
      chains.emplace_back(t.end() - static_cast<std::ptrdiff_t>(half), t.end());
    } else {
      chains.push_back(t);
    }
  }
  if (chains.size() < 2) throw std::invalid_argument("PSRF needs at least two chains");
  const std::size_t n = chains.front().size();
  for (const auto& c : chains) {
    if (c.size() != n) throw std::invalid_argument("PSRF needs equal chain lengths");
  }
  if (n < 10) throw std::invalid_argument("PSRF needs at least 10 draws per chain");

  std::vector<double> means;
  double W = 0.0;
  for (const auto& c : chains) {
    means.push_back(detail::mean_of(c));
    W += detail::sample_variance(c);
  }
  W /= static_cast<double>(chains.size());
  const double B = static_cast<double>(n) * detail::sample_variance(means);
  const double nd = static_cast<double>(n);
  if (W == 0.0) {
    return {B == 0.0 ? 1.0 : std::numeric_limits<double>::infinity(), true};
  }
  return {std::sqrt(((nd - 1.0) / nd * W + B / nd) / W), false};
}

/// Sample autocorrelation with the biased (1/n) normalization.
inline Diagnostic autocorrelation(std::span<const double> trace, std::size_t lag) {
  if (lag >= trace.size()) throw std::invalid_argument("lag must be smaller than the trace length");
  const double m = detail::mean_of(trace);
  double denom = 0.0;
  for (double x : trace) denom += (x - m) * (x - m);
  if (denom == 0.0) return {kNaN, true};
  if (lag == 0) return {1.0, false};
  double num = 0.0;
  for (std::size_t t = 0; t + lag < trace.size(); ++t) num += (trace[t] - m) * (trace[t + lag] - m);
  return {num / denom, false};
}

/// Effective sample size over one or more chains. Autocorrelations are
/// averaged across chains and summed by Geyer's initial positive sequence:
/// pairs rho_{2k} + rho_{2k+1} are accumulated until the first negative
/// pair. The result is clamped to [1, total draws].
inline Diagnostic effective_sample_size(std::span<const std::vector<double>> traces) {
  if (traces.empty()) throw std::invalid_argument("ESS needs at least one chain");
  const std::size_t n = traces.front().size();
  for (const auto& t : traces) {
    if (t.size() != n) throw std::invalid_argument("ESS needs equal chain lengths");
  }
  if (n < 10) throw std::invalid_argument("ESS needs at least 10 draws per chain");
  const double total = static_cast<double>(n * traces.size());

  std::vector<double> means;
  std::vector<double> denoms;
  bool all_constant = true;
  for (const auto& t : traces) {
    const double m = detail::mean_of(t);
    double d = 0.0;
    for (double x : t) d += (x - m) * (x - m);
    means.push_back(m);
    denoms.push_back(d);
    if (d > 0.0) all_constant = false;
  }
  if (all_constant) return {kNaN, true};

  auto rho = [&](std::size_t lag) {
    double acc = 0.0;
    std::size_t used = 0;
    for (std::size_t c = 0; c < traces.size(); ++c) {
      if (denoms[c] == 0.0) continue;
      const auto& t = traces[c];
      double num = 0.0;
      for (std::size_t i = 0; i + lag < n; ++i) num += (t[i] - means[c]) * (t[i + lag] - means[c]);
      acc += num / denoms[c];
      ++used;
    }
    return acc / static_cast<double>(used);
  };

  double tau = -1.0;
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    const double pair = (k == 0 ? 1.0 : rho(2 * k)) + rho(2 * k + 1);
    if (pair < 0.0) break;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / total);
  return {std::clamp(total / tau, 1.0, total), false};
}

inline Diagnostic effective_sample_size(std::span<const double> trace) {
  std::vector<std::vector<double>> one{std::vector<double>(trace.begin(), trace.end())};
  return effective_sample_size(one);
}

// ---------------------------------------------------------------------------
// DIC

struct DicResult {
  double dic = 0.0;
  double p_d = 0.0;
  double mean_deviance = 0.0;
  double plugin_deviance = 0.0;
  /// Averaged cutpoints were out of order and had to be sorted.
  bool cutpoints_resorted = false;
};

/// DIC = Dbar + pD with pD = Dbar - D(plug-in).
inline DicResult dic_from_deviances(std::span<const double> deviances, double plugin_deviance) {
  if (deviances.empty()) throw std::invalid_argument("DIC needs at least one draw");
  DicResult out;
  out.mean_deviance = order_invariant_mean({deviances.begin(), deviances.end()});
  out.plugin_deviance = plugin_deviance;
  out.p_d = out.mean_deviance - plugin_deviance;
  out.dic = out.mean_deviance + out.p_d;
  return out;
}

/// Plug-in state at the posterior means of the parameters that enter the
/// likelihood directly (cutpoints, beta, alpha). Other fields are copied from
/// the first draw and do not affect the likelihood.
inline ParameterState plugin_state(const PosteriorDraws& draws, bool* resorted = nullptr) {
  const auto& first = draws.chains.at(0).at(0);
  ParameterState s = first;
  auto column_mean = [&](auto&& get) {
    std::vector<double> xs;
    xs.reserve(draws.total_draws());
    for (const auto& chain : draws.chains) {
      for (const auto& st : chain) xs.push_back(get(st));
    }
    return order_invariant_mean(std::move(xs));
  };
  for (std::size_t i = 0; i < s.cutpoints.size(); ++i) {
    s.cutpoints[i] = column_mean([i](const ParameterState& st) { return st.cutpoints[i]; });
  }
  for (std::size_t j = 0; j < kBetaCount; ++j) {
    s.beta[j] = column_mean([j](const ParameterState& st) { return st.beta[j]; });
  }
  for (std::size_t h = 0; h < s.alpha.size(); ++h) {
    s.alpha[h] = column_mean([h](const ParameterState& st) { return st.alpha[h]; });
  }
  const bool ordered = strictly_increasing(s.cutpoints);
  if (!ordered) std::sort(s.cutpoints.begin(), s.cutpoints.end());
  if (resorted) *resorted = !ordered;
  return s;
}

inline DicResult dic(const PosteriorDraws& draws, const Dataset& data) {
  if (draws.total_draws() == 0) throw std::invalid_argument("DIC needs a nonempty archive");
  if (!draws.dataset_digest.empty() && draws.dataset_digest != dataset_digest(data)) {
    throw DataError("archive was fitted to a different dataset");
  }
  std::vector<double> devs;
  for (const auto& c : draws.deviance) devs.insert(devs.end(), c.begin(), c.end());
  bool resorted = false;
  const auto plug = plugin_state(draws, &resorted);
  auto out = dic_from_deviances(devs, -2.0 * log_likelihood(plug, data));
  out.cutpoints_resorted = resorted;
  return out;
}

// ---------------------------------------------------------------------------
// Full report

struct DiagnosticRow {
  std::string parameter;
  /// Unset when fewer than two chains (or fewer than 10 draws).
  std::optional<Diagnostic> psrf;
  Diagnostic ess{kNaN, true};
  Diagnostic ac1{kNaN, true};
  Diagnostic ac5{kNaN, true};
  Diagnostic ac10{kNaN, true};
  /// "ok", "warn" (PSRF > 1.1 or ESS < 100) or "degenerate" (constant).
  std::string flag = "ok";
};

inline constexpr double kPsrfWarn = 1.1;
inline constexpr double kEssWarn = 100.0;

inline std::vector<DiagnosticRow> diagnose_all(const PosteriorDraws& draws) {
  const auto names = parameter_names(draws.layout);
  const auto traces = all_traces(draws);
  const std::size_t n = draws.draws_per_chain();
  std::vector<DiagnosticRow> rows;
  for (std::size_t j = 0; j < names.size(); ++j) {
    DiagnosticRow row;
    row.parameter = names[j];
    const auto& tr = traces[j];
    bool constant = true;
    for (const auto& c : tr) {
      if (!c.empty() && (!detail::constant(c) || c.front() != tr.front().front())) constant = false;
    }
    if (n >= 10 && tr.size() >= 2) row.psrf = gelman_rubin(tr);
    if (n >= 10) row.ess = effective_sample_size(tr);
    auto mean_ac = [&](std::size_t lag) -> Diagnostic {
      if (lag >= n) return {kNaN, true};
      double acc = 0.0;
      std::size_t used = 0;
      for (const auto& c : tr) {
        auto a = autocorrelation(c, lag);
        if (a.degenerate) continue;
        acc += a.value;
        ++used;
      }
      if (used == 0) return {kNaN, true};
      return {acc / static_cast<double>(used), false};
    };
    row.ac1 = mean_ac(1);
    row.ac5 = mean_ac(5);
    row.ac10 = mean_ac(10);
    if (n == 0 || constant) {
      row.flag = "degenerate";
    } else if ((row.psrf && !row.psrf->degenerate && row.psrf->value > kPsrfWarn) ||
               (!row.ess.degenerate && row.ess.value < kEssWarn) || n < 10) {
      row.flag = "warn";
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string diagnostics_csv(const std::vector<DiagnosticRow>& rows) {
  auto fmt = [](const Diagnostic& d) {
    return (d.degenerate && std::isnan(d.value)) ? std::string("NA") : csv::format_sig(d.value);
  };
  std::string out = "parameter,psrf,ess,ac1,ac5,ac10,flag\n";
  for (const auto& r : rows) {
    out += r.parameter + "," + (r.psrf ? fmt(*r.psrf) : std::string("NA")) + "," + fmt(r.ess) +
           "," + fmt(r.ac1) + "," + fmt(r.ac5) + "," + fmt(r.ac10) + "," + r.flag + "\n";
  }
  return out;
}

}  // namespace ordvote
