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

// Posterior post-processing: standardized pair effects and their tail
// probabilities, region membership, label-switching repair, parameter
// summaries and DIC-based choice of K.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ordvote/archive.hpp"
#include "ordvote/csv.hpp"
#include "ordvote/diagnostics.hpp"
#include "ordvote/mcmc.hpp"

namespace ordvote {

/// Inverse empirical CDF: the smallest draw x with F(x) >= p.
inline double lower_quantile(std::span<const double> sorted, double p) {
  const double pos = std::ceil(p * static_cast<double>(sorted.size()));
  const auto idx = static_cast<std::size_t>(std::max(pos, 1.0)) - 1;
  return sorted[std::min(idx, sorted.size() - 1)];
}

// ---------------------------------------------------------------------------
// Standardized effects

/// alpha* = (alpha - mean) / sd within one draw, sd with denominator H - 1.
inline std::vector<double> standardize_alpha(const ParameterState& draw) {
  const auto& a = draw.alpha;
  if (a.size() < 2) throw DegenerateDrawError("standardization needs at least two pairs");
  if (std::all_of(a.begin(), a.end(), [&](double x) { return x == a.front(); })) {
    throw DegenerateDrawError("all alpha values in the draw are equal");
  }
  double mean = 0.0;
  for (double x : a) mean += x;
  mean /= static_cast<double>(a.size());
  double ss = 0.0;
  for (double x : a) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(a.size() - 1));
  if (!(sd > 0.0)) throw DegenerateDrawError("alpha values in the draw have no spread");
  std::vector<double> out(a.size());
  for (std::size_t h = 0; h < a.size(); ++h) out[h] = (a[h] - mean) / sd;
  return out;
}

struct BiasRow {
  std::string voter;
  std::string performer;
  double mean = 0.0;
  double q025 = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double q975 = 0.0;
  /// Pr(alpha* > threshold | y) and Pr(alpha* < -threshold | y).
  double p_pos = 0.0;
  double p_neg = 0.0;
};

struct BiasReport {
  double threshold = 1.96;
  std::vector<BiasRow> rows;
};

/// Per-pair summaries of the standardized effects. Probabilities are exact
/// fractions of draws; rows follow the archive's (voter, performer) order.
inline BiasReport exceedance(const PosteriorDraws& draws, double threshold = 1.96) {
  if (draws.total_draws() == 0) throw std::invalid_argument("exceedance needs a nonempty archive");
  const std::size_t H = draws.layout.observed_pairs.size();
  std::vector<std::vector<double>> per_pair(H);
  for (const auto& chain : draws.chains) {
    for (const auto& st : chain) {
      const auto z = standardize_alpha(st);
      for (std::size_t h = 0; h < H; ++h) per_pair[h].push_back(z[h]);
    }
  }
  BiasReport rep;
  rep.threshold = threshold;
  for (std::size_t h = 0; h < H; ++h) {
    auto& xs = per_pair[h];
    std::sort(xs.begin(), xs.end());
    const auto [v, p] = draws.layout.observed_pairs[h];
    BiasRow row;
    row.voter = draws.layout.voters[v];
    row.performer = draws.layout.performers[p];
    row.mean = exact_mean(xs);
    row.q025 = lower_quantile(xs, 0.025);
    row.q25 = lower_quantile(xs, 0.25);
    row.q75 = lower_quantile(xs, 0.75);
    row.q975 = lower_quantile(xs, 0.975);
    const auto n = static_cast<double>(xs.size());
    const auto pos = std::count_if(xs.begin(), xs.end(), [&](double x) { return x > threshold; });
    const auto neg = std::count_if(xs.begin(), xs.end(), [&](double x) { return x < -threshold; });
    row.p_pos = static_cast<double>(pos) / n;
    row.p_neg = static_cast<double>(neg) / n;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Region membership and relabeling

struct MembershipMatrix {
  std::vector<std::string> voters;
  std::size_t clusters = 1;
  /// Row-major V x K.
  std::vector<double> probability;

  double at(std::size_t v, std::size_t k) const { return probability[v * clusters + k]; }
};

/// Fraction of stored draws with R_v = k. Relabel the archive first when K > 1.
inline MembershipMatrix membership(const PosteriorDraws& draws) {
  MembershipMatrix m;
  m.voters = draws.layout.voters;
  m.clusters = draws.layout.clusters;
  const std::size_t V = m.voters.size();
  std::vector<std::size_t> counts(V * m.clusters, 0);
  for (const auto& chain : draws.chains) {
    for (const auto& st : chain) {
      for (std::size_t v = 0; v < V; ++v) ++counts[v * m.clusters + st.regions[v]];
    }
  }
  const auto n = static_cast<double>(draws.total_draws());
  m.probability.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) m.probability[i] = static_cast<double>(counts[i]) / n;
  return m;
}

/// Most probable region of each voter (ties to the lower label).
inline std::vector<std::size_t> modal_regions(const MembershipMatrix& m) {
  std::vector<std::size_t> out(m.voters.size());
  for (std::size_t v = 0; v < out.size(); ++v) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < m.clusters; ++k) {
      if (m.at(v, k) > m.at(v, best)) best = k;
    }
    out[v] = best;
  }
  return out;
}

/// Minimum-cost assignment for a square cost matrix (Hungarian algorithm with
/// potentials). Returns assignment[row] = column.
inline std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost) {
  const std::size_t n = cost.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = match[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[match[j] - 1] = j - 1;
  return assignment;
}

/// Label permutation (old -> new) maximizing agreement of `regions` with
/// `reference`; among optimal permutations the one fixing most labels wins.
inline std::vector<std::size_t> matching_permutation(std::span<const std::size_t> regions,
                                                     std::span<const std::size_t> reference,
                                                     std::size_t clusters) {
  std::vector<std::vector<double>> agree(clusters, std::vector<double>(clusters, 0.0));
  for (std::size_t v = 0; v < regions.size(); ++v) agree[regions[v]][reference[v]] += 1.0;
  const double weight = static_cast<double>(regions.size() + 1);
  std::vector<std::vector<double>> cost(clusters, std::vector<double>(clusters));
  for (std::size_t a = 0; a < clusters; ++a) {
    for (std::size_t b = 0; b < clusters; ++b) {
      cost[a][b] = -(agree[a][b] * weight + (a == b ? 1.0 : 0.0));
    }
  }
  return hungarian(cost);
}

inline ParameterState permute_labels(const ParameterState& s, std::span<const std::size_t> perm) {
  ParameterState out = s;
  const std::size_t K = s.clusters();
  const std::size_t P = s.performers();
  for (auto& r : out.regions) r = perm[r];
  for (std::size_t k = 0; k < K; ++k) {
    out.zeta[perm[k]] = s.zeta[k];
    for (std::size_t p = 0; p < P; ++p) out.delta[perm[k] * P + p] = s.delta[k * P + p];
  }
  return out;
}

/// Aligns every draw's region labels with `reference` (a partition of the
/// voters), permuting delta rows and zeta entries consistently.
inline PosteriorDraws relabel(const PosteriorDraws& draws,
                              std::span<const std::size_t> reference) {
  PosteriorDraws out = draws;
  const std::size_t K = draws.layout.clusters;
  if (K < 2) return out;
  for (auto& chain : out.chains) {
    for (auto& st : chain) st = permute_labels(st, matching_permutation(st.regions, reference, K));
  }
  return out;
}

/// Relabels against the first stored draw of chain 1, the draw adjacent to
/// the end of burn-in.
inline PosteriorDraws relabel(const PosteriorDraws& draws) {
  if (draws.total_draws() == 0 || draws.layout.clusters < 2) return draws;
  const auto reference = draws.chains.front().front().regions;
  return relabel(draws, reference);
}

// ---------------------------------------------------------------------------
// Summaries

struct SummaryRow {
  std::string parameter;
  double mean = 0.0;
  double q025 = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double q975 = 0.0;
};

/// Posterior mean and lower-empirical quantiles of every scalar column
/// except the categorical R.* labels.
inline std::vector<SummaryRow> summarize(const PosteriorDraws& draws) {
  if (draws.total_draws() == 0) throw std::invalid_argument("summary needs a nonempty archive");
  const auto names = parameter_names(draws.layout);
  const auto traces = all_traces(draws);
  std::vector<SummaryRow> rows;
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (names[j].rfind("R.", 0) == 0) continue;
    std::vector<double> xs;
    for (const auto& c : traces[j]) xs.insert(xs.end(), c.begin(), c.end());
    std::sort(xs.begin(), xs.end());
    rows.push_back({names[j], exact_mean(xs), lower_quantile(xs, 0.025), lower_quantile(xs, 0.25),
                    lower_quantile(xs, 0.75), lower_quantile(xs, 0.975)});
  }
  return rows;
}

/// Human-readable labels of the coefficient table rows.
inline const std::vector<std::pair<std::string, std::string>>& coefficient_labels() {
  static const std::vector<std::pair<std::string, std::string>> labels{
      {"beta.1", "beta.1 (Year)"},
      {"beta.2", "beta.2 (Mixed language)"},
      {"beta.3", "beta.3 (Own language)"},
      {"beta.4", "beta.4 (Solo female artist)"},
      {"beta.5", "beta.5 (Solo male artist)"},
      {"psi", "psi (Geographic effect)"},
      {"phi", "phi (Migration effect)"},
  };
  return labels;
}

// ---------------------------------------------------------------------------
// Model choice

/// K with the smallest DIC; ties go to the smaller K.
inline std::size_t select_model(std::span<const std::pair<std::size_t, double>> dic_by_k) {
  if (dic_by_k.empty()) throw std::invalid_argument("no models to compare");
  auto best = dic_by_k.front();
  for (const auto& entry : dic_by_k) {
    if (entry.second < best.second || (entry.second == best.second && entry.first < best.first)) {
      best = entry;
    }
  }
  return best.first;
}

// ---------------------------------------------------------------------------
// CSV output

inline std::string bias_report_csv(const BiasReport& rep) {
  std::string out = "voter,performer,mean,q025,q25,q75,q975,p_pos,p_neg\n";
  for (const auto& r : rep.rows) {
    out += r.voter + "," + r.performer + "," + csv::format_sig(r.mean) + "," +
           csv::format_sig(r.q025) + "," + csv::format_sig(r.q25) + "," + csv::format_sig(r.q75) +
           "," + csv::format_sig(r.q975) + "," + csv::format_sig(r.p_pos) + "," +
           csv::format_sig(r.p_neg) + "\n";
  }
  return out;
}

inline std::string membership_csv(const MembershipMatrix& m) {
  std::string out = "voter,k,probability\n";
  for (std::size_t v = 0; v < m.voters.size(); ++v) {
    for (std::size_t k = 0; k < m.clusters; ++k) {
      out += m.voters[v] + "," + std::to_string(k + 1) + "," + csv::format_sig(m.at(v, k)) + "\n";
    }
  }
  return out;
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "parameter,mean,q025,q25,q75,q975\n";
  for (const auto& r : rows) {
    out += r.parameter + "," + csv::format_sig(r.mean) + "," + csv::format_sig(r.q025) + "," +
           csv::format_sig(r.q25) + "," + csv::format_sig(r.q75) + "," + csv::format_sig(r.q975) +
           "\n";
  }
  return out;
}

/// Coefficient table: coefficient, posterior mean, 95% interval.
inline std::string coefficient_table_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "coefficient,mean,lower,upper\n";
  for (const auto& [name, label] : coefficient_labels()) {
    for (const auto& r : rows) {
      if (r.parameter != name) continue;
      out += label + "," + csv::format_sig(r.mean) + "," + csv::format_sig(r.q025) + "," +
             csv::format_sig(r.q975) + "\n";
    }
  }
  return out;
}

/// Standardized effects of every voter on one performer, for coefficient plots.
inline std::string coefplot_csv(const BiasReport& rep, const std::string& performer) {
  std::string out = "voter,mean,q025,q25,q75,q975\n";
  for (const auto& r : rep.rows) {
    if (r.performer != performer) continue;
    out += r.voter + "," + csv::format_sig(r.mean) + "," + csv::format_sig(r.q025) + "," +
           csv::format_sig(r.q25) + "," + csv::format_sig(r.q75) + "," + csv::format_sig(r.q975) +
           "\n";
  }
  return out;
}

}  // namespace ordvote
