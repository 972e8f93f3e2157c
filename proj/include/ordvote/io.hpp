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

// Data ingestion, canonical writing, validation and synthetic generation.
//
// Input is four headered CSV files:
//
//   votes.csv       voter,performer,year,score
//   covariates.csv  performer,year,language,act_type
//   adjacency.csv   voter,performer,border          (border in {0,1})
//   migration.csv   voter,performer,stock
//
// `stock` is the number of nationals of the performer's country living in
// the voter's country. Pairs without a migration row have no recorded
// migration and contribute nothing to theta. Identifiers are opaque codes
// (ISO country codes in practice) and may not contain '.', ',' or spaces.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ordvote/core_model.hpp"
#include "ordvote/csv.hpp"
#include "ordvote/random.hpp"

namespace ordvote {

struct InputBundle {
  std::filesystem::path votes;
  std::filesystem::path covariates;
  std::filesystem::path adjacency;
  std::filesystem::path migration;
  std::optional<std::vector<int>> score_values;
  /// Replace each migration stock z by log1p(z) at load time.
  bool log1p_migration = false;
  int base_year = 1998;

  static InputBundle in_directory(const std::filesystem::path& dir) {
    InputBundle b;
    b.votes = dir / "votes.csv";
    b.covariates = dir / "covariates.csv";
    b.adjacency = dir / "adjacency.csv";
    b.migration = dir / "migration.csv";
    return b;
  }
};

inline bool valid_identifier(std::string_view id) {
  if (id.empty()) return false;
  return std::none_of(id.begin(), id.end(), [](char c) {
    return c == '.' || c == ',' || c == ' ' || c == '\t' || c == '"';
  });
}

inline Dataset load(const InputBundle& bundle) {
  Dataset d;
  if (bundle.score_values) d.scale = ScoreScale(*bundle.score_values);
  d.base_year = bundle.base_year;

  const csv::Table votes = csv::read(bundle.votes);
  if (votes.rows.empty()) throw DataError(bundle.votes.string() + ": no records");
  const auto cv = votes.column("voter");
  const auto cp = votes.column("performer");
  const auto cy = votes.column("year");
  const auto cs = votes.column("score");

  std::set<std::string> voter_codes;
  std::set<std::string> performer_codes;
  for (std::size_t i = 0; i < votes.rows.size(); ++i) {
    const auto& row = votes.rows[i];
    if (!valid_identifier(row[cv])) votes.fail(i, "malformed voter identifier '" + row[cv] + "'");
    if (!valid_identifier(row[cp])) {
      votes.fail(i, "malformed performer identifier '" + row[cp] + "'");
    }
    voter_codes.insert(row[cv]);
    performer_codes.insert(row[cp]);
  }
  d.voters.assign(voter_codes.begin(), voter_codes.end());
  d.performers.assign(performer_codes.begin(), performer_codes.end());
  auto index_in = [](const std::vector<std::string>& codes,
                     const std::string& id) -> std::optional<std::size_t> {
    auto it = std::lower_bound(codes.begin(), codes.end(), id);
    if (it == codes.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - codes.begin());
  };

  std::set<std::tuple<std::size_t, std::size_t, int>> seen;
  for (std::size_t i = 0; i < votes.rows.size(); ++i) {
    const auto& row = votes.rows[i];
    Record rec;
    rec.voter = *index_in(d.voters, row[cv]);
    rec.performer = *index_in(d.performers, row[cp]);
    if (row[cv] == row[cp]) votes.fail(i, "self-vote by " + row[cv] + " is not allowed");
    const auto year = csv::to_int(row[cy]);
    if (!year) votes.fail(i, "malformed year '" + row[cy] + "'");
    rec.year = static_cast<int>(*year);
    const auto score = csv::to_int(row[cs]);
    if (!score) votes.fail(i, "malformed score '" + row[cs] + "'");
    const auto category = d.scale.category_of(static_cast<int>(*score));
    if (!category) votes.fail(i, "score " + row[cs] + " is not in the score scale");
    rec.category = *category;
    if (!seen.insert({rec.voter, rec.performer, rec.year}).second) {
      votes.fail(i, "duplicate record for (" + row[cv] + ", " + row[cp] + ", " + row[cy] + ")");
    }
    d.records.push_back(rec);
  }
  std::sort(d.records.begin(), d.records.end(), [](const Record& a, const Record& b) {
    return std::tie(a.voter, a.performer, a.year) < std::tie(b.voter, b.performer, b.year);
  });

  const csv::Table cov = csv::read(bundle.covariates);
  const auto kp = cov.column("performer");
  const auto ky = cov.column("year");
  const auto kl = cov.column("language");
  const auto ka = cov.column("act_type");
  for (std::size_t i = 0; i < cov.rows.size(); ++i) {
    const auto& row = cov.rows[i];
    const auto p = index_in(d.performers, row[kp]);
    if (!p) cov.fail(i, "unknown performer '" + row[kp] + "'");
    const auto year = csv::to_int(row[ky]);
    if (!year) cov.fail(i, "malformed year '" + row[ky] + "'");
    const auto language = parse_language(row[kl]);
    if (!language) cov.fail(i, "unknown language '" + row[kl] + "' (English, Own, Mixed)");
    const auto act = parse_act_type(row[ka]);
    if (!act) cov.fail(i, "unknown act_type '" + row[ka] + "' (Group, FemaleSolo, MaleSolo)");
    const int offset = static_cast<int>(*year) - d.base_year;
    if (offset < 0) {
      cov.fail(i, "year " + row[ky] + " precedes base year " + std::to_string(d.base_year));
    }
    const auto [it, inserted] = d.covariates.emplace(std::make_pair(*p, static_cast<int>(*year)),
                                                     CovariateProfile{offset, *language, *act});
    if (!inserted) cov.fail(i, "duplicate covariate row");
  }

  d.pairs = PairStructure(d.voters.size(), d.performers.size());
  const csv::Table adj = csv::read(bundle.adjacency);
  {
    const auto av = adj.column("voter");
    const auto ap = adj.column("performer");
    const auto ab = adj.column("border");
    std::set<std::pair<std::size_t, std::size_t>> adj_seen;
    for (std::size_t i = 0; i < adj.rows.size(); ++i) {
      const auto& row = adj.rows[i];
      const auto v = index_in(d.voters, row[av]);
      if (!v) adj.fail(i, "unknown voter '" + row[av] + "'");
      const auto p = index_in(d.performers, row[ap]);
      if (!p) adj.fail(i, "unknown performer '" + row[ap] + "'");
      const auto b = csv::to_int(row[ab]);
      if (!b || (*b != 0 && *b != 1)) adj.fail(i, "border must be 0 or 1");
      if (!adj_seen.insert({*v, *p}).second) adj.fail(i, "duplicate adjacency row");
      d.pairs.border[d.pairs.index(*v, *p)] = static_cast<std::uint8_t>(*b);
    }
  }
  const csv::Table mig = csv::read(bundle.migration);
  {
    const auto mv = mig.column("voter");
    const auto mp = mig.column("performer");
    const auto ms = mig.column("stock");
    for (std::size_t i = 0; i < mig.rows.size(); ++i) {
      const auto& row = mig.rows[i];
      const auto v = index_in(d.voters, row[mv]);
      if (!v) mig.fail(i, "unknown voter '" + row[mv] + "'");
      const auto p = index_in(d.performers, row[mp]);
      if (!p) mig.fail(i, "unknown performer '" + row[mp] + "'");
      const auto z = csv::to_double(row[ms]);
      if (!z || !std::isfinite(*z) || *z < 0) mig.fail(i, "stock must be a finite value >= 0");
      if (d.pairs.migration_present[d.pairs.index(*v, *p)]) {
        mig.fail(i, "duplicate migration row");
      }
      d.pairs.set_migration(*v, *p, bundle.log1p_migration ? std::log1p(*z) : *z);
    }
  }
  d.finalize();
  return d;
}

// ---------------------------------------------------------------------------
// Canonical writer

struct CanonicalTables {
  std::string votes;
  std::string covariates;
  std::string adjacency;
  std::string migration;
};

inline CanonicalTables canonical_tables(const Dataset& d) {
  CanonicalTables t;
  t.votes = "voter,performer,year,score\n";
  auto recs = d.records;
  std::sort(recs.begin(), recs.end(), [&](const Record& a, const Record& b) {
    return std::tie(d.voters[a.voter], d.performers[a.performer], a.year) <
           std::tie(d.voters[b.voter], d.performers[b.performer], b.year);
  });
  for (const auto& r : recs) {
    t.votes += d.voters[r.voter] + "," + d.performers[r.performer] + "," +
               std::to_string(r.year) + "," + std::to_string(d.scale.score_of(r.category)) + "\n";
  }
  t.covariates = "performer,year,language,act_type\n";
  std::vector<std::pair<std::pair<std::string, int>, CovariateProfile>> cov;
  for (const auto& [key, prof] : d.covariates) cov.push_back({{d.performers[key.first], key.second}, prof});
  std::sort(cov.begin(), cov.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [key, prof] : cov) {
    t.covariates += key.first + "," + std::to_string(key.second) + "," + to_string(prof.language) +
                    "," + to_string(prof.act_type) + "\n";
  }
  t.adjacency = "voter,performer,border\n";
  t.migration = "voter,performer,stock\n";
  std::vector<std::size_t> vo(d.voters.size());
  std::vector<std::size_t> po(d.performers.size());
  for (std::size_t i = 0; i < vo.size(); ++i) vo[i] = i;
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = i;
  std::sort(vo.begin(), vo.end(), [&](auto a, auto b) { return d.voters[a] < d.voters[b]; });
  std::sort(po.begin(), po.end(), [&](auto a, auto b) { return d.performers[a] < d.performers[b]; });
  for (std::size_t v : vo) {
    for (std::size_t p : po) {
      const auto i = d.pairs.index(v, p);
      if (d.pairs.border[i]) t.adjacency += d.voters[v] + "," + d.performers[p] + ",1\n";
      if (d.pairs.migration_present[i]) {
        t.migration += d.voters[v] + "," + d.performers[p] + "," +
                       csv::format_exact(d.pairs.migration[i]) + "\n";
      }
    }
  }
  return t;
}

/// Writes the four canonical CSV files into `dir` (created if needed).
inline InputBundle write(const Dataset& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto t = canonical_tables(d);
  const auto bundle = InputBundle::in_directory(dir);
  csv::write_atomic(bundle.votes, t.votes);
  csv::write_atomic(bundle.covariates, t.covariates);
  csv::write_atomic(bundle.adjacency, t.adjacency);
  csv::write_atomic(bundle.migration, t.migration);
  return bundle;
}

/// 64-bit FNV-1a of the canonical tables, as 16 hex digits.
inline std::string dataset_digest(const Dataset& d) {
  const auto t = canonical_tables(d);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    h ^= 0xff;
    h *= 0x100000001b3ULL;
  };
  std::string scale;
  for (int v : d.scale.values()) scale += std::to_string(v) + " ";
  feed(scale);
  feed(std::to_string(d.base_year));
  feed(t.votes);
  feed(t.covariates);
  feed(t.adjacency);
  feed(t.migration);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationReport {
  std::size_t voters = 0;
  std::size_t performers = 0;
  std::size_t pairs = 0;
  std::size_t records = 0;
  std::size_t min_occasions = 0;
  std::size_t max_occasions = 0;
  /// occasion_histogram[t] = number of observed pairs with T_vp = t.
  std::vector<std::size_t> occasion_histogram;
  bool balanced = true;
  std::size_t missing_covariates = 0;
  /// Pairs with a border or migration entry but no votes.
  std::vector<std::pair<std::string, std::string>> structure_only_pairs;
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
};

/// Report-only check of every Dataset invariant; never throws.
inline ValidationReport validate(const Dataset& d) {
  ValidationReport rep;
  rep.voters = d.voters.size();
  rep.performers = d.performers.size();
  rep.records = d.records.size();
  if (d.records.empty()) rep.errors.push_back("no records");
  if (d.pairs.voters != d.voters.size() || d.pairs.performers != d.performers.size()) {
    rep.errors.push_back("pair structure dimensions do not match");
    return rep;
  }
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> counts;
  std::set<std::tuple<std::size_t, std::size_t, int>> seen;
  for (std::size_t r = 0; r < d.records.size(); ++r) {
    const auto& rec = d.records[r];
    const std::string where = "record " + std::to_string(r) + ": ";
    if (rec.voter >= d.voters.size() || rec.performer >= d.performers.size()) {
      rep.errors.push_back(where + "identifier out of range");
      continue;
    }
    if (d.voters[rec.voter] == d.performers[rec.performer]) {
      rep.errors.push_back(where + "self-vote");
    }
    if (rec.category >= d.scale.size()) rep.errors.push_back(where + "category out of range");
    if (!seen.insert({rec.voter, rec.performer, rec.year}).second) {
      rep.errors.push_back(where + "duplicate record");
    }
    if (!d.covariates.contains({rec.performer, rec.year})) {
      ++rep.missing_covariates;
      rep.errors.push_back(where + "missing covariates");
    }
    ++counts[{rec.voter, rec.performer}];
  }
  rep.pairs = counts.size();
  if (d.finalized() && d.pair_count() != rep.pairs) {
    rep.errors.push_back("pair index disagrees with the distinct (voter, performer) count");
  }
  bool first = true;
  for (const auto& [key, n] : counts) {
    if (first) {
      rep.min_occasions = rep.max_occasions = n;
      first = false;
    }
    rep.min_occasions = std::min(rep.min_occasions, n);
    rep.max_occasions = std::max(rep.max_occasions, n);
    if (rep.occasion_histogram.size() <= n) rep.occasion_histogram.resize(n + 1, 0);
    ++rep.occasion_histogram[n];
  }
  rep.balanced = rep.min_occasions == rep.max_occasions;
  for (std::size_t v = 0; v < d.voters.size(); ++v) {
    for (std::size_t p = 0; p < d.performers.size(); ++p) {
      const auto i = d.pairs.index(v, p);
      if ((d.pairs.border[i] || d.pairs.migration_present[i]) && !counts.contains({v, p})) {
        rep.structure_only_pairs.emplace_back(d.voters[v], d.performers[p]);
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Synthetic data

/// Fixed design of a synthetic panel. observed_pairs must be sorted by
/// (voter, performer) and exclude self-pairs; every observed pair votes in
/// every year of `years`.
struct SimulationDesign {
  ScoreScale scale;
  int base_year = 1998;
  std::vector<std::string> voters;
  std::vector<std::string> performers;
  std::vector<int> years;
  std::map<std::pair<std::size_t, int>, CovariateProfile> covariates;
  PairStructure pairs;
  std::vector<std::pair<std::size_t, std::size_t>> observed_pairs;
};

struct TrueParameters {
  ParameterState state;
  SimulationDesign design;
};

/// Draws one score per (observed pair, year) from the cumulative-logit model
/// at the true parameters.
inline Dataset simulate(const TrueParameters& truth, std::uint64_t seed) {
  const auto& design = truth.design;
  const auto& state = truth.state;
  if (state.alpha.size() != design.observed_pairs.size()) {
    throw ConfigError("true alpha must have one entry per observed pair");
  }
  Dataset d;
  d.scale = design.scale;
  d.base_year = design.base_year;
  d.voters = design.voters;
  d.performers = design.performers;
  d.covariates = design.covariates;
  d.pairs = design.pairs;
  Rng rng(seed);
  for (std::size_t h = 0; h < design.observed_pairs.size(); ++h) {
    const auto [v, p] = design.observed_pairs[h];
    for (int year : design.years) {
      const auto& profile = design.covariates.at({p, year});
      const double mu = fixed_effects(state.beta, profile.design()) + state.alpha[h];
      const auto probs = category_probs(state.cutpoints, mu);
      d.records.push_back({v, p, year, rng.categorical(probs)});
    }
  }
  d.finalize();
  return d;
}

/// Knobs for generating a synthetic panel and its true parameters.
struct SyntheticSpec {
  std::size_t voters = 10;
  /// Performers are the first `performers` voters.
  std::size_t performers = 8;
  std::size_t years = 15;
  std::size_t clusters = 2;
  int first_year = 1998;
  ScoreScale scale;
  std::array<double, kBetaCount> beta{-0.034, 0.062, -0.131, 0.232, -0.067};
  double gamma = 0.0;
  double psi = 1.21;
  double phi = 0.101;
  double sigma_alpha = 0.5;
  double sigma_delta = 1.0;
  /// Empty: logits of cumulative mass 0.5 at the lowest score, the rest even.
  std::vector<double> cutpoints;
  /// Empty: regions drawn uniformly.
  std::vector<std::size_t> regions;
  /// Empty: delta drawn from Normal(0, sigma_delta^2). Row-major K x P.
  std::vector<double> delta;
  double border_probability = 0.3;
  double migration_probability = 0.6;
  /// Stocks are exp(Normal(log_mean, log_sd^2)).
  double migration_log_mean = 1.0;
  double migration_log_sd = 0.75;
};

inline std::string country_code(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "C%02zu", i + 1);
  return buf;
}

inline TrueParameters make_true_parameters(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.performers > spec.voters) throw ConfigError("performers must be a subset of voters");
  if (spec.clusters < 1 || spec.years < 1) throw ConfigError("need K >= 1 and at least one year");
  Rng rng(seed);
  TrueParameters truth;
  auto& design = truth.design;
  design.scale = spec.scale;
  design.base_year = spec.first_year;
  for (std::size_t v = 0; v < spec.voters; ++v) design.voters.push_back(country_code(v));
  for (std::size_t p = 0; p < spec.performers; ++p) design.performers.push_back(country_code(p));
  for (std::size_t t = 0; t < spec.years; ++t) design.years.push_back(spec.first_year + static_cast<int>(t));

  const double lang_w[] = {0.5, 0.35, 0.15};
  const double act_w[] = {0.4, 0.35, 0.25};
  for (std::size_t p = 0; p < spec.performers; ++p) {
    for (int year : design.years) {
      CovariateProfile prof;
      prof.year_offset = year - spec.first_year;
      prof.language = static_cast<Language>(rng.categorical(lang_w));
      prof.act_type = static_cast<ActType>(rng.categorical(act_w));
      design.covariates[{p, year}] = prof;
    }
  }

  design.pairs = PairStructure(spec.voters, spec.performers);
  for (std::size_t v = 0; v < spec.voters; ++v) {
    for (std::size_t p = 0; p < spec.performers; ++p) {
      if (v == p) continue;
      // Borders are symmetric between two performing countries.
      if (v < spec.performers && p < v) {
        design.pairs.border[design.pairs.index(v, p)] = design.pairs.border[design.pairs.index(p, v)];
      } else {
        design.pairs.border[design.pairs.index(v, p)] = rng.uniform() < spec.border_probability;
      }
      if (rng.uniform() < spec.migration_probability) {
        design.pairs.set_migration(v, p, std::exp(rng.normal(spec.migration_log_mean,
                                                              spec.migration_log_sd)));
      }
      design.observed_pairs.emplace_back(v, p);
    }
  }

  auto& s = truth.state;
  const std::size_t K = spec.clusters;
  if (spec.cutpoints.empty()) {
    const std::size_t n = spec.scale.cutpoint_count();
    for (std::size_t c = 0; c < n; ++c) {
      const double cum = 0.5 + 0.5 * static_cast<double>(c) / static_cast<double>(n);
      s.cutpoints.push_back(std::log(cum / (1.0 - cum)));
    }
  } else {
    s.cutpoints = spec.cutpoints;
  }
  s.beta = spec.beta;
  s.gamma = spec.gamma;
  s.psi = spec.psi;
  s.phi = spec.phi;
  s.sigma_alpha = spec.sigma_alpha;
  s.sigma_delta = spec.sigma_delta;
  s.zeta.assign(K, 1.0 / static_cast<double>(K));
  if (spec.delta.empty()) {
    s.delta.resize(K * spec.performers);
    for (double& x : s.delta) x = rng.normal(0.0, spec.sigma_delta);
  } else {
    if (spec.delta.size() != K * spec.performers) throw ConfigError("delta must be K x P");
    s.delta = spec.delta;
  }
  if (spec.regions.empty()) {
    s.regions.resize(spec.voters);
    for (auto& r : s.regions) r = rng.uniform_index(K);
  } else {
    if (spec.regions.size() != spec.voters) throw ConfigError("regions must have V entries");
    s.regions = spec.regions;
  }
  s.alpha.resize(design.observed_pairs.size());
  for (std::size_t h = 0; h < design.observed_pairs.size(); ++h) {
    const auto [v, p] = design.observed_pairs[h];
    s.alpha[h] = rng.normal(theta_mean(s, v, p, design.pairs), spec.sigma_alpha);
  }
  return truth;
}

}  // namespace ordvote
