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

// Draw archive on disk: a directory holding chain1.csv ... chainN.csv and a
// key=value sidecar meta.txt. Each chain CSV has one row per stored draw and
// the columns
//
//   lambda.1 .. lambda.<S-1>
//   beta.1 .. beta.5          (year, mixed language, own language,
//                              female solo, male solo)
//   alpha.<voter>.<performer> for every observed pair
//   gamma
//   delta.<k>.<performer>     k = 1..K
//   psi, phi
//   R.<voter>                 region, 1-based
//   zeta.<k>
//   sigma.alpha, sigma.delta
//   deviance
//
// Values are written in shortest round-trip form, so reading an archive
// back reproduces the draws bit for bit.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ordvote/csv.hpp"
#include "ordvote/mcmc.hpp"

namespace ordvote {

inline std::vector<std::string> parameter_names(const ArchiveLayout& layout) {
  std::vector<std::string> names;
  for (std::size_t s = 0; s < layout.cutpoints; ++s) names.push_back("lambda." + std::to_string(s + 1));
  for (std::size_t j = 0; j < kBetaCount; ++j) names.push_back("beta." + std::to_string(j + 1));
  for (const auto& [v, p] : layout.observed_pairs) {
    names.push_back("alpha." + layout.voters[v] + "." + layout.performers[p]);
  }
  names.push_back("gamma");
  for (std::size_t k = 0; k < layout.clusters; ++k) {
    for (const auto& p : layout.performers) names.push_back("delta." + std::to_string(k + 1) + "." + p);
  }
  names.push_back("psi");
  names.push_back("phi");
  for (const auto& v : layout.voters) names.push_back("R." + v);
  for (std::size_t k = 0; k < layout.clusters; ++k) names.push_back("zeta." + std::to_string(k + 1));
  names.push_back("sigma.alpha");
  names.push_back("sigma.delta");
  names.push_back("deviance");
  return names;
}

/// One archive row, aligned with parameter_names().
inline std::vector<double> flatten(const ParameterState& s, double deviance) {
  std::vector<double> row;
  row.insert(row.end(), s.cutpoints.begin(), s.cutpoints.end());
  row.insert(row.end(), s.beta.begin(), s.beta.end());
  row.insert(row.end(), s.alpha.begin(), s.alpha.end());
  row.push_back(s.gamma);
  row.insert(row.end(), s.delta.begin(), s.delta.end());
  row.push_back(s.psi);
  row.push_back(s.phi);
  for (auto r : s.regions) row.push_back(static_cast<double>(r + 1));
  row.insert(row.end(), s.zeta.begin(), s.zeta.end());
  row.push_back(s.sigma_alpha);
  row.push_back(s.sigma_delta);
  row.push_back(deviance);
  return row;
}

inline ParameterState unflatten(const ArchiveLayout& layout, std::span<const double> row,
                                double* deviance = nullptr) {
  ParameterState s;
  std::size_t i = 0;
  auto take = [&](std::size_t n) {
    std::vector<double> out(row.begin() + static_cast<std::ptrdiff_t>(i),
                            row.begin() + static_cast<std::ptrdiff_t>(i + n));
    i += n;
    return out;
  };
  s.cutpoints = take(layout.cutpoints);
  const auto beta = take(kBetaCount);
  std::copy(beta.begin(), beta.end(), s.beta.begin());
  s.alpha = take(layout.observed_pairs.size());
  s.gamma = row[i++];
  s.delta = take(layout.clusters * layout.performers.size());
  s.psi = row[i++];
  s.phi = row[i++];
  for (double r : take(layout.voters.size())) s.regions.push_back(static_cast<std::size_t>(r) - 1);
  s.zeta = take(layout.clusters);
  s.sigma_alpha = row[i++];
  s.sigma_delta = row[i++];
  if (deviance) *deviance = row[i];
  return s;
}

/// Scalar trace of column `column` (index into parameter_names), per chain.
inline std::vector<std::vector<double>> column_traces(const PosteriorDraws& draws,
                                                      std::size_t column) {
  std::vector<std::vector<double>> out(draws.chain_count());
  for (std::size_t c = 0; c < draws.chain_count(); ++c) {
    out[c].reserve(draws.chains[c].size());
    for (std::size_t i = 0; i < draws.chains[c].size(); ++i) {
      out[c].push_back(flatten(draws.chains[c][i], draws.deviance[c][i])[column]);
    }
  }
  return out;
}

/// Every column's traces at once: result[column][chain][draw].
inline std::vector<std::vector<std::vector<double>>> all_traces(const PosteriorDraws& draws) {
  const auto names = parameter_names(draws.layout);
  std::vector<std::vector<std::vector<double>>> out(
      names.size(), std::vector<std::vector<double>>(draws.chain_count()));
  for (std::size_t c = 0; c < draws.chain_count(); ++c) {
    for (std::size_t i = 0; i < draws.chains[c].size(); ++i) {
      const auto row = flatten(draws.chains[c][i], draws.deviance[c][i]);
      for (std::size_t j = 0; j < row.size(); ++j) out[j][c].push_back(row[j]);
    }
  }
  return out;
}

inline std::string chain_csv(const PosteriorDraws& draws, std::size_t chain) {
  const auto names = parameter_names(draws.layout);
  std::string text;
  for (std::size_t j = 0; j < names.size(); ++j) text += (j ? "," : "") + names[j];
  text += "\n";
  for (std::size_t i = 0; i < draws.chains[chain].size(); ++i) {
    const auto row = flatten(draws.chains[chain][i], draws.deviance[chain][i]);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) text += ',';
      text += csv::format_exact(row[j]);
    }
    text += "\n";
  }
  return text;
}

inline std::string join_numbers(std::span<const double> xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? " " : "") + csv::format_exact(xs[i]);
  return out;
}

inline std::string metadata_text(const PosteriorDraws& draws,
                                 const std::map<std::string, std::string>& extra = {}) {
  const auto& sc = draws.sampler;
  const auto& mc = draws.model;
  std::map<std::string, std::string> kv = extra;
  kv["format"] = "ordvote-draws-1";
  kv["seed"] = std::to_string(sc.seed);
  kv["chains"] = std::to_string(sc.chains);
  kv["iterations"] = std::to_string(sc.iterations);
  kv["burn_in"] = std::to_string(sc.burn_in);
  kv["thin"] = std::to_string(sc.thin);
  kv["adapt_window"] = std::to_string(sc.adaptation_iterations());
  kv["iterations_include_burn_in"] = sc.iterations_include_burn_in ? "1" : "0";
  kv["target_acceptance"] = csv::format_exact(sc.target_acceptance);
  kv["draws_per_chain"] = std::to_string(draws.draws_per_chain());
  kv["K"] = std::to_string(mc.clusters);
  kv["cutpoint_prior_variance"] = csv::format_exact(mc.cutpoint_prior_variance);
  kv["beta_prior_sd"] = csv::format_exact(mc.beta_prior_sd);
  kv["effect_prior_variance"] = csv::format_exact(mc.effect_prior_variance);
  std::vector<double> conc(mc.clusters);
  for (std::size_t k = 0; k < conc.size(); ++k) conc[k] = mc.concentration(k);
  kv["dirichlet_concentration"] = join_numbers(conc);
  kv["log_sd_lower"] = csv::format_exact(mc.log_sd_lower);
  kv["log_sd_upper"] = csv::format_exact(mc.log_sd_upper);
  kv["pin_gamma"] = mc.pin_gamma ? "1" : "0";
  std::string scale;
  for (int v : mc.scale.values()) scale += (scale.empty() ? "" : " ") + std::to_string(v);
  kv["scale"] = scale;
  kv["dataset_digest"] = draws.dataset_digest;
  std::string text;
  for (const auto& [k, v] : kv) text += k + "=" + v + "\n";
  return text;
}

/// Writes chain CSVs and meta.txt into `dir`; returns the written paths.
inline std::vector<std::filesystem::path> write_archive(
    const PosteriorDraws& draws, const std::filesystem::path& dir,
    const std::map<std::string, std::string>& extra_metadata = {}) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (std::size_t c = 0; c < draws.chain_count(); ++c) {
    auto path = dir / ("chain" + std::to_string(c + 1) + ".csv");
    csv::write_atomic(path, chain_csv(draws, c));
    written.push_back(path);
  }
  auto meta = dir / "meta.txt";
  csv::write_atomic(meta, metadata_text(draws, extra_metadata));
  written.push_back(meta);
  return written;
}

struct LoadedArchive {
  PosteriorDraws draws;
  std::map<std::string, std::string> metadata;
};

namespace detail {

inline std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

inline ArchiveLayout layout_from_header(const std::vector<std::string>& header,
                                        const std::string& source) {
  ArchiveLayout layout;
  std::vector<std::pair<std::string, std::string>> pair_codes;
  for (const auto& name : header) {
    const auto parts = split_on(name, '.');
    if (parts[0] == "lambda") ++layout.cutpoints;
    else if (parts[0] == "alpha" && parts.size() == 3) pair_codes.emplace_back(parts[1], parts[2]);
    else if (parts[0] == "R" && parts.size() == 2) layout.voters.push_back(parts[1]);
    else if (parts[0] == "delta" && parts.size() == 3 && parts[1] == "1") layout.performers.push_back(parts[2]);
  }
  layout.clusters = 0;
  for (const auto& name : header) {
    if (name.rfind("zeta.", 0) == 0) ++layout.clusters;
  }
  auto index_of = [&](const std::vector<std::string>& codes, const std::string& id) {
    auto it = std::find(codes.begin(), codes.end(), id);
    if (it == codes.end()) throw DataError(source + ": alpha column names unknown identifier " + id);
    return static_cast<std::size_t>(it - codes.begin());
  };
  for (const auto& [v, p] : pair_codes) {
    layout.observed_pairs.emplace_back(index_of(layout.voters, v), index_of(layout.performers, p));
  }
  if (parameter_names(layout) != header) throw DataError(source + ": unexpected column layout");
  return layout;
}

inline std::vector<double> parse_numbers(const std::string& s) {
  std::vector<double> out;
  for (const auto& tok : split_on(s, ' ')) {
    if (tok.empty()) continue;
    auto v = csv::to_double(tok);
    if (!v) throw DataError("malformed number '" + tok + "' in metadata");
    out.push_back(*v);
  }
  return out;
}

}  // namespace detail

inline LoadedArchive read_archive(const std::filesystem::path& dir) {
  LoadedArchive out;
  const auto meta_path = dir / "meta.txt";
  out.metadata = csv::parse_key_values(csv::read_text(meta_path));
  auto& md = out.metadata;
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = md.find(key);
    if (it == md.end()) throw DataError(meta_path.string() + ": missing key '" + key + "'");
    return it->second;
  };
  auto get_size = [&](const std::string& key) {
    auto v = csv::to_int(get(key));
    if (!v || *v < 0) throw DataError(meta_path.string() + ": bad value for '" + key + "'");
    return static_cast<std::size_t>(*v);
  };
  auto get_double = [&](const std::string& key) {
    auto v = csv::to_double(get(key));
    if (!v) throw DataError(meta_path.string() + ": bad value for '" + key + "'");
    return *v;
  };

  auto& draws = out.draws;
  auto& sc = draws.sampler;
  sc.seed = std::stoull(get("seed"));
  sc.chains = get_size("chains");
  sc.iterations = get_size("iterations");
  sc.burn_in = get_size("burn_in");
  sc.thin = get_size("thin");
  sc.adapt_window = get_size("adapt_window");
  sc.iterations_include_burn_in = get("iterations_include_burn_in") == "1";
  sc.target_acceptance = get_double("target_acceptance");
  auto& mc = draws.model;
  mc.clusters = get_size("K");
  mc.cutpoint_prior_variance = get_double("cutpoint_prior_variance");
  mc.beta_prior_sd = get_double("beta_prior_sd");
  mc.effect_prior_variance = get_double("effect_prior_variance");
  mc.dirichlet_concentration = detail::parse_numbers(get("dirichlet_concentration"));
  mc.log_sd_lower = get_double("log_sd_lower");
  mc.log_sd_upper = get_double("log_sd_upper");
  mc.pin_gamma = get("pin_gamma") == "1";
  std::vector<int> scale;
  for (double v : detail::parse_numbers(get("scale"))) scale.push_back(static_cast<int>(v));
  mc.scale = ScoreScale(scale);
  draws.dataset_digest = get("dataset_digest");

  draws.chains.resize(sc.chains);
  draws.deviance.resize(sc.chains);
  for (std::size_t c = 0; c < sc.chains; ++c) {
    const auto table = csv::read(dir / ("chain" + std::to_string(c + 1) + ".csv"));
    if (c == 0) {
      draws.layout = detail::layout_from_header(table.header, table.source);
      if (draws.layout.clusters != mc.clusters) throw DataError(table.source + ": K mismatch");
    } else if (parameter_names(draws.layout) != table.header) {
      throw DataError(table.source + ": column layout differs from chain1.csv");
    }
    std::vector<double> row(table.header.size());
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      for (std::size_t j = 0; j < row.size(); ++j) {
        auto v = csv::to_double(table.rows[i][j]);
        if (!v) table.fail(i, "malformed number '" + table.rows[i][j] + "'");
        row[j] = *v;
      }
      double dev = 0.0;
      draws.chains[c].push_back(unflatten(draws.layout, row, &dev));
      draws.deviance[c].push_back(dev);
    }
  }
  for (const auto& ch : draws.chains) {
    if (ch.size() != draws.chains.front().size()) throw DataError(dir.string() + ": chain lengths differ");
  }
  return out;
}

}  // namespace ordvote
