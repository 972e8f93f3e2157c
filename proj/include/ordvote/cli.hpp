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

// Command-line front end. Subcommands: simulate, validate, fit, diagnose,
// compare, report. Exit codes: 0 success, 1 runtime failure, 2 data error,
// 3 configuration error.

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ordvote/analysis.hpp"
#include "ordvote/archive.hpp"
#include "ordvote/diagnostics.hpp"
#include "ordvote/io.hpp"
#include "ordvote/mcmc.hpp"

namespace ordvote::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kRuntimeError = 1, kDataError = 2, kConfigError = 3 };

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Manifest

/// Record of one run: configuration echo, seed, input digests, outputs.
/// Written last, so every file it names exists.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::optional<std::uint64_t> seed;
  std::map<std::string, std::string> input_digests;
  std::vector<std::string> outputs;
  double wall_clock_seconds = 0.0;

  std::string to_json() const {
    nlohmann::ordered_json j;
    j["version"] = kVersion;
    j["command"] = command;
    j["config"] = config;
    if (seed) j["seed"] = *seed;
    j["input_digests"] = input_digests;
    j["outputs"] = outputs;
    j["wall_clock_seconds"] = wall_clock_seconds;
    return j.dump(2) + "\n";
  }
};

inline std::string file_digest(const fs::path& path) {
  const auto text = csv::read_text(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline void write_manifest(const fs::path& path, const RunManifest& m) {
  csv::write_atomic(path, m.to_json());
}

// ---------------------------------------------------------------------------
// Shared option groups

struct DataOptions {
  std::string dir;
  std::string votes, covariates, adjacency, migration;
  std::vector<int> scores;
  int base_year = 1998;
  bool log1p_migration = false;

  void attach(CLI::App& app) {
    app.add_option("--data", dir, "Directory with votes.csv, covariates.csv, adjacency.csv, migration.csv");
    app.add_option("--votes", votes, "Votes CSV (overrides --data)");
    app.add_option("--covariates", covariates, "Covariates CSV (overrides --data)");
    app.add_option("--adjacency", adjacency, "Adjacency CSV (overrides --data)");
    app.add_option("--migration", migration, "Migration CSV (overrides --data)");
    app.add_option("--scores", scores, "Admissible scores in increasing order")->delimiter(',');
    app.add_option("--base-year", base_year, "Year mapped to year offset 0");
    app.add_flag("--log1p-migration", log1p_migration, "Use log1p of migration stocks");
  }

  InputBundle bundle() const {
    InputBundle b = dir.empty() ? InputBundle{} : InputBundle::in_directory(dir);
    if (!votes.empty()) b.votes = votes;
    if (!covariates.empty()) b.covariates = covariates;
    if (!adjacency.empty()) b.adjacency = adjacency;
    if (!migration.empty()) b.migration = migration;
    if (b.votes.empty() || b.covariates.empty()) {
      throw ConfigError("input files not given: use --data or --votes/--covariates");
    }
    if (!scores.empty()) b.score_values = scores;
    b.base_year = base_year;
    b.log1p_migration = log1p_migration;
    return b;
  }

  void digests(const InputBundle& b, RunManifest& m) const {
    for (const auto& p : {b.votes, b.covariates, b.adjacency, b.migration}) {
      if (!p.empty() && fs::exists(p)) m.input_digests[p.string()] = file_digest(p);
    }
  }
};

inline std::uint64_t resolve_seed(std::optional<std::uint64_t> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("ORDVOTE_SEED")) {
    auto v = csv::to_int(env);
    if (!v || *v < 0) throw ConfigError(std::string("ORDVOTE_SEED is not a seed: ") + env);
    return static_cast<std::uint64_t>(*v);
  }
  return 1998;
}

inline double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  std::string out;
  std::optional<std::uint64_t> seed;
  SyntheticSpec spec;
};

/// Parameter,value table of a true state, in archive column order.
inline std::string true_parameters_csv(const TrueParameters& truth, const Dataset& data) {
  const auto layout = ArchiveLayout::of(data, truth.state.clusters());
  const auto names = parameter_names(layout);
  const auto row = flatten(truth.state, 0.0);
  std::string out = "parameter,value\n";
  for (std::size_t j = 0; j + 1 < names.size(); ++j) {
    out += names[j] + "," + csv::format_exact(row[j]) + "\n";
  }
  return out;
}

inline int cmd_simulate(const SimulateOptions& opt, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto seed = resolve_seed(opt.seed);
  const auto truth = make_true_parameters(opt.spec, derive_seed(seed, 0));
  const auto data = simulate(truth, derive_seed(seed, 1));
  const fs::path dir = opt.out;
  fs::create_directories(dir);
  const auto bundle = write(data, dir);
  const auto truth_path = dir / "truth.csv";
  csv::write_atomic(truth_path, true_parameters_csv(truth, data));

  RunManifest m;
  m.command = "simulate";
  m.seed = seed;
  m.config["voters"] = std::to_string(opt.spec.voters);
  m.config["performers"] = std::to_string(opt.spec.performers);
  m.config["years"] = std::to_string(opt.spec.years);
  m.config["k"] = std::to_string(opt.spec.clusters);
  m.config["psi"] = csv::format_exact(opt.spec.psi);
  m.config["phi"] = csv::format_exact(opt.spec.phi);
  m.config["sigma_alpha"] = csv::format_exact(opt.spec.sigma_alpha);
  m.config["sigma_delta"] = csv::format_exact(opt.spec.sigma_delta);
  m.input_digests["dataset"] = dataset_digest(data);
  for (const auto& p : {bundle.votes, bundle.covariates, bundle.adjacency, bundle.migration}) {
    m.outputs.push_back(p.string());
  }
  m.outputs.push_back(truth_path.string());
  m.wall_clock_seconds = elapsed_since(t0);
  write_manifest(dir / "manifest.json", m);
  out << "simulated " << data.records.size() << " records over " << data.pair_count()
      << " pairs into " << dir.string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// validate

inline int cmd_validate(const DataOptions& opt, std::ostream& out, std::ostream& err) {
  const auto data = load(opt.bundle());
  const auto rep = validate(data);
  out << "voters=" << rep.voters << " performers=" << rep.performers << " pairs=" << rep.pairs
      << " records=" << rep.records << "\n";
  out << "occasions per pair: min=" << rep.min_occasions << " max=" << rep.max_occasions
      << (rep.balanced ? " (balanced)" : " (unbalanced)") << "\n";
  out << "structure-only pairs=" << rep.structure_only_pairs.size() << "\n";
  out << "digest=" << dataset_digest(data) << "\n";
  for (const auto& e : rep.errors) err << "error: " << e << "\n";
  return rep.ok() ? kOk : kDataError;
}

// ---------------------------------------------------------------------------
// fit

struct FitOptions {
  DataOptions data;
  std::string out;
  std::size_t k = 1;
  std::size_t chains = 2;
  std::size_t iters = 11000;
  std::size_t burnin = 1000;
  std::size_t thin = 20;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 0;
  bool pin_gamma = false;
  bool debug_checks = false;
};

inline int cmd_fit(const FitOptions& opt, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto bundle = opt.data.bundle();
  const auto data = load(bundle);

  SamplerConfig sc;
  sc.chains = opt.chains;
  sc.iterations = opt.iters;
  sc.burn_in = opt.burnin;
  sc.thin = opt.thin;
  sc.seed = resolve_seed(opt.seed);
  sc.jobs = opt.jobs;
  sc.check_invariants = opt.debug_checks;
  ModelConfig mc;
  mc.clusters = opt.k;
  mc.pin_gamma = opt.pin_gamma;
  mc.scale = data.scale;

  const auto draws = run(sc, mc, data);

  std::map<std::string, std::string> extra;
  if (draws.total_draws() > 0) {
    const auto d = dic(draws, data);
    extra["dic"] = csv::format_exact(d.dic);
    extra["p_d"] = csv::format_exact(d.p_d);
    extra["mean_deviance"] = csv::format_exact(d.mean_deviance);
    extra["plugin_deviance"] = csv::format_exact(d.plugin_deviance);
    out << "K=" << opt.k << " DIC=" << csv::format_sig(d.dic, 8) << " pD=" << csv::format_sig(d.p_d)
        << "\n";
  } else {
    out << "no draws stored (empty archive)\n";
  }
  const fs::path dir = opt.out;
  const auto written = write_archive(draws, dir, extra);

  RunManifest m;
  m.command = "fit";
  m.seed = sc.seed;
  m.config["k"] = std::to_string(opt.k);
  m.config["chains"] = std::to_string(sc.chains);
  m.config["iters"] = std::to_string(sc.iterations);
  m.config["burnin"] = std::to_string(sc.burn_in);
  m.config["thin"] = std::to_string(sc.thin);
  m.config["jobs"] = std::to_string(sc.jobs);
  m.config["pin_gamma"] = opt.pin_gamma ? "1" : "0";
  m.config["log1p_migration"] = bundle.log1p_migration ? "1" : "0";
  m.config["debug_checks"] = opt.debug_checks ? "1" : "0";
  opt.data.digests(bundle, m);
  m.input_digests["dataset"] = draws.dataset_digest;
  for (const auto& p : written) m.outputs.push_back(p.string());
  m.wall_clock_seconds = elapsed_since(t0);
  write_manifest(dir / "manifest.json", m);
  out << "wrote " << draws.chain_count() << " chains x " << draws.draws_per_chain() << " draws to "
      << dir.string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// diagnose

struct DiagnoseOptions {
  std::string archive;
  std::string out;
};

inline int cmd_diagnose(const DiagnoseOptions& opt, std::ostream& out) {
  const auto loaded = read_archive(opt.archive);
  if (loaded.draws.total_draws() == 0) throw DataError(opt.archive + ": archive has no draws");
  const auto draws = relabel(loaded.draws);
  const auto rows = diagnose_all(draws);
  const fs::path path = opt.out.empty() ? fs::path(opt.archive) / "diagnostics.csv" : fs::path(opt.out);
  csv::write_atomic(path, diagnostics_csv(rows));
  std::size_t warn = 0, degenerate = 0;
  for (const auto& r : rows) {
    if (r.flag == "warn") ++warn;
    if (r.flag == "degenerate") ++degenerate;
  }
  out << rows.size() << " parameters, " << warn << " flagged (PSRF > " << kPsrfWarn << " or ESS < "
      << kEssWarn << "), " << degenerate << " degenerate\n";
  out << "wrote " << path.string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// compare

struct CompareRow {
  std::string archive;
  std::size_t k = 1;
  double dic = 0.0;
  double p_d = 0.0;
  std::string digest;
};

struct Comparison {
  std::vector<CompareRow> rows;
  std::size_t selected_k = 1;
};

/// Chooses K by minimum DIC. All rows must come from the same dataset.
inline Comparison compare(std::vector<CompareRow> rows) {
  if (rows.empty()) throw ConfigError("compare needs at least one archive");
  for (const auto& r : rows) {
    if (r.digest != rows.front().digest) {
      throw DataError("archives were fit to different datasets: " + rows.front().archive + " (" +
                      rows.front().digest + ") vs " + r.archive + " (" + r.digest + ")");
    }
  }
  Comparison c;
  std::vector<std::pair<std::size_t, double>> by_k;
  for (const auto& r : rows) by_k.emplace_back(r.k, r.dic);
  c.selected_k = select_model(by_k);
  c.rows = std::move(rows);
  return c;
}

inline std::string comparison_csv(const Comparison& c) {
  std::string out = "archive,K,DIC,p_D,selected\n";
  for (const auto& r : c.rows) {
    out += r.archive + "," + std::to_string(r.k) + "," + csv::format_exact(r.dic) + "," +
           csv::format_exact(r.p_d) + "," + (r.k == c.selected_k ? "1" : "0") + "\n";
  }
  return out;
}

inline CompareRow compare_row_from_archive(const std::string& dir) {
  const auto meta = csv::parse_key_values(csv::read_text(fs::path(dir) / "meta.txt"));
  auto get = [&](const std::string& key) {
    auto it = meta.find(key);
    if (it == meta.end()) throw DataError(dir + ": archive metadata has no '" + key + "'");
    return it->second;
  };
  CompareRow r;
  r.archive = dir;
  auto k = csv::to_int(get("K"));
  auto d = csv::to_double(get("dic"));
  auto p = csv::to_double(get("p_d"));
  if (!k || !d || !p) throw DataError(dir + ": malformed DIC metadata");
  r.k = static_cast<std::size_t>(*k);
  r.dic = *d;
  r.p_d = *p;
  r.digest = get("dataset_digest");
  return r;
}

struct CompareOptions {
  std::vector<std::string> archives;
  std::string out;
};

inline int cmd_compare(const CompareOptions& opt, std::ostream& out) {
  std::vector<CompareRow> rows;
  for (const auto& a : opt.archives) rows.push_back(compare_row_from_archive(a));
  const auto c = compare(std::move(rows));
  out << "K\tDIC\tp_D\n";
  for (const auto& r : c.rows) {
    out << r.k << "\t" << csv::format_sig(r.dic, 8) << "\t" << csv::format_sig(r.p_d) << "\n";
  }
  out << "selected K=" << c.selected_k << "\n";
  if (!opt.out.empty()) {
    csv::write_atomic(opt.out, comparison_csv(c));
    out << "wrote " << opt.out << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// report

struct ReportOptions {
  std::string archive;
  std::string out;
  double threshold = 1.96;
};

inline int cmd_report(const ReportOptions& opt, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto loaded = read_archive(opt.archive);
  if (loaded.draws.total_draws() == 0) throw DataError(opt.archive + ": archive has no draws");
  const auto draws = relabel(loaded.draws);
  const fs::path dir = opt.out;
  fs::create_directories(dir / "coefplot");

  RunManifest m;
  m.command = "report";
  m.config["threshold"] = csv::format_exact(opt.threshold);
  m.input_digests["dataset"] = draws.dataset_digest;
  auto emit = [&](const fs::path& path, const std::string& text) {
    csv::write_atomic(path, text);
    m.outputs.push_back(path.string());
  };
  const auto bias = exceedance(draws, opt.threshold);
  const auto summary = summarize(draws);
  emit(dir / "membership.csv", membership_csv(membership(draws)));
  emit(dir / "bias_report.csv", bias_report_csv(bias));
  emit(dir / "summary.csv", summary_csv(summary));
  emit(dir / "coefficients.csv", coefficient_table_csv(summary));
  for (const auto& p : draws.layout.performers) {
    emit(dir / "coefplot" / (p + ".csv"), coefplot_csv(bias, p));
  }
  m.wall_clock_seconds = elapsed_since(t0);
  write_manifest(dir / "manifest.json", m);
  std::size_t flagged = 0;
  for (const auto& r : bias.rows) {
    if (r.p_pos > 0.5 || r.p_neg > 0.5) ++flagged;
  }
  out << bias.rows.size() << " pairs, " << flagged << " with exceedance probability above 0.5\n";
  out << "wrote " << m.outputs.size() << " files to " << dir.string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// Entry point

/// Expands `--config FILE` into command-line options of `sub`. Each
/// non-comment line is `key=value` with key a long option name; options
/// already on the command line take precedence. Unknown keys are errors.
inline std::vector<std::string> expand_config(CLI::App& sub, const std::vector<std::string>& args) {
  std::vector<std::string> kept;
  std::optional<std::string> file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 == args.size()) throw ConfigError("--config needs a file name");
      file = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      file = args[i].substr(9);
    } else {
      kept.push_back(args[i]);
    }
  }
  if (!file) return kept;
  std::ifstream in(*file);
  if (!in) throw ConfigError("cannot open config file " + *file);
  auto given = [&](const std::string& name) {
    return std::any_of(kept.begin(), kept.end(), [&](const std::string& a) {
      return a == name || a.rfind(name + "=", 0) == 0;
    });
  };
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = csv::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    const std::string where = *file + ":" + std::to_string(lineno) + ": ";
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key=value");
    const std::string key(csv::trim(text.substr(0, eq)));
    const std::string value(csv::trim(text.substr(eq + 1)));
    const std::string name = "--" + key;
    const CLI::Option* opt = key == "config" ? nullptr : sub.get_option_no_throw(name);
    if (opt == nullptr) throw ConfigError(where + "unknown key '" + key + "' for " + sub.get_name());
    if (given(name)) continue;
    if (opt->get_expected_max() == 0) {
      if (value == "1" || value == "true" || value == "yes" || value == "on") {
        kept.push_back(name);
      } else if (!(value == "0" || value == "false" || value == "no" || value == "off")) {
        throw ConfigError(where + "flag '" + key + "' needs true or false");
      }
    } else {
      kept.push_back(name);
      kept.push_back(value);
    }
  }
  return kept;
}

/// Parses `args` (without the program name) and runs one subcommand.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian ordinal regression for repeated voter-performer score panels", "ordvote"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  std::string config_file;
  auto setup = [&](CLI::App* sub) {
    sub->add_option("--config", config_file,
                    "Flat key=value configuration file (keys are long option names)");
  };

  std::optional<std::uint64_t> seed;

  SimulateOptions sim;
  auto* s_sim = app.add_subcommand("simulate", "Write a synthetic panel and its true parameters");
  setup(s_sim);
  s_sim->add_option("--out", sim.out, "Output directory")->required();
  s_sim->add_option("--seed", seed, "Random seed (falls back to ORDVOTE_SEED, then 1998)");
  s_sim->add_option("--voters", sim.spec.voters, "Number of voting countries");
  s_sim->add_option("--performers", sim.spec.performers, "Number of performing countries");
  s_sim->add_option("--years", sim.spec.years, "Number of contest years");
  s_sim->add_option("--k", sim.spec.clusters, "Number of latent regions");
  s_sim->add_option("--psi", sim.spec.psi, "Border effect");
  s_sim->add_option("--phi", sim.spec.phi, "Migration effect");
  s_sim->add_option("--sigma-alpha", sim.spec.sigma_alpha, "Pair-effect standard deviation");
  s_sim->add_option("--sigma-delta", sim.spec.sigma_delta, "Region-effect standard deviation");

  DataOptions val;
  auto* s_val = app.add_subcommand("validate", "Load input tables and report dataset checks");
  setup(s_val);
  val.attach(*s_val);

  FitOptions fit;
  auto* s_fit = app.add_subcommand("fit", "Run the sampler and write a draw archive");
  setup(s_fit);
  fit.data.attach(*s_fit);
  s_fit->add_option("--out", fit.out, "Archive directory")->required();
  s_fit->add_option("--k", fit.k, "Number of latent regions");
  s_fit->add_option("--chains", fit.chains, "Number of chains");
  s_fit->add_option("--iters", fit.iters, "Post-burn-in iterations per chain");
  s_fit->add_option("--burnin", fit.burnin, "Burn-in iterations per chain");
  s_fit->add_option("--thin", fit.thin, "Keep one draw every this many iterations");
  s_fit->add_option("--seed", seed, "Random seed (falls back to ORDVOTE_SEED, then 1998)");
  s_fit->add_option("--jobs", fit.jobs, "Chains run in parallel (0: one per chain)");
  s_fit->add_flag("--pin-gamma", fit.pin_gamma, "Fix the global intercept gamma at 0");
  s_fit->add_flag("--debug-checks", fit.debug_checks, "Check state invariants after every sweep");

  DiagnoseOptions diag;
  auto* s_diag = app.add_subcommand("diagnose", "PSRF, ESS and autocorrelation per parameter");
  setup(s_diag);
  s_diag->add_option("--archive", diag.archive, "Archive directory")->required();
  s_diag->add_option("--out", diag.out, "Output CSV (default: <archive>/diagnostics.csv)");

  CompareOptions cmp;
  auto* s_cmp = app.add_subcommand("compare", "Choose K by DIC across archives");
  setup(s_cmp);
  s_cmp->add_option("archives", cmp.archives, "Archive directories")->required();
  s_cmp->add_option("--out", cmp.out, "Comparison CSV");

  ReportOptions rep;
  auto* s_rep = app.add_subcommand("report", "Membership, bias report, summaries and coefficient plots");
  setup(s_rep);
  s_rep->add_option("--archive", rep.archive, "Archive directory")->required();
  s_rep->add_option("--out", rep.out, "Output directory")->required();
  s_rep->add_option("--threshold", rep.threshold, "Exceedance threshold for standardized effects");

  std::vector<std::string> expanded = args;
  if (!args.empty()) {
    if (auto* sub = app.get_subcommand_no_throw(args.front())) {
      try {
        expanded = expand_config(*sub, args);
      } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return kConfigError;
      }
    }
  }
  std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*s_sim) {
      sim.seed = seed;
      return cmd_simulate(sim, out);
    }
    if (*s_val) return cmd_validate(val, out, err);
    if (*s_fit) {
      fit.seed = seed;
      return cmd_fit(fit, out);
    }
    if (*s_diag) return cmd_diagnose(diag, out);
    if (*s_cmp) return cmd_compare(cmp, out);
    if (*s_rep) return cmd_report(rep, out);
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kConfigError;
}

}  // namespace ordvote::cli
