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
#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

namespace ordvote {
namespace {

using testing::Gen;

std::vector<double> normal_trace(Gen& g, std::size_t n, double mean, double sd) {
  std::vector<double> xs(n);
  for (double& x : xs) x = g.normal(mean, sd);
  return xs;
}

std::vector<double> ar1(Gen& g, std::size_t n, double rho) {
  std::vector<double> xs(n);
  double x = g.normal() / std::sqrt(1.0 - rho * rho);
  for (double& out : xs) {
    out = x;
    x = rho * x + g.normal();
  }
  return xs;
}

// Two-pass textbook PSRF written out independently of the library.
double psrf_oracle(const std::vector<std::vector<double>>& chains) {
  const double n = static_cast<double>(chains[0].size());
  const double m = static_cast<double>(chains.size());
  std::vector<double> means;
  double W = 0.0;
  for (const auto& c : chains) {
    double mu = 0.0;
    for (double x : c) mu += x / n;
    double ss = 0.0;
    for (double x : c) ss += (x - mu) * (x - mu);
    W += ss / (n - 1.0) / m;
    means.push_back(mu);
  }
  double grand = 0.0;
  for (double mu : means) grand += mu / m;
  double B = 0.0;
  for (double mu : means) B += (mu - grand) * (mu - grand);
  B *= n / (m - 1.0);
  return std::sqrt(((n - 1.0) / n * W + B / n) / W);
}

TEST(GelmanRubin, ExactCopiesGiveLowerBound) {
  Gen g(1);
  const auto t = normal_trace(g, 200, 0.0, 1.0);
  std::vector<std::vector<double>> chains{t, t};
  const auto r = gelman_rubin(chains);
  EXPECT_FALSE(r.degenerate);
  EXPECT_NEAR(r.value, std::sqrt(199.0 / 200.0), 1e-14);
  EXPECT_LT(r.value, 1.0);
}

TEST(GelmanRubin, SeparatedChainsMatchDirectFormula) {
  Gen g(2);
  std::vector<std::vector<double>> chains{normal_trace(g, 1000, 0.0, 1.0),
                                          normal_trace(g, 1000, 10.0, 1.0)};
  const auto r = gelman_rubin(chains);
  EXPECT_NEAR(r.value, psrf_oracle(chains), 1e-12);
  EXPECT_GT(r.value, 1.1);
  EXPECT_GT(r.value, 5.0);
}

TEST(GelmanRubin, SameDistributionRarelyExceeds105) {
  Gen g(3);
  int above = 0;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<std::vector<double>> chains{normal_trace(g, 1000, 0.0, 1.0),
                                            normal_trace(g, 1000, 0.0, 1.0)};
    const auto r = gelman_rubin(chains);
    EXPECT_NEAR(r.value, psrf_oracle(chains), 1e-12);
    if (r.value >= 1.05) ++above;
  }
  EXPECT_EQ(above, 0);
}

TEST(GelmanRubin, AffineInvariance) {
  Gen g(4);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t m = 2 + g.index(3);
    const std::size_t n = 10 + g.index(200);
    std::vector<std::vector<double>> chains;
    for (std::size_t c = 0; c < m; ++c) chains.push_back(normal_trace(g, n, g.normal(), g.uniform(0.5, 2)));
    const double a = g.uniform(0.01, 100.0) * (g.coin() ? 1 : -1);
    const double b = g.normal(0.0, 50.0);
    auto moved = chains;
    for (auto& c : moved) {
      for (double& x : c) x = a * x + b;
    }
    EXPECT_NEAR(gelman_rubin(chains).value, gelman_rubin(moved).value, 1e-10);
  }
}

TEST(GelmanRubin, NeverBelowLowerBound) {
  Gen g(5);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 10 + g.index(100);
    std::vector<std::vector<double>> chains{normal_trace(g, n, 0, 1), normal_trace(g, n, g.normal(), 1)};
    EXPECT_GE(gelman_rubin(chains).value, std::sqrt((n - 1.0) / n) - 1e-15);
  }
}

TEST(GelmanRubin, ConstantTracesAreDegenerateNotNaN) {
  std::vector<std::vector<double>> same{std::vector<double>(20, 3.0), std::vector<double>(20, 3.0)};
  auto r = gelman_rubin(same);
  EXPECT_TRUE(r.degenerate);
  EXPECT_FALSE(std::isnan(r.value));
  std::vector<std::vector<double>> apart{std::vector<double>(20, 3.0), std::vector<double>(20, 4.0)};
  r = gelman_rubin(apart);
  EXPECT_TRUE(r.degenerate);
  EXPECT_FALSE(std::isnan(r.value));
}

TEST(GelmanRubin, SplitDetectsSharedDrift) {
  std::vector<double> trend(400);
  for (std::size_t i = 0; i < trend.size(); ++i) trend[i] = static_cast<double>(i) / 40.0;
  std::vector<std::vector<double>> chains{trend, trend};
  EXPECT_LT(gelman_rubin(chains).value, 1.0);
  EXPECT_GT(gelman_rubin(chains, true).value, 1.5);
}

TEST(GelmanRubin, Preconditions) {
  std::vector<std::vector<double>> one{std::vector<double>(20, 1.0)};
  EXPECT_THROW(gelman_rubin(one), std::invalid_argument);
  std::vector<std::vector<double>> ragged{std::vector<double>(20, 1.0), std::vector<double>(21, 1.0)};
  EXPECT_THROW(gelman_rubin(ragged), std::invalid_argument);
  std::vector<std::vector<double>> short_chains{std::vector<double>(9, 1.0), std::vector<double>(9, 2.0)};
  EXPECT_THROW(gelman_rubin(short_chains), std::invalid_argument);
}

TEST(Autocorrelation, LagZeroIsExactlyOne) {
  Gen g(6);
  for (int rep = 0; rep < 50; ++rep) {
    const auto t = normal_trace(g, 10 + g.index(100), g.normal(), 1.0);
    EXPECT_EQ(autocorrelation(t, 0).value, 1.0);
  }
}

TEST(Autocorrelation, AlternatingTrace) {
  std::vector<double> t(1000);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = i % 2 ? -1.0 : 1.0;
  EXPECT_NEAR(autocorrelation(t, 1).value, -1.0, 2.0 / 1000.0);
}

TEST(Autocorrelation, Ar1LagOne) {
  Gen g(7);
  const auto t = ar1(g, 10000, 0.7);
  EXPECT_NEAR(autocorrelation(t, 1).value, 0.7, 0.03);
}

TEST(Autocorrelation, MatchesDirectSum) {
  Gen g(8);
  const auto t = ar1(g, 300, 0.4);
  double m = 0.0;
  for (double x : t) m += x / 300.0;
  double c0 = 0.0, c3 = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) c0 += (t[i] - m) * (t[i] - m);
  for (std::size_t i = 0; i + 3 < t.size(); ++i) c3 += (t[i] - m) * (t[i + 3] - m);
  EXPECT_NEAR(autocorrelation(t, 3).value, c3 / c0, 1e-12);
}

TEST(Autocorrelation, BoundedByOne) {
  Gen g(9);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + g.index(50);
    const auto t = normal_trace(g, n, 0.0, 1.0);
    const auto a = autocorrelation(t, g.index(n));
    EXPECT_LE(std::abs(a.value), 1.0 + 1e-12);
  }
}

TEST(Autocorrelation, ConstantAndLagErrors) {
  std::vector<double> t(30, 2.5);
  EXPECT_TRUE(autocorrelation(t, 1).degenerate);
  EXPECT_THROW(autocorrelation(t, 30), std::invalid_argument);
}

TEST(EffectiveSampleSize, IndependentDraws) {
  Gen g(10);
  const auto t = normal_trace(g, 10000, 0.0, 1.0);
  EXPECT_NEAR(effective_sample_size(t).value / 10000.0, 1.0, 0.15);
}

TEST(EffectiveSampleSize, Ar1MatchesTheory) {
  Gen g(11);
  const auto t = ar1(g, 10000, 0.5);
  const double ratio = effective_sample_size(t).value / 10000.0;
  EXPECT_NEAR(ratio, 1.0 / 3.0, 0.2 / 3.0);
}

TEST(EffectiveSampleSize, ConstantIncrementHitsClamp) {
  std::vector<double> t(1000);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
  const auto e = effective_sample_size(t);
  EXPECT_FALSE(e.degenerate);
  EXPECT_GE(e.value, 1.0);
  EXPECT_LT(e.value, 5.0);
}

TEST(EffectiveSampleSize, NeverExceedsStoredDraws) {
  Gen g(12);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 10 + g.index(300);
    std::vector<std::vector<double>> chains;
    const std::size_t m = 1 + g.index(3);
    for (std::size_t c = 0; c < m; ++c) {
      // Negatively correlated traces push the raw estimate past n.
      auto t = ar1(g, n, g.uniform(-0.9, 0.9));
      chains.push_back(t);
    }
    const auto e = effective_sample_size(chains);
    EXPECT_LE(e.value, static_cast<double>(n * m));
    EXPECT_GE(e.value, 1.0);
  }
}

TEST(EffectiveSampleSize, DegenerateAndPreconditions) {
  std::vector<double> t(50, 1.0);
  EXPECT_TRUE(effective_sample_size(t).degenerate);
  EXPECT_THROW(effective_sample_size(std::vector<double>(9, 0.0)), std::invalid_argument);
}

TEST(ExactSum, OrderAndDuplication) {
  Gen g(13);
  std::vector<double> xs;
  for (int i = 0; i < 1000; ++i) xs.push_back(g.normal() * std::pow(10.0, g.integer(-8, 8)));
  const double m = exact_mean(xs);
  for (int rep = 0; rep < 20; ++rep) {
    std::shuffle(xs.begin(), xs.end(), g.engine());
    EXPECT_EQ(exact_mean(xs), m);
  }
  auto twice = xs;
  twice.insert(twice.end(), xs.begin(), xs.end());
  EXPECT_EQ(exact_mean(twice), m);
  for (int rep = 0; rep < 500; ++rep) {
    const double x = g.normal() * std::pow(10.0, g.integer(-5, 5));
    const std::vector<double> same(1 + g.index(5000), x);
    EXPECT_EQ(exact_mean(same), x);
  }
  std::vector<double> cancel{1e100, 1.0, -1e100};
  EXPECT_EQ(exact_sum(cancel), 1.0);
}

TEST(Dic, FromDeviances) {
  std::vector<double> devs{10.0, 12.0, 14.0};
  const auto r = dic_from_deviances(devs, 11.0);
  EXPECT_DOUBLE_EQ(r.mean_deviance, 12.0);
  EXPECT_DOUBLE_EQ(r.p_d, 1.0);
  EXPECT_DOUBLE_EQ(r.dic, 13.0);
  EXPECT_THROW(dic_from_deviances(std::vector<double>{}, 0.0), std::invalid_argument);
}

// Two independent normal means with flat priors: the posterior is known, and
// the effective number of parameters is 2.
TEST(Dic, GaussianToyHasTwoEffectiveParameters) {
  Gen g(14);
  const std::size_t n = 50;
  std::vector<double> y1 = normal_trace(g, n, 1.0, 1.0), y2 = normal_trace(g, n, -2.0, 1.0);
  auto deviance = [&](double m1, double m2) {
    double d = 0.0;
    for (double y : y1) d += (y - m1) * (y - m1);
    for (double y : y2) d += (y - m2) * (y - m2);
    return d + 2.0 * n * std::log(2.0 * M_PI);
  };
  double ybar1 = 0.0, ybar2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ybar1 += y1[i] / n;
    ybar2 += y2[i] / n;
  }
  std::vector<double> devs, m1s, m2s;
  for (int i = 0; i < 40000; ++i) {
    const double m1 = g.normal(ybar1, 1.0 / std::sqrt(n));
    const double m2 = g.normal(ybar2, 1.0 / std::sqrt(n));
    m1s.push_back(m1);
    m2s.push_back(m2);
    devs.push_back(deviance(m1, m2));
  }
  const auto r = dic_from_deviances(devs, deviance(exact_mean(m1s), exact_mean(m2s)));
  EXPECT_NEAR(r.p_d, 2.0, 0.1);
}

class DicOnModel : public ::testing::Test {
 protected:
  void SetUp() override {
    data = testing::toy_dataset(4, 3, 3, 21, ScoreScale({0, 1, 2, 3}));
    SamplerConfig sc;
    sc.chains = 2;
    sc.iterations = 200;
    sc.burn_in = 50;
    sc.thin = 5;
    sc.seed = 5;
    draws = run(sc, testing::model_for(data, 2), data);
  }
  Dataset data;
  PosteriorDraws draws;
};

TEST_F(DicOnModel, IdenticalDrawsGiveZeroPd) {
  auto same = draws;
  for (auto& c : same.chains) {
    for (auto& s : c) s = draws.chains[0][0];
  }
  for (auto& c : same.deviance) {
    for (auto& d : c) d = draws.deviance[0][0];
  }
  const auto r = dic(same, data);
  EXPECT_EQ(r.p_d, 0.0);
  EXPECT_EQ(r.dic, -2.0 * log_likelihood(draws.chains[0][0], data));
}

TEST_F(DicOnModel, SymmetricInDraws) {
  const auto base = dic(draws, data);
  EXPECT_GT(base.p_d, 0.0);
  Gen g(15);
  auto shuffled = draws;
  std::vector<std::pair<ParameterState, double>> all;
  for (std::size_t c = 0; c < draws.chain_count(); ++c) {
    for (std::size_t i = 0; i < draws.draws_per_chain(); ++i) all.push_back({draws.chains[c][i], draws.deviance[c][i]});
  }
  std::shuffle(all.begin(), all.end(), g.engine());
  std::size_t k = 0;
  for (std::size_t c = 0; c < shuffled.chain_count(); ++c) {
    for (std::size_t i = 0; i < shuffled.draws_per_chain(); ++i, ++k) {
      shuffled.chains[c][i] = all[k].first;
      shuffled.deviance[c][i] = all[k].second;
    }
  }
  const auto moved = dic(shuffled, data);
  EXPECT_EQ(moved.dic, base.dic);
  EXPECT_EQ(moved.p_d, base.p_d);

  auto doubled = draws;
  for (std::size_t c = 0; c < doubled.chain_count(); ++c) {
    doubled.chains[c].insert(doubled.chains[c].end(), draws.chains[c].begin(), draws.chains[c].end());
    doubled.deviance[c].insert(doubled.deviance[c].end(), draws.deviance[c].begin(), draws.deviance[c].end());
  }
  EXPECT_EQ(dic(doubled, data).dic, base.dic);
}

TEST_F(DicOnModel, PlugInUsesLikelihoodParameterMeans) {
  const auto plug = plugin_state(draws);
  double b1 = 0.0;
  std::size_t n = 0;
  for (const auto& c : draws.chains) {
    for (const auto& s : c) {
      b1 += s.beta[0];
      ++n;
    }
  }
  EXPECT_NEAR(plug.beta[0], b1 / static_cast<double>(n), 1e-12);
  const auto r = dic(draws, data);
  EXPECT_DOUBLE_EQ(r.plugin_deviance, -2.0 * log_likelihood(plug, data));
}

TEST_F(DicOnModel, RefusesOtherDataset) {
  const auto other = testing::toy_dataset(4, 3, 3, 22, ScoreScale({0, 1, 2, 3}));
  EXPECT_THROW(dic(draws, other), DataError);
  PosteriorDraws empty = draws;
  for (auto& c : empty.chains) c.clear();
  for (auto& c : empty.deviance) c.clear();
  EXPECT_THROW(dic(empty, data), std::invalid_argument);
}

TEST_F(DicOnModel, DiagnoseAllRowsAndCsv) {
  const auto rows = diagnose_all(draws);
  const auto names = parameter_names(draws.layout);
  ASSERT_EQ(rows.size(), names.size());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    EXPECT_EQ(rows[j].parameter, names[j]);
    ASSERT_TRUE(rows[j].psrf.has_value());
    if (rows[j].flag != "degenerate") {
      EXPECT_LE(rows[j].ess.value, static_cast<double>(draws.total_draws()));
    }
  }
  const auto text = diagnostics_csv(rows);
  EXPECT_EQ(text.substr(0, text.find('\n')), "parameter,psrf,ess,ac1,ac5,ac10,flag");
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), rows.size() + 1);
}

TEST(DiagnoseAll, SingleChainHasNoPsrf) {
  const auto data = testing::toy_dataset(3, 2, 2, 23, ScoreScale({0, 1, 2}));
  SamplerConfig sc;
  sc.chains = 1;
  sc.iterations = 60;
  sc.burn_in = 10;
  sc.thin = 2;
  const auto draws = run(sc, testing::model_for(data, 1), data);
  const auto rows = diagnose_all(draws);
  for (const auto& r : rows) EXPECT_FALSE(r.psrf.has_value());
  const auto text = diagnostics_csv(rows);
  const auto line = text.substr(text.find("\ngamma,") + 1);
  EXPECT_EQ(line.substr(0, line.find(',', 6) + 1), "gamma,NA,");
  // With one cluster zeta is fixed at 1.
  for (const auto& r : rows) {
    if (r.parameter == "zeta.1") {
      EXPECT_EQ(r.flag, "degenerate");
    }
  }
}

}  // namespace
}  // namespace ordvote
