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
#include <fstream>

#include "support.hpp"

namespace ordvote {
namespace {

using testing::Gen;
using testing::TempDir;

void put(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

/// Writes a four-file bundle; covariates cover performers A and B in 2000-2001.
InputBundle fixture(const TempDir& dir, const std::string& votes,
                    const std::string& adjacency = "voter,performer,border\nA,B,1\n",
                    const std::string& migration = "voter,performer,stock\nC,A,2.5\n",
                    const std::string& covariates =
                        "performer,year,language,act_type\n"
                        "A,2000,English,Group\nA,2001,Own,FemaleSolo\n"
                        "B,2000,Mixed,MaleSolo\nB,2001,English,Group\n") {
  auto b = InputBundle::in_directory(dir.path());
  b.base_year = 2000;
  put(b.votes, votes);
  put(b.covariates, covariates);
  put(b.adjacency, adjacency);
  put(b.migration, migration);
  return b;
}

std::string load_error(const InputBundle& b) {
  try {
    load(b);
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

const std::string kThreeRows =
    "voter,performer,year,score\nA,B,2000,12\nC,A,2000,0\nC,A,2001,8\n";

TEST(Load, ThreeRowFixture) {
  TempDir dir("io");
  const auto d = load(fixture(dir, kThreeRows));
  EXPECT_EQ(d.records.size(), 3u);
  EXPECT_EQ(d.pair_count(), 2u);
  EXPECT_EQ(d.voters, (std::vector<std::string>{"A", "C"}));
  EXPECT_EQ(d.performers, (std::vector<std::string>{"A", "B"}));
  // C votes but never performs.
  const auto c = std::find(d.voters.begin(), d.voters.end(), "C") - d.voters.begin();
  EXPECT_EQ(std::count(d.performers.begin(), d.performers.end(), "C"), 0);
  EXPECT_TRUE(d.pairs.migration_present[d.pairs.index(c, 0)]);
  EXPECT_EQ(d.pairs.migration[d.pairs.index(c, 0)], 2.5);
  // A has no migration entry towards B: absent-flagged zero.
  EXPECT_FALSE(d.pairs.migration_present[d.pairs.index(0, 1)]);
  EXPECT_EQ(d.pairs.migration[d.pairs.index(0, 1)], 0.0);
  EXPECT_EQ(d.pairs.border[d.pairs.index(0, 1)], 1);
  EXPECT_EQ(d.scale.score_of(d.records.front().category), 12);
}

TEST(Load, ScoreOutsideScale) {
  TempDir dir("io");
  const auto msg = load_error(fixture(dir, "voter,performer,year,score\nA,B,2000,12\nC,A,2000,9\n"));
  EXPECT_NE(msg.find("votes.csv:3:"), std::string::npos) << msg;
  EXPECT_NE(msg.find("score 9"), std::string::npos) << msg;
}

TEST(Load, EmptyVotes) {
  TempDir dir("io");
  EXPECT_NE(load_error(fixture(dir, "voter,performer,year,score\n")).find("no records"), std::string::npos);
  EXPECT_NE(load_error(fixture(dir, "")).find("votes.csv"), std::string::npos);
}

TEST(Load, RowNumberedErrors) {
  TempDir dir("io");
  struct Case {
    std::string votes, adjacency, migration, covariates, needle;
  };
  const std::string adj = "voter,performer,border\nA,B,1\n";
  const std::string mig = "voter,performer,stock\nC,A,2.5\n";
  const std::string cov =
      "performer,year,language,act_type\nA,2000,English,Group\nA,2001,Own,FemaleSolo\n"
      "B,2000,Mixed,MaleSolo\nB,2001,English,Group\n";
  const std::vector<Case> cases{
      {"voter,performer,year,score\nA,B,2000,12\nA,A,2000,1\n", adj, mig, cov, "votes.csv:3: self-vote"},
      {kThreeRows + "A,B,2000,10\n", adj, mig, cov, "votes.csv:5: duplicate record"},
      {kThreeRows + "A,B\n", adj, mig, cov, "votes.csv:5: expected 4 fields"},
      {kThreeRows + "A,B,20x1,1\n", adj, mig, cov, "votes.csv:5: malformed year"},
      {kThreeRows + "A,B,2001,ten\n", adj, mig, cov, "votes.csv:5: malformed score"},
      {kThreeRows, "voter,performer,border\nA,B,1\nZ,B,0\n", mig, cov, "adjacency.csv:3: unknown voter 'Z'"},
      {kThreeRows, "voter,performer,border\nA,B,2\n", mig, cov, "adjacency.csv:2: border must be 0 or 1"},
      {kThreeRows, adj, "voter,performer,stock\nC,A,2.5\nC,Q,1\n", cov, "migration.csv:3: unknown performer 'Q'"},
      {kThreeRows, adj, "voter,performer,stock\nC,A,-1\n", cov, "migration.csv:2: stock"},
      {kThreeRows, adj, mig, cov + "Q,2000,English,Group\n", "covariates.csv:6: unknown performer 'Q'"},
      {kThreeRows, adj, mig, cov + "A,2002,Klingon,Group\n", "covariates.csv:6: unknown language"},
      {kThreeRows, adj, mig, "performer,year,language\nA,2000,English\n", "missing column 'act_type'"},
  };
  for (const auto& c : cases) {
    const auto msg = load_error(fixture(dir, c.votes, c.adjacency, c.migration, c.covariates));
    EXPECT_NE(msg.find(c.needle), std::string::npos) << "expected '" << c.needle << "' in '" << msg << "'";
  }
}

TEST(Load, MissingCovariatesForARecord) {
  TempDir dir("io");
  const auto msg = load_error(fixture(dir, kThreeRows + "C,B,2005,1\n"));
  EXPECT_NE(msg.find("no covariates"), std::string::npos) << msg;
}

TEST(Load, MissingFileNamesThePath) {
  TempDir dir("io");
  auto b = fixture(dir, kThreeRows);
  b.adjacency = dir / "nope.csv";
  EXPECT_NE(load_error(b).find("nope.csv"), std::string::npos);
}

TEST(Load, Log1pMigrationAndScoreOverride) {
  TempDir dir("io");
  auto b = fixture(dir, "voter,performer,year,score\nA,B,2000,2\nC,A,2000,0\n");
  b.log1p_migration = true;
  b.score_values = std::vector<int>{0, 1, 2};
  const auto d = load(b);
  EXPECT_EQ(d.scale.size(), 3u);
  EXPECT_DOUBLE_EQ(d.pairs.migration[d.pairs.index(1, 0)], std::log1p(2.5));
}

TEST(RoundTrip, WriteThenLoadIsIdentity) {
  Gen g(1);
  for (int rep = 0; rep < 15; ++rep) {
    const auto d = testing::toy_dataset(1 + g.index(7), 1 + g.index(6), 1 + g.index(4), 50 + rep);
    TempDir dir("rt");
    const auto back = load(write(d, dir.path()));
    EXPECT_TRUE(back == d);
    EXPECT_EQ(dataset_digest(back), dataset_digest(d));
    // Byte-stable canonical form.
    TempDir again("rt2");
    write(back, again.path());
    for (const char* name : {"votes.csv", "covariates.csv", "adjacency.csv", "migration.csv"}) {
      EXPECT_EQ(csv::read_text(dir / name), csv::read_text(again / name)) << name;
    }
  }
}

TEST(RoundTrip, SimulatedDataSurvivesLoad) {
  SyntheticSpec spec;
  spec.voters = 6;
  spec.performers = 4;
  spec.years = 3;
  const auto truth = make_true_parameters(spec, 3);
  const auto d = simulate(truth, 4);
  TempDir dir("rt");
  auto bundle = write(d, dir.path());
  bundle.base_year = d.base_year;
  EXPECT_TRUE(load(bundle) == d);
}

TEST(Digest, SensitiveToContent) {
  auto d = testing::toy_dataset(3, 3, 2, 7);
  const auto before = dataset_digest(d);
  EXPECT_EQ(before.size(), 16u);
  d.records[0].category = (d.records[0].category + 1) % d.scale.size();
  EXPECT_NE(dataset_digest(d), before);
}

TEST(ScoreMapping, Bijection) {
  const ScoreScale s;
  std::set<int> seen;
  for (std::size_t c = 0; c < s.size(); ++c) {
    EXPECT_EQ(s.category_of(s.score_of(c)), c);
    seen.insert(s.score_of(c));
  }
  EXPECT_EQ(seen.size(), s.size());
  for (int v : s.values()) EXPECT_EQ(s.score_of(*s.category_of(v)), v);
}

/// One voter/performer pair observed over `years` years with beta = 0.
TrueParameters single_pair(std::size_t years, double alpha, std::vector<double> cutpoints) {
  TrueParameters t;
  auto& d = t.design;
  d.scale = ScoreScale({0, 1, 2, 3});
  d.base_year = 0;
  d.voters = {"V"};
  d.performers = {"P"};
  for (std::size_t y = 0; y < years; ++y) {
    d.years.push_back(static_cast<int>(y));
    d.covariates[{0, static_cast<int>(y)}] = CovariateProfile{static_cast<int>(y), Language::English, ActType::Group};
  }
  d.pairs = PairStructure(1, 1);
  d.observed_pairs = {{0, 0}};
  t.state.cutpoints = std::move(cutpoints);
  t.state.alpha = {alpha};
  t.state.delta = {0.0};
  t.state.zeta = {1.0};
  t.state.regions = {0};
  return t;
}

TEST(Simulate, FarNegativeMeanGivesLowestCategory) {
  const auto d = simulate(single_pair(500, -1e6, {-1.0, 0.0, 1.0}), 9);
  for (const auto& r : d.records) EXPECT_EQ(r.category, 0u);
}

TEST(Simulate, SeedDeterminism) {
  SyntheticSpec spec;
  spec.voters = 5;
  spec.performers = 3;
  spec.years = 4;
  const auto truth = make_true_parameters(spec, 11);
  EXPECT_TRUE(simulate(truth, 12) == simulate(truth, 12));
  EXPECT_FALSE(simulate(truth, 12) == simulate(truth, 13));
  EXPECT_TRUE(make_true_parameters(spec, 11).state == truth.state);
}

TEST(Simulate, FrequenciesMatchCategoryProbabilities) {
  const std::vector<double> lambda{-0.8, 0.3, 1.4};
  const double alpha = 0.25;
  const auto d = simulate(single_pair(100000, alpha, lambda), 21);
  std::vector<double> freq(4, 0.0);
  for (const auto& r : d.records) freq[r.category] += 1.0 / 100000.0;
  const auto probs = category_probs(lambda, alpha);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(freq[k], probs[k], 0.005) << k;
}

TEST(Simulate, OutputAlwaysValidates) {
  Gen g(31);
  for (int rep = 0; rep < 10; ++rep) {
    SyntheticSpec spec;
    spec.voters = 2 + g.index(8);
    spec.performers = 1 + g.index(spec.voters);
    spec.years = 1 + g.index(5);
    spec.clusters = 1 + g.index(3);
    const auto d = simulate(make_true_parameters(spec, 100 + rep), 200 + rep);
    const auto rep_ = validate(d);
    EXPECT_TRUE(rep_.ok()) << (rep_.errors.empty() ? "" : rep_.errors.front());
    EXPECT_TRUE(rep_.balanced);
    EXPECT_EQ(rep_.min_occasions, spec.years);
  }
}

TEST(Validate, PaperShapedFixture) {
  // 48 voters, the first 43 of which also perform; 84 of the 2021 possible
  // non-self pairs never meet, leaving 1937 observed pairs.
  Dataset d;
  for (int v = 0; v < 48; ++v) d.voters.push_back(country_code(v));
  for (int p = 0; p < 43; ++p) d.performers.push_back(country_code(p));
  d.pairs = PairStructure(48, 43);
  for (int p = 0; p < 43; ++p) d.covariates[{p, 1998}] = CovariateProfile{0, Language::English, ActType::Group};
  std::size_t skipped = 0;
  for (std::size_t v = 0; v < 48; ++v) {
    for (std::size_t p = 0; p < 43; ++p) {
      if (v == p) continue;
      if (skipped < 84 && (v + 2 * p) % 7 == 0) {
        ++skipped;
        continue;
      }
      d.records.push_back({v, p, 1998, 0});
    }
  }
  ASSERT_EQ(skipped, 84u);
  d.finalize();
  const auto rep = validate(d);
  EXPECT_TRUE(rep.ok());
  EXPECT_EQ(rep.voters, 48u);
  EXPECT_EQ(rep.performers, 43u);
  EXPECT_EQ(rep.pairs, 1937u);
}

TEST(Validate, OnePairOneRecord) {
  const auto d = testing::toy_dataset(1, 1, 1, 5);
  const auto rep = validate(d);
  EXPECT_TRUE(rep.ok());
  EXPECT_EQ(rep.pairs, 1u);
  EXPECT_EQ(rep.min_occasions, 1u);
  EXPECT_EQ(rep.max_occasions, 1u);
  EXPECT_EQ(rep.occasion_histogram, (std::vector<std::size_t>{0, 1}));
}

TEST(Validate, StructureOnlyPair) {
  TempDir dir("io");
  // C -> B has a border entry but no votes.
  const auto d = load(fixture(dir, kThreeRows, "voter,performer,border\nA,B,1\nC,B,1\n"));
  const auto rep = validate(d);
  EXPECT_TRUE(rep.ok());
  ASSERT_EQ(rep.structure_only_pairs.size(), 1u);
  EXPECT_EQ(rep.structure_only_pairs[0], (std::pair<std::string, std::string>{"C", "B"}));
  EXPECT_FALSE(rep.balanced);
}

TEST(Validate, ReportsInsteadOfThrowing) {
  auto d = testing::toy_dataset(2, 2, 1, 6);
  d.records.push_back(d.records.front());
  const auto rep = validate(d);
  EXPECT_FALSE(rep.ok());
  EXPECT_NE(rep.errors.front().find("duplicate"), std::string::npos);
  Dataset empty;
  EXPECT_FALSE(validate(empty).ok());
}

}  // namespace
}  // namespace ordvote
