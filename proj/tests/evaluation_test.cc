/*
 * Copyright 2026 The kgcp Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "kgcp/evaluation.h"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "kgcp/error.h"
#include "kgcp/nonconformity.h"
#include "kgcp/random.h"

namespace kgcp {
namespace {

QueryAnswer Qa(PredicateId r, EntityId answer) {
  return {{Direction::kTail, 0, r}, answer};
}

PredictionSet Set(std::vector<EntityId> members) {
  PredictionSet s;
  s.members = std::move(members);
  return s;
}

TEST(CoverageTest, Examples) {
  const std::vector<QueryAnswer> test{Qa(0, 1), Qa(0, 2), Qa(0, 3), Qa(0, 4),
                                      Qa(2, 0)};
  const std::vector<PredictionSet> sets{Set({1}), Set({0, 2}), Set({3, 4}),
                                        Set({0}), Set({})};
  const CoverageMap c = CoveragePerPredicate(test, sets);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.at(0).coverage, 0.75);
  EXPECT_EQ(c.at(0).count, 4);
  EXPECT_EQ(c.at(2).coverage, 0.0);
  EXPECT_FALSE(c.contains(1));

  const std::vector<PredictionSet> all(5, Set({0, 1, 2, 3, 4}));
  for (const auto& [r, cov] : CoveragePerPredicate(test, all)) {
    EXPECT_EQ(cov.coverage, 1.0);
  }
}

TEST(CovGapTest, Examples) {
  CoverageMap c{{0, {0.85, 10}}, {1, {0.95, 10}}};
  EXPECT_NEAR(CovGap(c, 0.1), 0.05, 1e-12);
  EXPECT_NEAR(CovGap({{0, {0.9, 3}}, {4, {0.9, 8}}}, 0.1), 0.0, 1e-12);
  EXPECT_NEAR(CovGap({{0, {1.0, 3}}}, 0.1), 0.1, 1e-12);
  EXPECT_THROW(CovGap({}, 0.1), Error);
}

TEST(CovGapTest, InvariantToPredicateRelabeling) {
  Rng rng(1);
  CoverageMap a, b;
  for (int r = 0; r < 10; ++r) {
    const double cov = UniformDouble(rng);
    a[r] = {cov, 5};
    b[(r * 7 + 3) % 10] = {cov, 5};
  }
  EXPECT_NEAR(CovGap(a, 0.2), CovGap(b, 0.2), 1e-12);
}

TEST(AveSizeTest, Examples) {
  const std::vector<QueryAnswer> two{Qa(0, 0), Qa(1, 0)};
  EXPECT_EQ(AveSize(two, std::vector<PredictionSet>{Set({0}), Set({3})}), 1.0);
  EXPECT_EQ(AveSize(two, std::vector<PredictionSet>{Set({0, 1}),
                                                    Set({0, 1, 2, 3})}),
            3.0);
  const std::vector<PredictionSet> full(2, Set({0, 1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(AveSize(two, full), 7.0);
}

TEST(AveSizeTest, MacroAveragesPerPredicate) {
  const std::vector<QueryAnswer> test{Qa(0, 0), Qa(0, 0), Qa(0, 0), Qa(1, 0)};
  const std::vector<PredictionSet> sets{Set({0}), Set({0}), Set({0}),
                                        Set({0, 1, 2, 3, 4})};
  EXPECT_EQ(AveSize(test, sets, AveSizeMode::kGlobal), 2.0);
  EXPECT_EQ(AveSize(test, sets, AveSizeMode::kMacro), 3.0);
}

TEST(NestedSetsTest, SmallerSetsNeverCoverMore) {
  Rng rng(2);
  std::vector<QueryAnswer> test;
  std::vector<PredictionSet> inner, outer;
  for (int i = 0; i < 200; ++i) {
    test.push_back(Qa(static_cast<PredicateId>(i % 4),
                      static_cast<EntityId>(UniformIndex(rng, 10))));
    PredictionSet a, b;
    for (EntityId e = 0; e < 10; ++e) {
      const bool in_outer = UniformIndex(rng, 2) == 0;
      if (in_outer) b.members.push_back(e);
      if (in_outer && UniformIndex(rng, 2) == 0) a.members.push_back(e);
    }
    inner.push_back(a);
    outer.push_back(b);
  }
  EXPECT_LE(AveSize(test, inner), AveSize(test, outer));
  const auto ci = CoveragePerPredicate(test, inner);
  const auto co = CoveragePerPredicate(test, outer);
  for (const auto& [r, c] : ci) EXPECT_LE(c.coverage, co.at(r).coverage);
}

TEST(EfficiencyRateTest, Examples) {
  const auto ef = EfficiencyRate(0.030, 19.56, 0.096, 132.36);
  ASSERT_TRUE(ef);
  EXPECT_NEAR(*ef, -17.09, 0.01);
  EXPECT_FALSE(EfficiencyRate(0.05, 30, 0.05, 10));
  EXPECT_FALSE(EfficiencyRate(0.06, 30, 0.05, 10));
  EXPECT_FALSE(EfficiencyRate(0.01, 10, 0.05, 10));
  const auto plus = EfficiencyRate(0.03, 20, 0.05, 10);
  ASSERT_TRUE(plus);
  EXPECT_NEAR(*plus, 5.0, 1e-9);
}

// Golden rows: CovGap/AveSize against a reference run, with EF computed
// independently; an empty EF field marks a failure.
TEST(EfficiencyRateTest, GoldenTable) {
  std::ifstream in(std::string(KGCP_TEST_DATA_DIR) + "/ef_golden.csv");
  ASSERT_TRUE(in);
  std::string line;
  std::getline(in, line);
  int rows = 0, finite = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() < 8) f.resize(8);
    const auto ef = EfficiencyRate(std::stod(f[3]), std::stod(f[4]),
                                   std::stod(f[5]), std::stod(f[6]));
    if (f[7].empty()) {
      EXPECT_FALSE(ef) << line;
    } else {
      ASSERT_TRUE(ef) << line;
      EXPECT_NEAR(*ef, std::stod(f[7]), 1e-8) << line;
      ++finite;
    }
    ++rows;
  }
  EXPECT_EQ(rows, 60);
  EXPECT_EQ(finite, 38);
}

EvaluationReport Report(Method method, uint64_t seed, double covgap,
                        double avesize, std::optional<double> ef) {
  EvaluationReport r;
  r.method = method;
  r.seed = seed;
  r.covgap = covgap;
  r.avesize = avesize;
  r.ef = ef;
  return r;
}

TEST(AggregateTest, MeanAndSampleStd) {
  std::vector<EvaluationReport> reports;
  for (uint64_t seed : {0, 1}) {
    reports.push_back(Report(Method::kKgcp, seed, 0.1 + 0.02 * seed, 5, {}));
    reports.push_back(Report(Method::kMcp, seed, 0.02, 50 + 10 * seed,
                             seed == 0 ? std::optional<double>(3.0) : std::nullopt));
    reports.push_back(Report(Method::kCondKgcp, seed, 0.03, 8, -2.0 - seed));
  }
  const auto rows = Aggregate(reports);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].method, Method::kKgcp);
  EXPECT_EQ(rows[0].runs, 2);
  EXPECT_NEAR(rows[0].covgap_mean, 0.11, 1e-12);
  EXPECT_NEAR(rows[0].covgap_std, std::sqrt(2 * 0.01 * 0.01), 1e-12);
  EXPECT_FALSE(rows[0].ef_mean);
  EXPECT_NEAR(rows[1].avesize_std, std::sqrt(50.0), 1e-12);
  EXPECT_EQ(*rows[1].ef_mean, 3.0);
  EXPECT_EQ(*rows[2].ef_mean, -2.5);
  EXPECT_FALSE(FormatTable(rows).empty());
}

// Per-predicate Gaussian scores of varying difficulty; answer shifted up.
ScoredPair GaussianPair(Rng& rng, PredicateId r, int32_t entities,
                        double signal) {
  std::vector<double> raw(entities);
  for (double& v : raw) v = StandardNormal(rng);
  ScoredPair p;
  p.query = {Direction::kTail, 0, r};
  p.answer = static_cast<EntityId>(UniformIndex(rng, entities));
  raw[p.answer] += signal;
  p.nonconformity = SoftmaxScores(raw).values;
  p.ranks = CandidateRanks(raw);
  return p;
}

TEST(EvaluateTest, CondFieldsOnlyForCondKgcp) {
  Rng rng(3);
  std::vector<ScoredPair> calib, test;
  for (int i = 0; i < 300; ++i) {
    calib.push_back(GaussianPair(rng, i % 2, 10, 1.0 + i % 2));
    test.push_back(GaussianPair(rng, i % 2, 10, 1.0 + i % 2));
  }
  const CalibrationContext ctx{10, 2, false};
  const auto samples = ToCalibrationSamples(calib);
  const auto kgcp = Evaluate(FitKgcp(samples, 0.1, ctx), test,
                             AveSizeMode::kGlobal);
  EXPECT_FALSE(kgcp.csr);
  EXPECT_FALSE(kgcp.sigma_bar);
  EXPECT_TRUE(kgcp.bounds.empty());
  EXPECT_FALSE(kgcp.ef);

  const std::vector<std::vector<double>> v{{0.0}, {1.0}};
  const auto partition = BuildPartition(StratumCounts(samples, ctx), v, 50);
  CondKgcpOptions options;
  const auto cond = FitCondKgcp(samples, partition, 0.1, options, ctx);
  const auto part_mcp = FitPartMcp(samples, partition, 0.1, ctx);
  const auto r = Evaluate(cond, test, AveSizeMode::kGlobal, &part_mcp);
  EXPECT_TRUE(r.csr);
  EXPECT_TRUE(r.sigma_bar);
  EXPECT_EQ(r.bounds.size(), 2u);
  EXPECT_EQ(r.coverage.size(), 2u);
}

// Every predicate has 200 calibration pairs: per-predicate coverage of MCP
// averaged over resamples stays in [1 - eps, 1 - eps + 1/201].
TEST(McpCoverageTest, BalancedPredicatesHitTarget) {
  Rng rng(4);
  const int predicates = 3, n = 200, resamples = 150;
  const double eps = 0.1;
  const CalibrationContext ctx{15, predicates, false};
  std::vector<double> sum(predicates, 0), sum_sq(predicates, 0);
  for (int rep = 0; rep < resamples; ++rep) {
    std::vector<ScoredPair> calib, test;
    for (int r = 0; r < predicates; ++r) {
      for (int i = 0; i < n; ++i) {
        calib.push_back(GaussianPair(rng, r, 15, 0.5 + r));
        test.push_back(GaussianPair(rng, r, 15, 0.5 + r));
      }
    }
    const auto model = FitMcp(ToCalibrationSamples(calib), eps, ctx);
    for (const auto& [r, c] : CoveragePerPredicate(model, test)) {
      sum[r] += c.coverage;
      sum_sq[r] += c.coverage * c.coverage;
    }
  }
  for (int r = 0; r < predicates; ++r) {
    const double mean = sum[r] / resamples;
    const double se =
        std::sqrt((sum_sq[r] / resamples - mean * mean) / (resamples - 1));
    EXPECT_GE(mean, 1 - eps - 3 * se) << "predicate " << r;
    EXPECT_LE(mean, 1 - eps + 1.0 / (n + 1) + 3 * se) << "predicate " << r;
  }
}

}  // namespace
}  // namespace kgcp
