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

#include "kgcp/nonconformity.h"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "kgcp/error.h"
#include "kgcp/random.h"

namespace kgcp {
namespace {

void ExpectNear(const std::vector<double>& got, const std::vector<double>& want,
                double tol = 1e-12) {
  ASSERT_EQ(got.size(), want.size());
  for (size_t i = 0; i < got.size(); ++i) {
    EXPECT_NEAR(got[i], want[i], tol) << "index " << i;
  }
}

TEST(SoftmaxTest, ConstantScores) {
  for (double c : {-3.0, 0.0, 250.0}) {
    const std::vector<double> raw(4, c);
    ExpectNear(SoftmaxScores(raw).values, {0.75, 0.75, 0.75, 0.75});
  }
}

TEST(SoftmaxTest, HandComputedRatio) {
  const std::vector<double> raw{std::log(3.0), 0.0};
  ExpectNear(SoftmaxScores(raw).values, {0.25, 0.75});
}

TEST(SoftmaxTest, LargeMagnitudeIsStable) {
  const std::vector<double> raw{0.0, 1000.0, 0.0};
  const auto s = SoftmaxScores(raw).values;
  for (double v : s) EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(s[1], 0.0, 1e-12);
  EXPECT_NEAR(s[0], 1.0, 1e-12);
  EXPECT_NEAR(s[2], 1.0, 1e-12);
}

TEST(SoftmaxTest, SumsToOne) {
  Rng rng(1);
  std::vector<double> raw(30);
  for (double& v : raw) v = 5 * StandardNormal(rng);
  const auto p = Softmax(raw);
  EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
}

TEST(ApsTest, TwoEntities) {
  const std::vector<double> raw{std::log(3.0), 0.0};  // mass 0.75, 0.25
  ExpectNear(ApsScores(raw, 0.0).values, {0.0, 0.75});
  ExpectNear(ApsScores(raw, 1.0).values, {0.75, 1.0});
}

TEST(ApsTest, UniformMass) {
  const std::vector<double> raw(4, 1.0);
  ExpectNear(ApsScores(raw, 0.0).values, {0.0, 0.25, 0.5, 0.75});
}

TEST(ApsTest, OrderFollowsPlausibility) {
  const std::vector<double> raw{0.0, 2.0, 1.0};
  const auto s = ApsScores(raw, 0.5).values;
  EXPECT_LT(s[1], s[2]);
  EXPECT_LT(s[2], s[0]);
}

TEST(RapsTest, HandComputedPenalty) {
  const std::vector<double> raw(3, 0.0);
  ExpectNear(RapsScores(raw, 0.0, 0.1, 1).values,
             {0.0, 1.0 / 3 + 0.1, 2.0 / 3 + 0.2});
}

TEST(RapsTest, ZeroLambdaEqualsAps) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> raw(1 + UniformIndex(rng, 20));
    for (double& v : raw) v = StandardNormal(rng);
    const double u = UniformDouble(rng);
    EXPECT_EQ(RapsScores(raw, u, 0.0, 2).values, ApsScores(raw, u).values);
  }
}

TEST(RapsTest, LargeKRegHasNoPenalty) {
  Rng rng(3);
  std::vector<double> raw(6);
  for (double& v : raw) v = StandardNormal(rng);
  EXPECT_EQ(RapsScores(raw, 0.3, 0.7, 6).values, ApsScores(raw, 0.3).values);
  EXPECT_EQ(RapsScores(raw, 0.3, 0.7, 50).values, ApsScores(raw, 0.3).values);
}

TEST(ScorerConfigTest, DispatchAndValidation) {
  const std::vector<double> raw{1.0, 0.0, 2.0};
  ScorerConfig config;
  config.kind = ScorerKind::kRaps;
  config.raps_lambda = 0.2;
  config.raps_k_reg = 1;
  EXPECT_EQ(ComputeNonconformity(config, raw, 0.4).values,
            RapsScores(raw, 0.4, 0.2, 1).values);
  EXPECT_EQ(ParseScorerKind("aps"), ScorerKind::kAps);
  EXPECT_THROW(ParseScorerKind("naive"), ConfigError);
  config.raps_lambda = -1;
  EXPECT_THROW(config.Validate(), ConfigError);
}

TEST(UniformDrawTest, DeterministicAndInRange) {
  EXPECT_EQ(UniformDraw(1, 2, 3), UniformDraw(1, 2, 3));
  EXPECT_NE(UniformDraw(1, 2, 3), UniformDraw(1, 2, 4));
  EXPECT_NE(UniformDraw(1, 1, 3), UniformDraw(1, 2, 3));
  double sum = 0;
  for (uint64_t i = 0; i < 10000; ++i) {
    const double u = UniformDraw(7, 1, i);
    ASSERT_GE(u, 0.0);
    ASSERT_LE(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 10000, 0.5, 0.01);
}

}  // namespace
}  // namespace kgcp
