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

// Monte-Carlo checks of the coverage guarantees: marginal coverage of
// KGCP, the per-part CondKGCP bounds, and the set-shrinkage condition.

#ifndef KGCP_VERIFICATION_H_
#define KGCP_VERIFICATION_H_

#include <cstdint>
#include <string>
#include <vector>

#include "kgcp/kge_models.h"
#include "kgcp/synthetic.h"

namespace kgcp {

// Exchangeable pairs with i.i.d. Gaussian raw scores; the answer's score is
// shifted up by `signal`.
struct MarginalStudyConfig {
  int32_t num_entities = 50;
  int32_t calib_pairs = 99;
  int32_t test_pairs = 1000;
  double epsilon = 0.1;
  double signal = 1.5;
  int32_t resamples = 500;
  uint64_t seed = 1;
};

struct MarginalStudyResult {
  double mean_coverage = 0;
  double standard_error = 0;
  double lower = 0;  // 1 - epsilon
  double upper = 0;  // 1 - epsilon + 1 / (n + 1)
  bool pass = false;
};

MarginalStudyResult RunMarginalStudy(const MarginalStudyConfig& config);

// One trained model scores a fixed pool of held-out pairs; every resample
// reshuffles the pool within each part into calibration and test pairs.
struct ConditionalStudyConfig {
  SyntheticKgSpec kg;
  ModelKind model = ModelKind::kTransE;
  TrainConfig train;
  double epsilon = 0.1;
  std::vector<double> gammas{0.0, 0.5, 1.0};
  int32_t phi = 50;
  int32_t resamples = 300;
  double calib_share = 0.5;
  uint64_t seed = 1;

  // Five predicates of uneven size and noise.
  static ConditionalStudyConfig Default();
};

struct PartBoundOutcome {
  double gamma = 0;
  int32_t part = 0;
  std::vector<int32_t> strata;
  int64_t calib_pairs = 0;
  int64_t test_pairs = 0;
  double mean_coverage = 0;
  double mean_lower = 0;
  double mean_upper = 0;
  double lower_se = 0;  // standard error of coverage - lower
  double upper_se = 0;  // standard error of upper - coverage
  bool within = false;
};

struct ShrinkageOutcome {
  double gamma = 0;
  int32_t runs = 0;
  int32_t runs_all_sigma_le_one = 0;
  int32_t violations = 0;  // all sigma <= 1 yet larger sets than part MCP
  double mean_csr = 0;
  double mean_sigma_bar = 0;
  double mean_avesize = 0;
  double mean_part_mcp_avesize = 0;
};

struct ConditionalStudyResult {
  std::vector<PartBoundOutcome> bounds;
  std::vector<ShrinkageOutcome> shrinkage;
  // Pearson correlation over all runs between sigma-bar and the AveSize
  // gap to part MCP.
  double sigma_gap_correlation = 0;
  int64_t min_part_calib = 0;
  bool bounds_pass = false;
  bool shrinkage_pass = false;
};

ConditionalStudyResult RunConditionalStudy(const ConditionalStudyConfig& config);

std::string FormatMarginalStudy(const MarginalStudyResult& result);
std::string FormatConditionalStudy(const ConditionalStudyResult& result);

}  // namespace kgcp

#endif  // KGCP_VERIFICATION_H_
