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

// Conformal calibration and prediction-set construction: the marginal
// method (KGCP), per-predicate Mondrian calibration (MCP), predicate
// merging, and CondKGCP's combined rank and score calibration.

#ifndef KGCP_CP_ENGINE_H_
#define KGCP_CP_ENGINE_H_

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgcp/kg_core.h"
#include "kgcp/query_evaluation.h"

namespace kgcp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Method { kKgcp, kMcp, kCondKgcp };

const char* MethodName(Method method);
Method ParseMethod(std::string_view name);

// 1-based order statistic picked by the finite-sample quantile at error rate
// `epsilon`: ceil((n + 1) * (1 - epsilon)), or nullopt when it exceeds n.
// Products within 1e-9 of an integer are snapped before taking the ceiling.
std::optional<size_t> QuantileOrder(size_t n, double epsilon);

// Smallest a with |{b <= a}| / n >= ceil((n + 1)(1 - epsilon)) / n, or
// +inf when that level exceeds 1. Requires a non-empty multiset and
// 0 < epsilon < 1.
double Quantile(std::span<const double> scores, double epsilon);

// What calibration needs from one calibration pair.
struct CalibrationSample {
  PredicateId predicate = 0;
  Direction direction = Direction::kTail;
  double score = 0;  // nonconformity of the true answer
  int32_t rank = 1;  // filtered rank of the true answer
};

std::vector<CalibrationSample> ToCalibrationSamples(
    std::span<const ScoredPair> pairs);

// Shape of the calibration problem. With `split_directions` head and tail
// queries of a predicate form separate strata (stratum 2r + d); otherwise
// stratum r.
struct CalibrationContext {
  int32_t num_entities = 0;
  int32_t num_predicates = 0;
  bool split_directions = false;

  int32_t num_strata() const {
    return split_directions ? 2 * num_predicates : num_predicates;
  }
  int32_t StratumOf(PredicateId predicate, Direction direction) const {
    return split_directions ? 2 * predicate + static_cast<int32_t>(direction)
                            : predicate;
  }
};

// Calibration pairs per stratum.
std::vector<int64_t> StratumCounts(std::span<const CalibrationSample> samples,
                                   const CalibrationContext& context);

struct PredicatePartition {
  std::vector<std::vector<int32_t>> parts;  // each sorted ascending
  std::vector<int32_t> part_of;             // stratum -> part index
  int32_t phi = 0;

  // Throws unless `parts` is a disjoint cover of [0, part_of.size()) that
  // agrees with `part_of` and every part holds >= phi calibration pairs.
  void Validate(std::span<const int64_t> counts) const;
};

// Strata with at least `phi` calibration pairs seed their own part; every
// other stratum joins the part of the seed whose vector is closest in
// Manhattan distance, ties going to the lowest index. Parts are ordered by
// seed index.
PredicatePartition BuildPartition(
    std::span<const int64_t> counts,
    std::span<const std::vector<double>> vectors, int32_t phi);

struct RankThreshold {
  int32_t k_hat = 1;
  double miscoverage = 0;  // fraction of ranks above k_hat
};

// Smallest k >= 1 whose empirical top-k miscoverage is below epsilon.
RankThreshold ComputeRankThreshold(std::span<const int32_t> ranks,
                                   double epsilon, int32_t num_entities);

struct PartCalibration {
  int32_t k_hat = 1;
  double miscoverage = 0;
  double adjusted_epsilon = 0;
  double score_threshold = kInfinity;
  int64_t calib_count = 0;
};

struct CalibratedModel {
  Method method = Method::kKgcp;
  double epsilon = 0.1;
  double gamma = 0;
  CalibrationContext context;
  // KGCP: one threshold, or one per direction when split. MCP: one per
  // stratum.
  std::vector<double> thresholds;
  // CondKGCP only.
  PredicatePartition partition;
  std::vector<PartCalibration> parts;
  // Strata without calibration data (MCP) and similar notes.
  std::vector<std::string> warnings;
};

CalibratedModel FitKgcp(std::span<const CalibrationSample> samples,
                        double epsilon, const CalibrationContext& context);

CalibratedModel FitMcp(std::span<const CalibrationSample> samples,
                       double epsilon, const CalibrationContext& context);

struct CondKgcpOptions {
  double gamma = 0.1;
  // Overrides the calibrated rank threshold for every part.
  std::optional<int32_t> forced_k;
  // Estimate k_hat and its miscoverage from these pairs instead of the
  // calibration pairs.
  std::optional<std::span<const CalibrationSample>> rank_samples;
};

CalibratedModel FitCondKgcp(std::span<const CalibrationSample> samples,
                            const PredicatePartition& partition, double epsilon,
                            const CondKgcpOptions& options,
                            const CalibrationContext& context);

// Part-level MCP at `epsilon`: CondKGCP with gamma = 0 and no rank cutoff.
CalibratedModel FitPartMcp(std::span<const CalibrationSample> samples,
                           const PredicatePartition& partition, double epsilon,
                           const CalibrationContext& context);

// Membership rule for one query: e is in the set iff it is unmasked,
// S(e) <= score_threshold and rank(e) <= max_rank.
struct SetRule {
  double score_threshold = kInfinity;
  int32_t max_rank = std::numeric_limits<int32_t>::max();
  int32_t part = -1;  // CondKGCP part, -1 otherwise

  bool Contains(double score, int32_t rank) const {
    return rank > 0 && score <= score_threshold && rank <= max_rank;
  }
};

SetRule RuleFor(const CalibratedModel& model, const Query& query);

struct PredictionSet {
  Query query;
  Method method = Method::kKgcp;
  std::vector<EntityId> members;  // ascending
};

// `ranks` holds filtered ranks with 0 for masked candidates.
PredictionSet PredictSet(const CalibratedModel& model, const Query& query,
                         std::span<const double> nonconformity,
                         std::span<const int32_t> ranks);

int64_t PredictSetSize(const CalibratedModel& model, const ScoredPair& pair);
bool Covers(const CalibratedModel& model, const ScoredPair& pair);

struct ShrinkagePart {
  int32_t part = 0;
  int64_t test_pairs = 0;
  int64_t dual_count = 0;       // candidates passing both CondKGCP filters
  int64_t threshold_count = 0;  // candidates passing the part-level threshold
  std::optional<double> sigma;  // dual_count / threshold_count
  bool skipped = false;         // no test pairs in the part
  bool zero_denominator = false;
};

struct ShrinkageReport {
  std::vector<ShrinkagePart> parts;
  double csr = 0;        // fraction of evaluated parts with sigma <= 1
  double sigma_bar = 0;  // mean sigma over evaluated parts
  int32_t evaluated_parts = 0;
};

// Empirical check of the set-shrinkage condition. `part_mcp` must come from
// FitPartMcp on the same calibration data and partition as `cond`.
ShrinkageReport VerifyShrinkageCondition(const CalibratedModel& cond,
                                         const CalibratedModel& part_mcp,
                                         std::span<const ScoredPair> test);

// JSON with +inf encoded as the string "inf".
std::string CalibratedModelToJson(const CalibratedModel& model);
CalibratedModel CalibratedModelFromJson(std::string_view json);

}  // namespace kgcp

#endif  // KGCP_CP_ENGINE_H_
