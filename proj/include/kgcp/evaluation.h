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

// Coverage and set-size metrics, per-run reports and their aggregation
// across seeds.

#ifndef KGCP_EVALUATION_H_
#define KGCP_EVALUATION_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kgcp/cp_engine.h"
#include "kgcp/kg_core.h"
#include "kgcp/nonconformity.h"
#include "kgcp/query_evaluation.h"

namespace kgcp {

struct PredicateCoverage {
  double coverage = 0;
  int64_t count = 0;
};

using CoverageMap = std::map<PredicateId, PredicateCoverage>;

// `sets[i]` is the prediction set of `test[i]`. Predicates absent from the
// test set are omitted.
CoverageMap CoveragePerPredicate(std::span<const QueryAnswer> test,
                                 std::span<const PredictionSet> sets);
CoverageMap CoveragePerPredicate(const CalibratedModel& model,
                                 std::span<const ScoredPair> test);

// Mean |Cov_r - (1 - epsilon)| over the predicates in `coverage`.
double CovGap(const CoverageMap& coverage, double epsilon);

// kGlobal averages over test pairs; kMacro averages per-predicate means.
enum class AveSizeMode { kGlobal, kMacro };

double AveSize(std::span<const QueryAnswer> test,
               std::span<const PredictionSet> sets,
               AveSizeMode mode = AveSizeMode::kGlobal);
double AveSize(const CalibratedModel& model, std::span<const ScoredPair> test,
               AveSizeMode mode = AveSizeMode::kGlobal);

// Extra entities spent per 0.01 of CovGap reduction relative to a reference
// (KGCP) run. nullopt marks a failure: CovGap not reduced or AveSize
// unchanged.
std::optional<double> EfficiencyRate(double covgap, double avesize,
                                     double reference_covgap,
                                     double reference_avesize);

// Conditional-coverage bounds of one CondKGCP part against its empirical
// test coverage. `slack` is three binomial standard errors.
struct BoundCheck {
  int32_t part = 0;
  int64_t test_pairs = 0;
  double coverage = 0;
  double lower = 0;
  double upper = 0;
  double slack = 0;
  bool within = true;
};

std::vector<BoundCheck> CheckCoverageBounds(const CalibratedModel& cond,
                                            std::span<const ScoredPair> test);

struct EvaluationReport {
  Method method = Method::kKgcp;
  ScorerKind scorer = ScorerKind::kSoftmax;
  double epsilon = 0.1;
  uint64_t seed = 0;
  double gamma = 0;  // CondKGCP only
  int32_t phi = 0;   // CondKGCP only
  CoverageMap coverage;
  double marginal_coverage = 0;
  double covgap = 0;
  double avesize = 0;
  std::optional<double> ef;
  // CondKGCP only.
  std::vector<BoundCheck> bounds;
  std::optional<double> csr;
  std::optional<double> sigma_bar;
};

// Metrics of `model` on `test`. For CondKGCP pass the matching part-level
// MCP model to fill CSR and sigma-bar. EF is left empty.
EvaluationReport Evaluate(const CalibratedModel& model,
                          std::span<const ScoredPair> test, AveSizeMode mode,
                          const CalibratedModel* part_mcp = nullptr);

// One row per (method, scorer, epsilon): mean and sample standard deviation
// over seeds; EF as the mean of its finite values.
struct TableRow {
  Method method = Method::kKgcp;
  ScorerKind scorer = ScorerKind::kSoftmax;
  double epsilon = 0;
  int32_t runs = 0;
  double covgap_mean = 0, covgap_std = 0;
  double avesize_mean = 0, avesize_std = 0;
  double coverage_mean = 0;
  std::optional<double> ef_mean;
  std::optional<double> csr_mean;
  std::optional<double> sigma_bar_mean;
};

std::vector<TableRow> Aggregate(std::span<const EvaluationReport> reports);

std::string FormatTable(std::span<const TableRow> rows);
void WriteReportsCsv(const std::filesystem::path& path,
                     std::span<const EvaluationReport> reports);
std::string SummaryJson(std::span<const EvaluationReport> reports,
                        std::span<const TableRow> rows);
// Tidy long-format rows backing metric-vs-coverage and metric-vs-gamma/phi
// curves.
void WritePlotData(const std::filesystem::path& path,
                   std::span<const EvaluationReport> reports);

}  // namespace kgcp

#endif  // KGCP_EVALUATION_H_
