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

// The experiment pipeline: data preparation, training, scoring,
// calibration and evaluation, usable in memory or as on-disk stages.

#ifndef KGCP_EXPERIMENT_H_
#define KGCP_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kgcp/cp_engine.h"
#include "kgcp/evaluation.h"
#include "kgcp/experiment_config.h"
#include "kgcp/kg_core.h"
#include "kgcp/kge_models.h"
#include "kgcp/query_evaluation.h"
#include "kgcp/score_matrix.h"

namespace kgcp {

struct ExperimentData {
  KnowledgeGraph kg;  // train excludes the tuning slice
  KnownAnswers known;
  QueryAnswerSet calib;
  QueryAnswerSet test;
  QueryAnswerSet tuning;  // empty unless tuning or holdout rank estimation
  CalibrationContext context;
};

// Loads or generates the graph and builds the query-answer sets. When the
// config tunes CondKGCP or estimates ranks on held-out pairs, a random slice
// of the training triples sized like the calibration split (at most half of
// train) is held out of training and used as the tuning slice.
ExperimentData PrepareData(const ExperimentConfig& config);

// Every query the later stages score.
std::vector<Query> RequiredQueries(const ExperimentData& data);

EmbeddingModel TrainSeed(const ExperimentConfig& config,
                         const ExperimentData& data, uint64_t seed);

ScorerConfig ScorerForSeed(const ExperimentConfig& config, uint64_t seed);

struct SeedScores {
  ScoreMatrix scores;
  std::optional<PredicateVectors> vectors;
};

// Scores from `model`, or imported from the config when `model` is null.
SeedScores ScoreSeed(const ExperimentConfig& config, const ExperimentData& data,
                     const EmbeddingModel* model);

struct ScoredSets {
  std::vector<ScoredPair> calib;
  std::vector<ScoredPair> test;
  std::vector<ScoredPair> tuning;
};

ScoredSets ScoreSets(const ExperimentConfig& config, const ExperimentData& data,
                     const ScoreProvider& provider, uint64_t seed);

// Predicate vectors laid out per calibration stratum.
std::vector<std::vector<double>> StratumVectors(
    const PredicateVectors& vectors, const CalibrationContext& context);

struct TuningChoice {
  double gamma = 0;
  int32_t phi = 0;
};

// Grid search over (gamma, phi) scored on the tuning pairs. Phi values that
// no partition can satisfy are skipped.
TuningChoice TuneCondKgcp(std::span<const CalibrationSample> calib,
                          std::span<const ScoredPair> tuning,
                          std::span<const std::vector<double>> vectors,
                          const CalibrationContext& context, double epsilon,
                          std::span<const double> gammas,
                          std::span<const int32_t> phis,
                          TuningObjective objective,
                          std::optional<std::span<const CalibrationSample>>
                              rank_samples = std::nullopt);

// Calibrated models of one (seed, epsilon).
struct CalibrationBundle {
  double epsilon = 0.1;
  CalibratedModel reference;  // KGCP, the EF baseline
  std::vector<CalibratedModel> models;  // in config.methods order
  std::optional<CalibratedModel> part_mcp;  // companion of CondKGCP
};

CalibrationBundle CalibrateSeed(const ExperimentConfig& config,
                                const ExperimentData& data,
                                const ScoredSets& scored,
                                const std::optional<PredicateVectors>& vectors,
                                double epsilon);

std::vector<EvaluationReport> EvaluateBundle(const ExperimentConfig& config,
                                             const CalibrationBundle& bundle,
                                             std::span<const ScoredPair> test,
                                             uint64_t seed);

struct ExperimentResult {
  std::vector<EvaluationReport> reports;  // seed-major, then epsilon, method
  std::vector<TableRow> rows;
};

// All stages in memory.
ExperimentResult RunExperiment(const ExperimentConfig& config);

// reports.csv, summary.json, table.txt and, optionally, plot_data.csv.
void WriteResults(const std::filesystem::path& dir,
                  const ExperimentResult& result, bool plot_data);

// On-disk stages. Each reads the config plus the previous stage's
// artifacts under config.output_dir and echoes the config to config.json.
void RunTrainStage(const ExperimentConfig& config);
void RunScoreStage(const ExperimentConfig& config);
void RunCalibrateStage(const ExperimentConfig& config);
ExperimentResult RunEvaluateStage(const ExperimentConfig& config,
                                  bool plot_data);

std::filesystem::path ModelArtifact(const ExperimentConfig& config,
                                    uint64_t seed);
std::filesystem::path ScoresArtifact(const ExperimentConfig& config,
                                     uint64_t seed);
std::filesystem::path VectorsArtifact(const ExperimentConfig& config,
                                      uint64_t seed);
// `tag` is a method name, "reference" or "partmcp".
std::filesystem::path CalibratedArtifact(const ExperimentConfig& config,
                                         uint64_t seed, double epsilon,
                                         const std::string& tag);

}  // namespace kgcp

#endif  // KGCP_EXPERIMENT_H_
