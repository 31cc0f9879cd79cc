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

// Experiment configuration: a single JSON document naming the data, the
// scoring source and the calibration grid.

#ifndef KGCP_EXPERIMENT_CONFIG_H_
#define KGCP_EXPERIMENT_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgcp/cp_engine.h"
#include "kgcp/evaluation.h"
#include "kgcp/kg_core.h"
#include "kgcp/kge_models.h"
#include "kgcp/nonconformity.h"
#include "kgcp/synthetic.h"

namespace kgcp {

struct ModelSpec {
  ModelKind kind = ModelKind::kTransE;
  TrainConfig train;  // train.seed is replaced by the run seed
};

// Where CondKGCP estimates k_hat and its miscoverage.
enum class RankEstimation { kCalibration, kHoldout };

// How the CondKGCP (gamma, phi) grid is searched on the tuning slice.
enum class TuningObjective { kEf, kCovGap, kAveSize };

struct ExperimentConfig {
  // Exactly one data source.
  std::optional<std::string> dataset;  // TSV or manifest
  std::optional<SyntheticKgSpec> synthetic;
  SplitConfig split;  // re-splits a single TSV; both_directions always applies

  // Exactly one scoring source.
  std::optional<ModelSpec> model;
  std::optional<std::string> score_matrix;
  std::optional<std::string> predicate_vectors;  // required by CondKGCP

  ScorerConfig scorer;
  std::vector<Method> methods{Method::kKgcp, Method::kMcp, Method::kCondKgcp};
  std::vector<double> epsilons{0.1};
  // More than one value in either grid: CondKGCP is tuned.
  std::vector<double> gammas{0.01, 0.1, 0.5};
  std::vector<int32_t> phis{20, 50, 100, 200};
  std::vector<uint64_t> seeds{0};
  bool filtered = true;
  bool split_directions = false;
  AveSizeMode avesize_mode = AveSizeMode::kGlobal;
  RankEstimation rank_estimation = RankEstimation::kCalibration;
  TuningObjective tuning_objective = TuningObjective::kEf;
  std::string output_dir = "kgcp_out";

  // Throws ConfigError on an inconsistent config; with `check_paths` also
  // when a referenced file does not exist.
  void Validate(bool check_paths) const;
  bool NeedsTuning() const { return gammas.size() > 1 || phis.size() > 1; }

  // Every field, defaults included.
  std::string ToJson() const;
  // Missing fields take their defaults; unknown fields are an error.
  static ExperimentConfig FromJson(std::string_view text);
};

ExperimentConfig LoadConfig(const std::filesystem::path& path);

const char* RankEstimationName(RankEstimation value);
const char* TuningObjectiveName(TuningObjective value);
const char* AveSizeModeName(AveSizeMode value);

}  // namespace kgcp

#endif  // KGCP_EXPERIMENT_CONFIG_H_
