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

#include "kgcp/experiment.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "kgcp/error.h"
#include "kgcp/random.h"
#include "kgcp/synthetic.h"

namespace kgcp {
namespace {

bool HasMethod(const ExperimentConfig& config, Method method) {
  return std::find(config.methods.begin(), config.methods.end(), method) !=
         config.methods.end();
}

bool NeedsTuningSlice(const ExperimentConfig& config) {
  return HasMethod(config, Method::kCondKgcp) &&
         (config.NeedsTuning() ||
          config.rank_estimation == RankEstimation::kHoldout);
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string ReadText(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void EchoConfig(const ExperimentConfig& config) {
  std::filesystem::create_directories(config.output_dir);
  WriteText(std::filesystem::path(config.output_dir) / "config.json",
            config.ToJson());
}

void RequireArtifact(const std::filesystem::path& path,
                     const std::string& stage) {
  if (!std::filesystem::exists(path)) {
    throw MissingArtifactError(path.string(), stage);
  }
}

std::string SeedTag(uint64_t seed) { return "seed" + std::to_string(seed); }

}  // namespace

ExperimentData PrepareData(const ExperimentConfig& config) {
  config.Validate(/*check_paths=*/true);
  ExperimentData data;
  KnowledgeGraph& kg = data.kg;
  if (config.synthetic) {
    kg = GenerateSyntheticKg(*config.synthetic);
  } else {
    kg = LoadKg(*config.dataset);
    if (kg.calib.empty() && kg.test.empty()) kg = SplitKg(kg, config.split);
  }
  if (kg.calib.empty() || kg.test.empty()) {
    throw ConfigError("dataset needs calibration and test triples");
  }
  data.known = KnownAnswers(kg);

  std::vector<Triple> tuning;
  if (NeedsTuningSlice(config)) {
    const uint64_t base =
        config.synthetic ? config.synthetic->seed : config.split.seed;
    Rng rng(MixSeed(base, 30, 0));
    std::vector<size_t> order(kg.train.size());
    std::iota(order.begin(), order.end(), 0);
    Shuffle(std::span<size_t>(order), rng);
    const size_t take = std::min(kg.calib.size(), kg.train.size() / 2);
    std::vector<bool> held(kg.train.size(), false);
    for (size_t i = 0; i < take; ++i) held[order[i]] = true;
    std::vector<Triple> train;
    for (size_t i = 0; i < kg.train.size(); ++i) {
      (held[i] ? tuning : train).push_back(kg.train[i]);
    }
    if (tuning.empty()) throw ConfigError("training split too small to tune");
    kg.train = std::move(train);
  }
  const bool both = config.split.both_directions;
  data.calib = MakeQueries(kg.calib, both, SplitName::kCalib);
  data.test = MakeQueries(kg.test, both, SplitName::kTest);
  data.tuning = MakeQueries(tuning, both, SplitName::kCalib);
  data.context.num_entities = kg.vocab.num_entities();
  data.context.num_predicates = kg.vocab.num_predicates();
  data.context.split_directions = config.split_directions;
  return data;
}

std::vector<Query> RequiredQueries(const ExperimentData& data) {
  std::set<Query> queries;
  for (const auto* set : {&data.calib, &data.test, &data.tuning}) {
    for (const QueryAnswer& pair : set->pairs) queries.insert(pair.query);
  }
  return {queries.begin(), queries.end()};
}

EmbeddingModel TrainSeed(const ExperimentConfig& config,
                         const ExperimentData& data, uint64_t seed) {
  if (!config.model) throw ConfigError("training needs a 'model' section");
  TrainConfig train = config.model->train;
  train.seed = seed;
  return Train(data.kg, config.model->kind, train);
}

ScorerConfig ScorerForSeed(const ExperimentConfig& config, uint64_t seed) {
  ScorerConfig scorer = config.scorer;
  scorer.rng_seed = MixSeed(config.scorer.rng_seed, 20, seed);
  return scorer;
}

SeedScores ScoreSeed(const ExperimentConfig& config, const ExperimentData& data,
                     const EmbeddingModel* model) {
  const std::vector<Query> queries = RequiredQueries(data);
  SeedScores result;
  if (model != nullptr) {
    result.scores = ScoreMatrix::Materialize(ModelScoreProvider(*model),
                                             queries, ScoreProvenance::kTrained);
    result.vectors = PredicateVectors::FromModel(*model);
    return result;
  }
  if (!config.score_matrix) {
    throw ConfigError("scoring needs a model or a 'score_matrix'");
  }
  result.scores = ImportScores(*config.score_matrix);
  result.scores.CheckAgainst(data.kg.vocab);
  result.scores.RequireQueries(queries);
  if (config.predicate_vectors) {
    result.vectors = PredicateVectors::Read(*config.predicate_vectors,
                                            data.context.num_predicates);
  }
  return result;
}

ScoredSets ScoreSets(const ExperimentConfig& config, const ExperimentData& data,
                     const ScoreProvider& provider, uint64_t seed) {
  const KnownAnswers* filter = config.filtered ? &data.known : nullptr;
  const ScorerConfig scorer = ScorerForSeed(config, seed);
  ScoredSets sets;
  sets.calib = ScorePairs(data.calib.pairs, provider, filter, scorer, DrawStream::kCalib);
  sets.test = ScorePairs(data.test.pairs, provider, filter, scorer, DrawStream::kTest);
  sets.tuning =
      ScorePairs(data.tuning.pairs, provider, filter, scorer, DrawStream::kTuning);
  return sets;
}

std::vector<std::vector<double>> StratumVectors(
    const PredicateVectors& vectors, const CalibrationContext& context) {
  if (static_cast<int32_t>(vectors.rows.size()) != context.num_predicates) {
    throw ConfigError("predicate vectors do not match the vocabulary");
  }
  std::vector<std::vector<double>> strata;
  for (int32_t s = 0; s < context.num_strata(); ++s) {
    strata.push_back(vectors.rows[context.split_directions ? s / 2 : s]);
  }
  return strata;
}

TuningChoice TuneCondKgcp(
    std::span<const CalibrationSample> calib,
    std::span<const ScoredPair> tuning,
    std::span<const std::vector<double>> vectors,
    const CalibrationContext& context, double epsilon,
    std::span<const double> gammas, std::span<const int32_t> phis,
    TuningObjective objective,
    std::optional<std::span<const CalibrationSample>> rank_samples) {
  if (tuning.empty()) throw ConfigError("tuning needs held-out pairs");
  const std::vector<int64_t> counts = StratumCounts(calib, context);
  const int64_t max_count = *std::max_element(counts.begin(), counts.end());
  const CalibratedModel reference = FitKgcp(calib, epsilon, context);
  const double ref_covgap =
      CovGap(CoveragePerPredicate(reference, tuning), epsilon);
  const double ref_avesize = AveSize(reference, tuning);

  using Key = std::tuple<double, double, double>;
  std::optional<Key> best_key;
  TuningChoice best;
  for (int32_t phi : phis) {
    if (phi > max_count) continue;
    const PredicatePartition partition = BuildPartition(counts, vectors, phi);
    for (double gamma : gammas) {
      CondKgcpOptions options;
      options.gamma = gamma;
      options.rank_samples = rank_samples;
      const CalibratedModel cond =
          FitCondKgcp(calib, partition, epsilon, options, context);
      const double covgap = CovGap(CoveragePerPredicate(cond, tuning), epsilon);
      const double avesize = AveSize(cond, tuning);
      Key key;
      switch (objective) {
        case TuningObjective::kEf: {
          const auto ef =
              EfficiencyRate(covgap, avesize, ref_covgap, ref_avesize);
          // Finite EF first, then the smallest; failures fall back to CovGap.
          key = ef ? Key{0, *ef, covgap} : Key{1, covgap, avesize};
          break;
        }
        case TuningObjective::kCovGap:
          key = Key{0, covgap, avesize};
          break;
        case TuningObjective::kAveSize:
          key = Key{0, avesize, covgap};
          break;
      }
      if (!best_key || key < *best_key) {
        best_key = key;
        best = {gamma, phi};
      }
    }
  }
  if (!best_key) {
    throw ConfigError("no phi in the grid fits the calibration counts (max " +
                      std::to_string(max_count) + ")");
  }
  return best;
}

CalibrationBundle CalibrateSeed(const ExperimentConfig& config,
                                const ExperimentData& data,
                                const ScoredSets& scored,
                                const std::optional<PredicateVectors>& vectors,
                                double epsilon) {
  const std::vector<CalibrationSample> samples =
      ToCalibrationSamples(scored.calib);
  const CalibrationContext& context = data.context;
  CalibrationBundle bundle;
  bundle.epsilon = epsilon;
  bundle.reference = FitKgcp(samples, epsilon, context);
  for (Method method : config.methods) {
    switch (method) {
      case Method::kKgcp:
        bundle.models.push_back(bundle.reference);
        break;
      case Method::kMcp:
        bundle.models.push_back(FitMcp(samples, epsilon, context));
        break;
      case Method::kCondKgcp: {
        if (!vectors) throw ConfigError("CondKGCP needs predicate vectors");
        const auto strata = StratumVectors(*vectors, context);
        std::vector<CalibrationSample> holdout;
        std::optional<std::span<const CalibrationSample>> rank_samples;
        if (config.rank_estimation == RankEstimation::kHoldout) {
          holdout = ToCalibrationSamples(scored.tuning);
          rank_samples = std::span<const CalibrationSample>(holdout);
        }
        TuningChoice choice{config.gammas.front(), config.phis.front()};
        if (config.NeedsTuning()) {
          choice = TuneCondKgcp(samples, scored.tuning, strata, context,
                                epsilon, config.gammas, config.phis,
                                config.tuning_objective, rank_samples);
        }
        const PredicatePartition partition =
            BuildPartition(StratumCounts(samples, context), strata, choice.phi);
        CondKgcpOptions options;
        options.gamma = choice.gamma;
        options.rank_samples = rank_samples;
        bundle.models.push_back(
            FitCondKgcp(samples, partition, epsilon, options, context));
        bundle.part_mcp = FitPartMcp(samples, partition, epsilon, context);
        break;
      }
    }
  }
  return bundle;
}

std::vector<EvaluationReport> EvaluateBundle(const ExperimentConfig& config,
                                             const CalibrationBundle& bundle,
                                             std::span<const ScoredPair> test,
                                             uint64_t seed) {
  const EvaluationReport reference =
      Evaluate(bundle.reference, test, config.avesize_mode);
  std::vector<EvaluationReport> reports;
  for (const CalibratedModel& model : bundle.models) {
    const CalibratedModel* part_mcp =
        model.method == Method::kCondKgcp && bundle.part_mcp
            ? &*bundle.part_mcp
            : nullptr;
    EvaluationReport report =
        Evaluate(model, test, config.avesize_mode, part_mcp);
    report.scorer = config.scorer.kind;
    report.seed = seed;
    if (model.method != Method::kKgcp) {
      report.ef = EfficiencyRate(report.covgap, report.avesize,
                                 reference.covgap, reference.avesize);
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

ExperimentResult RunExperiment(const ExperimentConfig& config) {
  const ExperimentData data = PrepareData(config);
  ExperimentResult result;
  for (uint64_t seed : config.seeds) {
    std::optional<EmbeddingModel> model;
    if (config.model) model = TrainSeed(config, data, seed);
    const SeedScores scores =
        ScoreSeed(config, data, model ? &*model : nullptr);
    const ScoredSets scored = ScoreSets(config, data, scores.scores, seed);
    for (double epsilon : config.epsilons) {
      const CalibrationBundle bundle =
          CalibrateSeed(config, data, scored, scores.vectors, epsilon);
      for (auto& report : EvaluateBundle(config, bundle, scored.test, seed)) {
        result.reports.push_back(std::move(report));
      }
    }
  }
  result.rows = Aggregate(result.reports);
  return result;
}

void WriteResults(const std::filesystem::path& dir,
                  const ExperimentResult& result, bool plot_data) {
  std::filesystem::create_directories(dir);
  WriteReportsCsv(dir / "reports.csv", result.reports);
  WriteText(dir / "summary.json", SummaryJson(result.reports, result.rows));
  WriteText(dir / "table.txt", FormatTable(result.rows));
  if (plot_data) WritePlotData(dir / "plot_data.csv", result.reports);
}

std::filesystem::path ModelArtifact(const ExperimentConfig& config,
                                    uint64_t seed) {
  return std::filesystem::path(config.output_dir) /
         ("model_" + SeedTag(seed) + ".bin");
}

std::filesystem::path ScoresArtifact(const ExperimentConfig& config,
                                     uint64_t seed) {
  return std::filesystem::path(config.output_dir) /
         ("scores_" + SeedTag(seed) + ".bin");
}

std::filesystem::path VectorsArtifact(const ExperimentConfig& config,
                                      uint64_t seed) {
  return std::filesystem::path(config.output_dir) /
         ("predvec_" + SeedTag(seed) + ".bin");
}

std::filesystem::path CalibratedArtifact(const ExperimentConfig& config,
                                         uint64_t seed, double epsilon,
                                         const std::string& tag) {
  char eps[32];
  std::snprintf(eps, sizeof(eps), "%g", epsilon);
  return std::filesystem::path(config.output_dir) /
         ("calibrated_" + SeedTag(seed) + "_eps" + eps + "_" + tag + ".json");
}

void RunTrainStage(const ExperimentConfig& config) {
  if (!config.model) {
    throw ConfigError("the train stage needs a 'model' section");
  }
  const ExperimentData data = PrepareData(config);
  EchoConfig(config);
  for (uint64_t seed : config.seeds) {
    SaveModel(ModelArtifact(config, seed), TrainSeed(config, data, seed));
  }
}

void RunScoreStage(const ExperimentConfig& config) {
  const ExperimentData data = PrepareData(config);
  EchoConfig(config);
  for (uint64_t seed : config.seeds) {
    SeedScores scores;
    if (config.model) {
      const auto path = ModelArtifact(config, seed);
      RequireArtifact(path, "train");
      const EmbeddingModel model = LoadModel(path);
      scores = ScoreSeed(config, data, &model);
    } else {
      scores = ScoreSeed(config, data, nullptr);
    }
    scores.scores.WriteBinary(ScoresArtifact(config, seed));
    if (scores.vectors) scores.vectors->Write(VectorsArtifact(config, seed));
  }
}

namespace {

ScoreMatrix LoadStageScores(const ExperimentConfig& config,
                            const ExperimentData& data, uint64_t seed,
                            const std::string& stage_hint) {
  const auto path = ScoresArtifact(config, seed);
  RequireArtifact(path, stage_hint);
  ScoreMatrix scores = ImportScores(path);
  scores.CheckAgainst(data.kg.vocab);
  scores.RequireQueries(RequiredQueries(data));
  return scores;
}

}  // namespace

void RunCalibrateStage(const ExperimentConfig& config) {
  const ExperimentData data = PrepareData(config);
  EchoConfig(config);
  for (uint64_t seed : config.seeds) {
    const ScoreMatrix scores = LoadStageScores(config, data, seed, "score");
    std::optional<PredicateVectors> vectors;
    if (HasMethod(config, Method::kCondKgcp)) {
      const auto path = VectorsArtifact(config, seed);
      RequireArtifact(path, "score");
      vectors = PredicateVectors::Read(path, data.context.num_predicates);
    }
    const ScoredSets scored = ScoreSets(config, data, scores, seed);
    for (double epsilon : config.epsilons) {
      const CalibrationBundle bundle =
          CalibrateSeed(config, data, scored, vectors, epsilon);
      WriteText(CalibratedArtifact(config, seed, epsilon, "reference"),
                CalibratedModelToJson(bundle.reference));
      for (const CalibratedModel& model : bundle.models) {
        WriteText(
            CalibratedArtifact(config, seed, epsilon, MethodName(model.method)),
            CalibratedModelToJson(model));
      }
      if (bundle.part_mcp) {
        WriteText(CalibratedArtifact(config, seed, epsilon, "partmcp"),
                  CalibratedModelToJson(*bundle.part_mcp));
      }
    }
  }
}

ExperimentResult RunEvaluateStage(const ExperimentConfig& config,
                                  bool plot_data) {
  const ExperimentData data = PrepareData(config);
  EchoConfig(config);
  ExperimentResult result;
  for (uint64_t seed : config.seeds) {
    const ScoreMatrix scores = LoadStageScores(config, data, seed, "score");
    const std::vector<ScoredPair> test =
        ScorePairs(data.test.pairs, scores, config.filtered ? &data.known : nullptr,
                   ScorerForSeed(config, seed), DrawStream::kTest);
    for (double epsilon : config.epsilons) {
      auto load = [&](const std::string& tag) {
        const auto path = CalibratedArtifact(config, seed, epsilon, tag);
        RequireArtifact(path, "calibrate");
        return CalibratedModelFromJson(ReadText(path));
      };
      CalibrationBundle bundle;
      bundle.epsilon = epsilon;
      bundle.reference = load("reference");
      for (Method method : config.methods) {
        bundle.models.push_back(load(MethodName(method)));
      }
      if (HasMethod(config, Method::kCondKgcp)) bundle.part_mcp = load("partmcp");
      for (auto& report : EvaluateBundle(config, bundle, test, seed)) {
        result.reports.push_back(std::move(report));
      }
    }
  }
  result.rows = Aggregate(result.reports);
  WriteResults(config.output_dir, result, plot_data);
  return result;
}

}  // namespace kgcp
