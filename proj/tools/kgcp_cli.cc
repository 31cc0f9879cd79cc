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

// kgcp: generate synthetic graphs, run the staged pipeline and the
// coverage verification suites.
//
//   kgcp generate --entities 100 --predicates 5 --counts 400,400,50,20,10 --out data
//   kgcp train|score|calibrate|evaluate --config experiment.json [overrides]
//   kgcp run --config experiment.json
//   kgcp verify-bounds
//
// Exit codes: 0 success, 1 runtime error, 2 configuration error,
// 3 verification failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kgcp/error.h"
#include "kgcp/experiment.h"
#include "kgcp/experiment_config.h"
#include "kgcp/synthetic.h"
#include "kgcp/verification.h"

namespace {

using kgcp::ExperimentConfig;

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;
constexpr int kExitVerification = 3;

// Flag values that override the config file when given.
struct Overrides {
  std::string config_path;
  std::string dataset;
  std::string model_kind;
  std::optional<int32_t> dim, epochs;
  std::string score_matrix;
  std::string predicate_vectors;
  std::string scorer;
  std::vector<std::string> methods;
  std::vector<double> epsilons, gammas;
  std::vector<int32_t> phis;
  std::vector<uint64_t> seeds;
  bool raw = false;
  bool split_directions = false;
  std::string avesize_mode;
  std::string rank_estimation;
  std::string tuning_objective;
  std::string output_dir;
};

void AddPipelineFlags(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_path, "Experiment JSON");
  app->add_option("--dataset", o.dataset, "TSV or manifest path");
  app->add_option("--model", o.model_kind, "TransE, DistMult or ComplEx");
  app->add_option("--dim", o.dim, "Embedding dimension");
  app->add_option("--epochs", o.epochs, "Training epochs");
  app->add_option("--score-matrix", o.score_matrix, "Imported score matrix");
  app->add_option("--predicate-vectors", o.predicate_vectors,
                  "Predicate vectors for imported scores");
  app->add_option("--scorer", o.scorer, "softmax, aps or raps");
  app->add_option("--methods", o.methods, "KGCP, MCP, CondKGCP")
      ->delimiter(',');
  app->add_option("--epsilons", o.epsilons, "Error rates")->delimiter(',');
  app->add_option("--gammas", o.gammas, "CondKGCP gamma grid")->delimiter(',');
  app->add_option("--phis", o.phis, "CondKGCP phi grid")->delimiter(',');
  app->add_option("--seeds", o.seeds, "Run seeds")->delimiter(',');
  app->add_flag("--raw", o.raw, "Raw instead of filtered ranks");
  app->add_flag("--split-directions", o.split_directions,
                "Calibrate head and tail queries separately");
  app->add_option("--avesize-mode", o.avesize_mode, "global or macro");
  app->add_option("--rank-estimation", o.rank_estimation,
                  "calibration or holdout");
  app->add_option("--tuning-objective", o.tuning_objective,
                  "ef, covgap or avesize");
  app->add_option("--output-dir", o.output_dir, "Artifact directory");
}

ExperimentConfig ResolveConfig(const Overrides& o) {
  ExperimentConfig c =
      o.config_path.empty() ? ExperimentConfig{} : kgcp::LoadConfig(o.config_path);
  if (!o.dataset.empty()) {
    c.dataset = o.dataset;
    c.synthetic.reset();
  }
  if (!o.model_kind.empty()) {
    if (!c.model) c.model = kgcp::ModelSpec{};
    c.model->kind = kgcp::ParseModelKind(o.model_kind);
    c.score_matrix.reset();
  }
  if (o.dim || o.epochs) {
    if (!c.model) throw kgcp::ConfigError("--dim/--epochs need a model");
    if (o.dim) c.model->train.dim = *o.dim;
    if (o.epochs) c.model->train.epochs = *o.epochs;
  }
  if (!o.score_matrix.empty()) {
    c.score_matrix = o.score_matrix;
    c.model.reset();
  }
  if (!o.predicate_vectors.empty()) c.predicate_vectors = o.predicate_vectors;
  if (!o.scorer.empty()) c.scorer.kind = kgcp::ParseScorerKind(o.scorer);
  if (!o.methods.empty()) {
    c.methods.clear();
    for (const auto& m : o.methods) c.methods.push_back(kgcp::ParseMethod(m));
  }
  if (!o.epsilons.empty()) c.epsilons = o.epsilons;
  if (!o.gammas.empty()) c.gammas = o.gammas;
  if (!o.phis.empty()) c.phis = o.phis;
  if (!o.seeds.empty()) c.seeds = o.seeds;
  if (o.raw) c.filtered = false;
  if (o.split_directions) c.split_directions = true;
  // Round-trip the enum-valued fields through the JSON parser so the flag
  // spellings match the config file's.
  if (!o.avesize_mode.empty() || !o.rank_estimation.empty() ||
      !o.tuning_objective.empty()) {
    auto patched = nlohmann::json::parse(c.ToJson());
    if (!o.avesize_mode.empty()) patched["avesize_mode"] = o.avesize_mode;
    if (!o.rank_estimation.empty()) {
      patched["rank_estimation"] = o.rank_estimation;
    }
    if (!o.tuning_objective.empty()) {
      patched["tuning_objective"] = o.tuning_objective;
    }
    c = ExperimentConfig::FromJson(patched.dump());
  }
  if (!o.output_dir.empty()) c.output_dir = o.output_dir;
  c.Validate(/*check_paths=*/true);
  return c;
}

struct GenerateFlags {
  kgcp::SyntheticKgSpec spec;
  std::string spec_path;
  std::string out;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal prediction sets for knowledge-graph link prediction"};
  app.require_subcommand(1);

  GenerateFlags gen;
  gen.spec.counts = {400, 400, 50, 20, 10};
  auto* generate = app.add_subcommand("generate", "Write a synthetic dataset");
  generate->add_option("--spec", gen.spec_path,
                       "JSON config whose 'synthetic' section is used");
  generate->add_option("--entities", gen.spec.num_entities, "Entity count");
  generate->add_option("--predicates", gen.spec.num_predicates,
                       "Predicate count");
  generate->add_option("--counts", gen.spec.counts, "Triples per predicate")
      ->delimiter(',');
  generate->add_option("--noise", gen.spec.noise, "Noise rate");
  generate->add_option("--predicate-noise", gen.spec.predicate_noise,
                       "Noise rate per predicate")
      ->delimiter(',');
  generate->add_option("--clusters", gen.spec.clusters, "Entity clusters");
  generate->add_option("--families", gen.spec.families,
                       "Predicates sharing a cluster map (0: none)");
  generate->add_option("--seed", gen.spec.seed, "Generator seed");
  generate->add_option("--out", gen.out, "Output directory")->required();

  Overrides overrides;
  bool plot_data = false;
  auto* train = app.add_subcommand("train", "Train one model per seed");
  auto* score = app.add_subcommand("score", "Materialize score matrices");
  auto* calibrate = app.add_subcommand("calibrate", "Fit the CP methods");
  auto* evaluate =
      app.add_subcommand("evaluate", "Evaluate and print the comparison table");
  auto* run = app.add_subcommand("run", "All stages in memory");
  for (auto* sub : {train, score, calibrate, evaluate, run}) {
    AddPipelineFlags(sub, overrides);
  }
  evaluate->add_flag("--plot-data", plot_data, "Also write plot_data.csv");
  run->add_flag("--plot-data", plot_data, "Also write plot_data.csv");

  kgcp::MarginalStudyConfig marginal;
  kgcp::ConditionalStudyConfig conditional =
      kgcp::ConditionalStudyConfig::Default();
  auto* verify = app.add_subcommand(
      "verify-bounds", "Monte-Carlo checks of the coverage guarantees");
  verify->add_option("--marginal-resamples", marginal.resamples,
                     "Resamples of the marginal study");
  verify->add_option("--conditional-resamples", conditional.resamples,
                     "Resamples of the conditional study");
  verify->add_option("--seed", conditional.seed, "Study seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*generate) {
      if (!gen.spec_path.empty()) {
        const ExperimentConfig c = kgcp::LoadConfig(gen.spec_path);
        if (!c.synthetic) throw kgcp::ConfigError("spec has no 'synthetic'");
        gen.spec = *c.synthetic;
      }
      const kgcp::KnowledgeGraph kg = kgcp::GenerateSyntheticKg(gen.spec);
      kgcp::WriteDataset(gen.out, kg);
      std::printf("wrote %zu/%zu/%zu triples to %s\n", kg.train.size(),
                  kg.calib.size(), kg.test.size(), gen.out.c_str());
    } else if (*train) {
      kgcp::RunTrainStage(ResolveConfig(overrides));
    } else if (*score) {
      kgcp::RunScoreStage(ResolveConfig(overrides));
    } else if (*calibrate) {
      kgcp::RunCalibrateStage(ResolveConfig(overrides));
    } else if (*evaluate) {
      const auto result =
          kgcp::RunEvaluateStage(ResolveConfig(overrides), plot_data);
      std::cout << kgcp::FormatTable(result.rows);
    } else if (*run) {
      const ExperimentConfig config = ResolveConfig(overrides);
      const auto result = kgcp::RunExperiment(config);
      std::filesystem::create_directories(config.output_dir);
      {
        std::ofstream echo(std::filesystem::path(config.output_dir) /
                           "config.json");
        echo << config.ToJson();
      }
      kgcp::WriteResults(config.output_dir, result, plot_data);
      std::cout << kgcp::FormatTable(result.rows);
    } else if (*verify) {
      const auto m = kgcp::RunMarginalStudy(marginal);
      std::cout << kgcp::FormatMarginalStudy(m);
      const auto c = kgcp::RunConditionalStudy(conditional);
      std::cout << kgcp::FormatConditionalStudy(c);
      const bool pass = m.pass && c.bounds_pass && c.shrinkage_pass;
      std::cout << (pass ? "verify-bounds: PASS\n" : "verify-bounds: FAIL\n");
      return pass ? 0 : kExitVerification;
    }
  } catch (const kgcp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
