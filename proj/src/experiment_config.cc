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

#include "kgcp/experiment_config.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "kgcp/error.h"

namespace kgcp {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void RejectUnknown(const json& j, const std::set<std::string>& known,
                   const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) {
      throw ConfigError("unknown field '" + key + "' in " + where);
    }
  }
}

template <typename T>
void Take(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

ordered_json SyntheticToJson(const SyntheticKgSpec& s) {
  return {{"num_entities", s.num_entities},
          {"num_predicates", s.num_predicates},
          {"counts", s.counts},
          {"noise", s.noise},
          {"predicate_noise", s.predicate_noise},
          {"clusters", s.clusters},
          {"families", s.families},
          {"train_fraction", s.train_fraction},
          {"calib_fraction", s.calib_fraction},
          {"test_fraction", s.test_fraction},
          {"seed", s.seed}};
}

SyntheticKgSpec SyntheticFromJson(const json& j) {
  RejectUnknown(j,
                {"num_entities", "num_predicates", "counts", "noise",
                 "predicate_noise", "clusters", "families", "train_fraction",
                 "calib_fraction", "test_fraction", "seed"},
                "synthetic");
  SyntheticKgSpec s;
  Take(j, "num_entities", s.num_entities);
  Take(j, "num_predicates", s.num_predicates);
  Take(j, "counts", s.counts);
  Take(j, "noise", s.noise);
  Take(j, "predicate_noise", s.predicate_noise);
  Take(j, "clusters", s.clusters);
  Take(j, "families", s.families);
  Take(j, "train_fraction", s.train_fraction);
  Take(j, "calib_fraction", s.calib_fraction);
  Take(j, "test_fraction", s.test_fraction);
  Take(j, "seed", s.seed);
  return s;
}

ordered_json ModelToJson(const ModelSpec& m) {
  const TrainConfig& t = m.train;
  return {{"kind", ModelKindName(m.kind)}, {"dim", t.dim},
          {"norm", t.norm},                {"epochs", t.epochs},
          {"learning_rate", t.learning_rate},
          {"negatives", t.negatives},      {"margin", t.margin},
          {"l2", t.l2},                    {"batch_size", t.batch_size}};
}

ModelSpec ModelFromJson(const json& j) {
  RejectUnknown(j,
                {"kind", "dim", "norm", "epochs", "learning_rate", "negatives",
                 "margin", "l2", "batch_size"},
                "model");
  ModelSpec m;
  if (j.contains("kind")) m.kind = ParseModelKind(j.at("kind").get<std::string>());
  TrainConfig& t = m.train;
  Take(j, "dim", t.dim);
  Take(j, "norm", t.norm);
  Take(j, "epochs", t.epochs);
  Take(j, "learning_rate", t.learning_rate);
  Take(j, "negatives", t.negatives);
  Take(j, "margin", t.margin);
  Take(j, "l2", t.l2);
  Take(j, "batch_size", t.batch_size);
  return m;
}

}  // namespace

const char* RankEstimationName(RankEstimation value) {
  return value == RankEstimation::kHoldout ? "holdout" : "calibration";
}

const char* TuningObjectiveName(TuningObjective value) {
  switch (value) {
    case TuningObjective::kEf:
      return "ef";
    case TuningObjective::kCovGap:
      return "covgap";
    case TuningObjective::kAveSize:
      return "avesize";
  }
  return "?";
}

const char* AveSizeModeName(AveSizeMode value) {
  return value == AveSizeMode::kMacro ? "macro" : "global";
}

void ExperimentConfig::Validate(bool check_paths) const {
  if (dataset.has_value() == synthetic.has_value()) {
    throw ConfigError("set exactly one of 'dataset' and 'synthetic'");
  }
  if (model.has_value() == score_matrix.has_value()) {
    throw ConfigError("set exactly one of 'model' and 'score_matrix'");
  }
  if (synthetic) synthetic->Validate();
  split.Validate();
  if (model) model->train.Validate();
  scorer.Validate();
  if (methods.empty()) throw ConfigError("need at least one method");
  if (epsilons.empty()) throw ConfigError("need at least one epsilon");
  if (seeds.empty()) throw ConfigError("need at least one seed");
  if (gammas.empty()) throw ConfigError("need at least one gamma");
  if (phis.empty()) throw ConfigError("need at least one phi");
  for (double e : epsilons) {
    if (!(e > 0 && e < 1)) throw ConfigError("epsilon must lie in (0, 1)");
  }
  for (double g : gammas) {
    if (!(g >= 0 && g <= 1)) throw ConfigError("gamma must lie in [0, 1]");
  }
  for (int32_t p : phis) {
    if (p < 1) throw ConfigError("phi must be >= 1");
  }
  if (std::set<uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ConfigError("seeds must be distinct");
  }
  if (std::set<Method>(methods.begin(), methods.end()).size() !=
      methods.size()) {
    throw ConfigError("methods must be distinct");
  }
  const bool needs_vectors =
      std::find(methods.begin(), methods.end(), Method::kCondKgcp) !=
      methods.end();
  if (score_matrix && needs_vectors && !predicate_vectors) {
    throw ConfigError(
        "CondKGCP with imported scores needs 'predicate_vectors'");
  }
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  if (check_paths) {
    for (const auto* path : {&dataset, &score_matrix, &predicate_vectors}) {
      if (*path && !std::filesystem::exists(**path)) {
        throw ConfigError("no such file: " + **path);
      }
    }
  }
}

std::string ExperimentConfig::ToJson() const {
  ordered_json j;
  j["dataset"] = dataset ? ordered_json(*dataset) : ordered_json(nullptr);
  j["synthetic"] =
      synthetic ? SyntheticToJson(*synthetic) : ordered_json(nullptr);
  j["split"] = {{"train_fraction", split.train_fraction},
                {"calib_fraction", split.calib_fraction},
                {"test_fraction", split.test_fraction},
                {"seed", split.seed}};
  j["both_directions"] = split.both_directions;
  j["model"] = model ? ModelToJson(*model) : ordered_json(nullptr);
  j["score_matrix"] =
      score_matrix ? ordered_json(*score_matrix) : ordered_json(nullptr);
  j["predicate_vectors"] = predicate_vectors ? ordered_json(*predicate_vectors)
                                             : ordered_json(nullptr);
  j["scorer"] = {{"kind", ScorerKindName(scorer.kind)},
                 {"raps_lambda", scorer.raps_lambda},
                 {"raps_k_reg", scorer.raps_k_reg},
                 {"seed", scorer.rng_seed}};
  ordered_json method_names = ordered_json::array();
  for (Method m : methods) method_names.push_back(MethodName(m));
  j["methods"] = method_names;
  j["epsilons"] = epsilons;
  j["gammas"] = gammas;
  j["phis"] = phis;
  j["seeds"] = seeds;
  j["filtered"] = filtered;
  j["split_directions"] = split_directions;
  j["avesize_mode"] = AveSizeModeName(avesize_mode);
  j["rank_estimation"] = RankEstimationName(rank_estimation);
  j["tuning_objective"] = TuningObjectiveName(tuning_objective);
  j["output_dir"] = output_dir;
  return j.dump(2) + "\n";
}

ExperimentConfig ExperimentConfig::FromJson(std::string_view text) {
  ExperimentConfig c;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    RejectUnknown(j,
                  {"dataset", "synthetic", "split", "both_directions", "model",
                   "score_matrix", "predicate_vectors", "scorer", "methods",
                   "epsilons", "gammas", "phis", "seeds", "filtered",
                   "split_directions", "avesize_mode", "rank_estimation",
                   "tuning_objective", "output_dir"},
                  "config");
    if (j.contains("dataset") && !j["dataset"].is_null()) {
      c.dataset = j["dataset"].get<std::string>();
    }
    if (j.contains("synthetic") && !j["synthetic"].is_null()) {
      c.synthetic = SyntheticFromJson(j["synthetic"]);
    }
    if (j.contains("split")) {
      const json& s = j["split"];
      RejectUnknown(s,
                    {"train_fraction", "calib_fraction", "test_fraction",
                     "seed"},
                    "split");
      Take(s, "train_fraction", c.split.train_fraction);
      Take(s, "calib_fraction", c.split.calib_fraction);
      Take(s, "test_fraction", c.split.test_fraction);
      Take(s, "seed", c.split.seed);
    }
    Take(j, "both_directions", c.split.both_directions);
    if (j.contains("model") && !j["model"].is_null()) {
      c.model = ModelFromJson(j["model"]);
    }
    if (j.contains("score_matrix") && !j["score_matrix"].is_null()) {
      c.score_matrix = j["score_matrix"].get<std::string>();
    }
    if (j.contains("predicate_vectors") && !j["predicate_vectors"].is_null()) {
      c.predicate_vectors = j["predicate_vectors"].get<std::string>();
    }
    if (j.contains("scorer")) {
      const json& s = j["scorer"];
      RejectUnknown(s, {"kind", "raps_lambda", "raps_k_reg", "seed"}, "scorer");
      if (s.contains("kind")) {
        c.scorer.kind = ParseScorerKind(s["kind"].get<std::string>());
      }
      Take(s, "raps_lambda", c.scorer.raps_lambda);
      Take(s, "raps_k_reg", c.scorer.raps_k_reg);
      Take(s, "seed", c.scorer.rng_seed);
    }
    if (j.contains("methods")) {
      c.methods.clear();
      for (const json& m : j["methods"]) {
        c.methods.push_back(ParseMethod(m.get<std::string>()));
      }
    }
    Take(j, "epsilons", c.epsilons);
    Take(j, "gammas", c.gammas);
    Take(j, "phis", c.phis);
    Take(j, "seeds", c.seeds);
    Take(j, "filtered", c.filtered);
    Take(j, "split_directions", c.split_directions);
    if (j.contains("avesize_mode")) {
      const auto v = j["avesize_mode"].get<std::string>();
      if (v == "global") {
        c.avesize_mode = AveSizeMode::kGlobal;
      } else if (v == "macro") {
        c.avesize_mode = AveSizeMode::kMacro;
      } else {
        throw ConfigError("avesize_mode must be 'global' or 'macro'");
      }
    }
    if (j.contains("rank_estimation")) {
      const auto v = j["rank_estimation"].get<std::string>();
      if (v == "calibration") {
        c.rank_estimation = RankEstimation::kCalibration;
      } else if (v == "holdout") {
        c.rank_estimation = RankEstimation::kHoldout;
      } else {
        throw ConfigError("rank_estimation must be 'calibration' or 'holdout'");
      }
    }
    if (j.contains("tuning_objective")) {
      const auto v = j["tuning_objective"].get<std::string>();
      if (v == "ef") {
        c.tuning_objective = TuningObjective::kEf;
      } else if (v == "covgap") {
        c.tuning_objective = TuningObjective::kCovGap;
      } else if (v == "avesize") {
        c.tuning_objective = TuningObjective::kAveSize;
      } else {
        throw ConfigError("tuning_objective must be 'ef', 'covgap' or 'avesize'");
      }
    }
    Take(j, "output_dir", c.output_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return c;
}

ExperimentConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ExperimentConfig::FromJson(buffer.str());
}

}  // namespace kgcp
