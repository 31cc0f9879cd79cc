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

#include "kgcp/cp_engine.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "json.hpp"
#include "kgcp/error.h"

namespace kgcp {
namespace {

using nlohmann::json;

// Order statistic at error rate `epsilon` without range checks on epsilon;
// epsilon <= 0 yields +inf.
double OrderStatisticOrInf(std::vector<double> scores, double epsilon) {
  const auto order = QuantileOrder(scores.size(), epsilon);
  if (!order) return kInfinity;
  const auto nth = scores.begin() + static_cast<std::ptrdiff_t>(*order - 1);
  std::nth_element(scores.begin(), nth, scores.end());
  return *nth;
}

void CheckEpsilon(double epsilon) {
  if (!(epsilon > 0 && epsilon < 1)) {
    throw ConfigError("epsilon must lie in (0, 1)");
  }
}

void CheckContext(const CalibrationContext& context) {
  if (context.num_entities <= 0 || context.num_predicates <= 0) {
    throw ConfigError("calibration context needs entities and predicates");
  }
}

int32_t StratumOfSample(const CalibrationContext& context,
                        const CalibrationSample& s) {
  if (s.predicate < 0 || s.predicate >= context.num_predicates) {
    throw Error("calibration predicate out of range");
  }
  return context.StratumOf(s.predicate, s.direction);
}

json EncodeDouble(double v) {
  if (std::isinf(v) && v > 0) return "inf";
  return v;
}

double DecodeDouble(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kInfinity;
    throw ParseError("calibrated model", 0, "bad number " + j.dump());
  }
  return j.get<double>();
}

}  // namespace

const char* MethodName(Method method) {
  switch (method) {
    case Method::kKgcp:
      return "KGCP";
    case Method::kMcp:
      return "MCP";
    case Method::kCondKgcp:
      return "CondKGCP";
  }
  return "?";
}

Method ParseMethod(std::string_view name) {
  if (name == "KGCP" || name == "kgcp") return Method::kKgcp;
  if (name == "MCP" || name == "mcp") return Method::kMcp;
  if (name == "CondKGCP" || name == "condkgcp") return Method::kCondKgcp;
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

std::optional<size_t> QuantileOrder(size_t n, double epsilon) {
  const double x = static_cast<double>(n + 1) * (1.0 - epsilon);
  const double nearest = std::round(x);
  double order = std::abs(x - nearest) <= 1e-9 * std::max(1.0, x)
                     ? nearest
                     : std::ceil(x);
  order = std::max(order, 1.0);
  if (order > static_cast<double>(n)) return std::nullopt;
  return static_cast<size_t>(order);
}

double Quantile(std::span<const double> scores, double epsilon) {
  if (scores.empty()) throw Error("quantile of an empty multiset");
  CheckEpsilon(epsilon);
  return OrderStatisticOrInf({scores.begin(), scores.end()}, epsilon);
}

std::vector<CalibrationSample> ToCalibrationSamples(
    std::span<const ScoredPair> pairs) {
  std::vector<CalibrationSample> out;
  out.reserve(pairs.size());
  for (const ScoredPair& p : pairs) {
    out.push_back({p.query.predicate, p.query.direction, p.answer_score(),
                   p.answer_rank()});
  }
  return out;
}

std::vector<int64_t> StratumCounts(std::span<const CalibrationSample> samples,
                                   const CalibrationContext& context) {
  std::vector<int64_t> counts(context.num_strata(), 0);
  for (const CalibrationSample& s : samples) {
    ++counts[StratumOfSample(context, s)];
  }
  return counts;
}

void PredicatePartition::Validate(std::span<const int64_t> counts) const {
  if (counts.size() != part_of.size()) {
    throw Error("partition size does not match the number of strata");
  }
  std::vector<int> seen(part_of.size(), 0);
  for (size_t g = 0; g < parts.size(); ++g) {
    int64_t total = 0;
    if (parts[g].empty()) throw Error("partition has an empty part");
    for (int32_t r : parts[g]) {
      if (r < 0 || static_cast<size_t>(r) >= part_of.size()) {
        throw Error("partition member out of range");
      }
      if (seen[r]++) throw Error("partition parts overlap");
      if (part_of[r] != static_cast<int32_t>(g)) {
        throw Error("partition part_of disagrees with parts");
      }
      total += counts[r];
    }
    if (total < phi) {
      throw Error("partition part " + std::to_string(g) + " has " +
                  std::to_string(total) + " calibration pairs, below phi");
    }
  }
  for (int v : seen) {
    if (v == 0) throw Error("partition does not cover every predicate");
  }
}

PredicatePartition BuildPartition(
    std::span<const int64_t> counts,
    std::span<const std::vector<double>> vectors, int32_t phi) {
  if (counts.empty()) throw ConfigError("no predicates to partition");
  if (phi < 1) throw ConfigError("phi must be at least 1");
  if (vectors.size() != counts.size()) {
    throw ConfigError("need one predicate vector per predicate");
  }
  for (const auto& v : vectors) {
    if (v.size() != vectors.front().size()) {
      throw ConfigError("predicate vectors differ in dimension");
    }
  }
  if (phi > *std::max_element(counts.begin(), counts.end())) {
    throw ConfigError("phi exceeds max per-predicate calibration count");
  }

  PredicatePartition partition;
  partition.phi = phi;
  partition.part_of.assign(counts.size(), -1);
  std::vector<int32_t> seeds;
  for (size_t r = 0; r < counts.size(); ++r) {
    if (counts[r] >= phi) {
      partition.part_of[r] = static_cast<int32_t>(seeds.size());
      seeds.push_back(static_cast<int32_t>(r));
      partition.parts.push_back({static_cast<int32_t>(r)});
    }
  }
  for (size_t r = 0; r < counts.size(); ++r) {
    if (counts[r] >= phi) continue;
    double best_distance = kInfinity;
    int32_t best_part = 0;
    for (size_t g = 0; g < seeds.size(); ++g) {
      const auto& a = vectors[r];
      const auto& b = vectors[seeds[g]];
      double distance = 0;
      for (size_t i = 0; i < a.size(); ++i) distance += std::abs(a[i] - b[i]);
      if (distance < best_distance) {
        best_distance = distance;
        best_part = static_cast<int32_t>(g);
      }
    }
    partition.part_of[r] = best_part;
    partition.parts[best_part].push_back(static_cast<int32_t>(r));
  }
  for (auto& part : partition.parts) std::sort(part.begin(), part.end());
  partition.Validate(counts);
  return partition;
}

RankThreshold ComputeRankThreshold(std::span<const int32_t> ranks,
                                   double epsilon, int32_t num_entities) {
  if (ranks.empty()) throw Error("rank threshold of an empty part");
  std::vector<int32_t> sorted(ranks.begin(), ranks.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  auto miscoverage = [&](int32_t k) {
    const auto above = sorted.end() - std::upper_bound(sorted.begin(),
                                                       sorted.end(), k);
    return static_cast<double>(above) / n;
  };
  // The miscoverage only drops at observed ranks, so k = 1 and the distinct
  // rank values are the only candidates for the minimum.
  if (const double m = miscoverage(1); m < epsilon) return {1, m};
  for (size_t i = 0; i < sorted.size(); ++i) {
    if (i > 0 && sorted[i] == sorted[i - 1]) continue;
    if (sorted[i] <= 1) continue;
    if (const double m = miscoverage(sorted[i]); m < epsilon) {
      return {sorted[i], m};
    }
  }
  return {num_entities, miscoverage(num_entities)};
}

CalibratedModel FitKgcp(std::span<const CalibrationSample> samples,
                        double epsilon, const CalibrationContext& context) {
  CheckEpsilon(epsilon);
  CheckContext(context);
  CalibratedModel model;
  model.method = Method::kKgcp;
  model.epsilon = epsilon;
  model.context = context;
  if (!context.split_directions) {
    std::vector<double> scores;
    scores.reserve(samples.size());
    for (const CalibrationSample& s : samples) scores.push_back(s.score);
    model.thresholds = {Quantile(scores, epsilon)};
    return model;
  }
  std::vector<double> by_direction[2];
  for (const CalibrationSample& s : samples) {
    by_direction[static_cast<int>(s.direction)].push_back(s.score);
  }
  for (int d = 0; d < 2; ++d) {
    if (by_direction[d].empty()) {
      model.thresholds.push_back(kInfinity);
      model.warnings.push_back(std::string("no calibration pairs for ") +
                               DirectionName(static_cast<Direction>(d)) +
                               " queries");
    } else {
      model.thresholds.push_back(Quantile(by_direction[d], epsilon));
    }
  }
  return model;
}

CalibratedModel FitMcp(std::span<const CalibrationSample> samples,
                       double epsilon, const CalibrationContext& context) {
  CheckEpsilon(epsilon);
  CheckContext(context);
  CalibratedModel model;
  model.method = Method::kMcp;
  model.epsilon = epsilon;
  model.context = context;
  std::vector<std::vector<double>> scores(context.num_strata());
  for (const CalibrationSample& s : samples) {
    scores[StratumOfSample(context, s)].push_back(s.score);
  }
  for (size_t g = 0; g < scores.size(); ++g) {
    if (scores[g].empty()) {
      model.thresholds.push_back(kInfinity);
      model.warnings.push_back("stratum " + std::to_string(g) +
                               " has no calibration pairs");
    } else {
      model.thresholds.push_back(Quantile(scores[g], epsilon));
    }
  }
  return model;
}

CalibratedModel FitCondKgcp(std::span<const CalibrationSample> samples,
                            const PredicatePartition& partition, double epsilon,
                            const CondKgcpOptions& options,
                            const CalibrationContext& context) {
  CheckEpsilon(epsilon);
  CheckContext(context);
  if (!(options.gamma >= 0 && options.gamma <= 1)) {
    throw ConfigError("gamma must lie in [0, 1]");
  }
  if (static_cast<int32_t>(partition.part_of.size()) != context.num_strata()) {
    throw ConfigError("partition does not match the calibration strata");
  }
  if (options.forced_k && *options.forced_k < 1) {
    throw ConfigError("forced rank threshold must be >= 1");
  }
  CalibratedModel model;
  model.method = Method::kCondKgcp;
  model.epsilon = epsilon;
  model.gamma = options.gamma;
  model.context = context;
  model.partition = partition;

  const size_t num_parts = partition.parts.size();
  std::vector<std::vector<double>> scores(num_parts);
  std::vector<std::vector<int32_t>> ranks(num_parts);
  for (const CalibrationSample& s : samples) {
    const int32_t g = partition.part_of[StratumOfSample(context, s)];
    scores[g].push_back(s.score);
    if (!options.rank_samples) ranks[g].push_back(s.rank);
  }
  if (options.rank_samples) {
    for (const CalibrationSample& s : *options.rank_samples) {
      ranks[partition.part_of[StratumOfSample(context, s)]].push_back(s.rank);
    }
  }

  model.parts.resize(num_parts);
  for (size_t g = 0; g < num_parts; ++g) {
    PartCalibration& part = model.parts[g];
    part.calib_count = static_cast<int64_t>(scores[g].size());
    if (scores[g].empty()) {
      part.k_hat = context.num_entities;
      part.adjusted_epsilon = epsilon;
      model.warnings.push_back("part " + std::to_string(g) +
                               " has no calibration pairs");
      continue;
    }
    RankThreshold rank;
    if (ranks[g].empty()) {
      rank = {context.num_entities, 0.0};
      model.warnings.push_back("part " + std::to_string(g) +
                               " has no pairs for rank calibration");
    } else if (options.forced_k) {
      const auto above = std::count_if(ranks[g].begin(), ranks[g].end(),
                                       [&](int32_t r) {
                                         return r > *options.forced_k;
                                       });
      rank = {*options.forced_k,
              static_cast<double>(above) / static_cast<double>(ranks[g].size())};
    } else {
      rank = ComputeRankThreshold(ranks[g], epsilon, context.num_entities);
    }
    part.k_hat = rank.k_hat;
    part.miscoverage = rank.miscoverage;
    part.adjusted_epsilon = epsilon - options.gamma * rank.miscoverage;
    part.score_threshold =
        OrderStatisticOrInf(std::move(scores[g]), part.adjusted_epsilon);
  }
  return model;
}

CalibratedModel FitPartMcp(std::span<const CalibrationSample> samples,
                           const PredicatePartition& partition, double epsilon,
                           const CalibrationContext& context) {
  CondKgcpOptions options;
  options.gamma = 0;
  options.forced_k = context.num_entities;
  return FitCondKgcp(samples, partition, epsilon, options, context);
}

SetRule RuleFor(const CalibratedModel& model, const Query& query) {
  if (query.predicate < 0 || query.predicate >= model.context.num_predicates) {
    throw Error("query predicate not covered by the calibrated model");
  }
  const int32_t stratum =
      model.context.StratumOf(query.predicate, query.direction);
  SetRule rule;
  switch (model.method) {
    case Method::kKgcp:
      rule.score_threshold =
          model.thresholds.at(model.context.split_directions
                                  ? static_cast<int>(query.direction)
                                  : 0);
      break;
    case Method::kMcp:
      rule.score_threshold = model.thresholds.at(stratum);
      break;
    case Method::kCondKgcp: {
      const int32_t g = model.partition.part_of.at(stratum);
      rule.score_threshold = model.parts.at(g).score_threshold;
      rule.max_rank = model.parts.at(g).k_hat;
      rule.part = g;
      break;
    }
  }
  return rule;
}

PredictionSet PredictSet(const CalibratedModel& model, const Query& query,
                         std::span<const double> nonconformity,
                         std::span<const int32_t> ranks) {
  if (nonconformity.size() != ranks.size()) {
    throw Error("nonconformity and rank vectors differ in length");
  }
  const SetRule rule = RuleFor(model, query);
  PredictionSet set;
  set.query = query;
  set.method = model.method;
  for (size_t e = 0; e < nonconformity.size(); ++e) {
    if (rule.Contains(nonconformity[e], ranks[e])) {
      set.members.push_back(static_cast<EntityId>(e));
    }
  }
  return set;
}

int64_t PredictSetSize(const CalibratedModel& model, const ScoredPair& pair) {
  const SetRule rule = RuleFor(model, pair.query);
  int64_t size = 0;
  for (size_t e = 0; e < pair.nonconformity.size(); ++e) {
    size += rule.Contains(pair.nonconformity[e], pair.ranks[e]);
  }
  return size;
}

bool Covers(const CalibratedModel& model, const ScoredPair& pair) {
  return RuleFor(model, pair.query)
      .Contains(pair.answer_score(), pair.answer_rank());
}

ShrinkageReport VerifyShrinkageCondition(const CalibratedModel& cond,
                                         const CalibratedModel& part_mcp,
                                         std::span<const ScoredPair> test) {
  if (cond.method != Method::kCondKgcp || part_mcp.method != Method::kCondKgcp ||
      cond.partition.parts != part_mcp.partition.parts) {
    throw Error("shrinkage check needs a CondKGCP model and its part-level "
                "MCP counterpart on the same partition");
  }
  ShrinkageReport report;
  report.parts.resize(cond.parts.size());
  for (size_t g = 0; g < report.parts.size(); ++g) {
    report.parts[g].part = static_cast<int32_t>(g);
  }
  for (const ScoredPair& pair : test) {
    const SetRule dual = RuleFor(cond, pair.query);
    const SetRule single = RuleFor(part_mcp, pair.query);
    ShrinkagePart& part = report.parts[dual.part];
    ++part.test_pairs;
    for (size_t e = 0; e < pair.nonconformity.size(); ++e) {
      const double s = pair.nonconformity[e];
      const int32_t r = pair.ranks[e];
      part.dual_count += dual.Contains(s, r);
      part.threshold_count += single.Contains(s, r);
    }
  }
  int32_t satisfied = 0;
  double sigma_sum = 0;
  for (ShrinkagePart& part : report.parts) {
    if (part.test_pairs == 0) {
      part.skipped = true;
      continue;
    }
    if (part.threshold_count == 0) {
      part.zero_denominator = true;
      continue;
    }
    part.sigma = static_cast<double>(part.dual_count) /
                 static_cast<double>(part.threshold_count);
    ++report.evaluated_parts;
    sigma_sum += *part.sigma;
    satisfied += *part.sigma <= 1.0;
  }
  if (report.evaluated_parts > 0) {
    report.csr = static_cast<double>(satisfied) / report.evaluated_parts;
    report.sigma_bar = sigma_sum / report.evaluated_parts;
  }
  return report;
}

std::string CalibratedModelToJson(const CalibratedModel& model) {
  json j;
  j["format_version"] = 1;
  j["method"] = MethodName(model.method);
  j["epsilon"] = model.epsilon;
  j["gamma"] = model.gamma;
  j["num_entities"] = model.context.num_entities;
  j["num_predicates"] = model.context.num_predicates;
  j["split_directions"] = model.context.split_directions;
  if (model.method != Method::kCondKgcp) {
    json thresholds = json::array();
    for (double t : model.thresholds) thresholds.push_back(EncodeDouble(t));
    j["thresholds"] = thresholds;
    if (model.method == Method::kKgcp && model.thresholds.size() == 1) {
      j["global_threshold"] = EncodeDouble(model.thresholds.front());
    }
  } else {
    j["phi"] = model.partition.phi;
    j["partition"] = model.partition.parts;
    json parts = json::array();
    for (const PartCalibration& p : model.parts) {
      parts.push_back({{"k_hat", p.k_hat},
                       {"miscoverage", p.miscoverage},
                       {"adjusted_epsilon", p.adjusted_epsilon},
                       {"score_threshold", EncodeDouble(p.score_threshold)},
                       {"calib_count", p.calib_count}});
    }
    j["parts"] = parts;
  }
  j["warnings"] = model.warnings;
  return j.dump(2);
}

CalibratedModel CalibratedModelFromJson(std::string_view text) {
  CalibratedModel model;
  try {
    const json j = json::parse(text);
    model.method = ParseMethod(j.at("method").get<std::string>());
    model.epsilon = j.at("epsilon").get<double>();
    model.gamma = j.at("gamma").get<double>();
    model.context.num_entities = j.at("num_entities").get<int32_t>();
    model.context.num_predicates = j.at("num_predicates").get<int32_t>();
    model.context.split_directions = j.at("split_directions").get<bool>();
    if (model.method != Method::kCondKgcp) {
      for (const json& t : j.at("thresholds")) {
        model.thresholds.push_back(DecodeDouble(t));
      }
    } else {
      model.partition.phi = j.at("phi").get<int32_t>();
      model.partition.parts =
          j.at("partition").get<std::vector<std::vector<int32_t>>>();
      model.partition.part_of.assign(model.context.num_strata(), -1);
      for (size_t g = 0; g < model.partition.parts.size(); ++g) {
        for (int32_t r : model.partition.parts[g]) {
          model.partition.part_of.at(r) = static_cast<int32_t>(g);
        }
      }
      for (const json& p : j.at("parts")) {
        PartCalibration part;
        part.k_hat = p.at("k_hat").get<int32_t>();
        part.miscoverage = p.at("miscoverage").get<double>();
        part.adjusted_epsilon = p.at("adjusted_epsilon").get<double>();
        part.score_threshold = DecodeDouble(p.at("score_threshold"));
        part.calib_count = p.at("calib_count").get<int64_t>();
        model.parts.push_back(part);
      }
    }
    if (j.contains("warnings")) {
      model.warnings = j.at("warnings").get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw ParseError("calibrated model", 0, e.what());
  } catch (const std::out_of_range& e) {
    throw ParseError("calibrated model", 0, e.what());
  }
  return model;
}

}  // namespace kgcp
