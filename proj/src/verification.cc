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

#include "kgcp/verification.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "kgcp/cp_engine.h"
#include "kgcp/error.h"
#include "kgcp/evaluation.h"
#include "kgcp/experiment.h"
#include "kgcp/query_evaluation.h"
#include "kgcp/random.h"

namespace kgcp {
namespace {

struct Moments {
  double sum = 0;
  double sum_sq = 0;
  int64_t n = 0;

  void Add(double x) {
    sum += x;
    sum_sq += x * x;
    ++n;
  }
  double Mean() const { return n > 0 ? sum / n : 0; }
  // Standard error of the mean.
  double StandardError() const {
    if (n < 2) return 0;
    const double mean = Mean();
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1));
    return std::sqrt(var / n);
  }
};

double Pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  if (n < 2) return 0;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0 || syy <= 0) return 0;
  return sxy / std::sqrt(sxx * syy);
}

ScoredPair GaussianPair(Rng& rng, int32_t num_entities, double signal) {
  std::vector<double> raw(num_entities);
  for (double& v : raw) v = StandardNormal(rng);
  ScoredPair pair;
  pair.answer = static_cast<EntityId>(UniformIndex(rng, num_entities));
  raw[pair.answer] += signal;
  pair.nonconformity = SoftmaxScores(raw).values;
  pair.ranks = CandidateRanks(raw);
  return pair;
}

}  // namespace

MarginalStudyResult RunMarginalStudy(const MarginalStudyConfig& config) {
  if (config.calib_pairs < 1 || config.test_pairs < 1 ||
      config.resamples < 2 || config.num_entities < 2) {
    throw ConfigError("marginal study needs pairs, entities and resamples");
  }
  const CalibrationContext context{config.num_entities, 1, false};
  Rng rng(config.seed);
  Moments coverage;
  std::vector<ScoredPair> calib(config.calib_pairs);
  for (int32_t r = 0; r < config.resamples; ++r) {
    for (ScoredPair& pair : calib) {
      pair = GaussianPair(rng, config.num_entities, config.signal);
    }
    const CalibratedModel model =
        FitKgcp(ToCalibrationSamples(calib), config.epsilon, context);
    int64_t covered = 0;
    for (int32_t i = 0; i < config.test_pairs; ++i) {
      covered += Covers(model, GaussianPair(rng, config.num_entities,
                                            config.signal));
    }
    coverage.Add(static_cast<double>(covered) / config.test_pairs);
  }
  MarginalStudyResult result;
  result.mean_coverage = coverage.Mean();
  result.standard_error = coverage.StandardError();
  result.lower = 1.0 - config.epsilon;
  result.upper = 1.0 - config.epsilon + 1.0 / (config.calib_pairs + 1);
  const double slack = 3 * result.standard_error;
  result.pass = result.mean_coverage >= result.lower - slack &&
                result.mean_coverage <= result.upper + slack;
  return result;
}

ConditionalStudyConfig ConditionalStudyConfig::Default() {
  ConditionalStudyConfig config;
  config.kg.num_entities = 100;
  config.kg.num_predicates = 5;
  config.kg.counts = {600, 400, 300, 80, 60};
  config.kg.predicate_noise = {0.05, 0.1, 0.2, 0.3, 0.4};
  config.kg.clusters = 10;
  config.kg.train_fraction = 0.6;
  config.kg.calib_fraction = 0.2;
  config.kg.test_fraction = 0.2;
  config.kg.seed = 7;
  config.train.dim = 16;
  config.train.epochs = 60;
  return config;
}

ConditionalStudyResult RunConditionalStudy(
    const ConditionalStudyConfig& config) {
  if (config.resamples < 2) throw ConfigError("need at least 2 resamples");
  if (!(config.calib_share > 0 && config.calib_share < 1)) {
    throw ConfigError("calib_share must lie in (0, 1)");
  }
  const KnowledgeGraph kg = GenerateSyntheticKg(config.kg);
  const KnownAnswers known(kg);
  TrainConfig train = config.train;
  train.seed = config.seed;
  const EmbeddingModel model = Train(kg, config.model, train);

  std::vector<Triple> held_out = kg.calib;
  held_out.insert(held_out.end(), kg.test.begin(), kg.test.end());
  const QueryAnswerSet pool_set = MakeQueries(held_out, true, SplitName::kCalib);
  const std::vector<ScoredPair> pool =
      ScorePairs(pool_set.pairs, ModelScoreProvider(model), &known,
                 ScorerConfig{}, DrawStream::kCalib);
  const CalibrationContext context{model.num_entities, model.num_predicates,
                                   false};

  // The partition is fixed from the nominal calibration share so that the
  // resamples stay exchangeable within each part.
  std::vector<int64_t> pool_counts(context.num_strata(), 0);
  for (const ScoredPair& pair : pool) {
    ++pool_counts[context.StratumOf(pair.query.predicate, pair.query.direction)];
  }
  std::vector<int64_t> nominal(pool_counts.size());
  for (size_t s = 0; s < nominal.size(); ++s) {
    nominal[s] = static_cast<int64_t>(
        std::floor(config.calib_share * static_cast<double>(pool_counts[s])));
  }
  const PredicatePartition partition = BuildPartition(
      nominal, StratumVectors(PredicateVectors::FromModel(model), context),
      config.phi);
  const size_t num_parts = partition.parts.size();
  std::vector<std::vector<size_t>> members(num_parts);
  for (size_t i = 0; i < pool.size(); ++i) {
    const int32_t s =
        context.StratumOf(pool[i].query.predicate, pool[i].query.direction);
    members[partition.part_of[s]].push_back(i);
  }
  std::vector<size_t> calib_size(num_parts);
  ConditionalStudyResult result;
  result.min_part_calib = std::numeric_limits<int64_t>::max();
  for (size_t g = 0; g < num_parts; ++g) {
    calib_size[g] = static_cast<size_t>(std::llround(
        config.calib_share * static_cast<double>(members[g].size())));
    result.min_part_calib =
        std::min<int64_t>(result.min_part_calib, calib_size[g]);
  }

  const size_t num_gammas = config.gammas.size();
  std::vector<std::vector<Moments>> coverage(num_gammas,
                                             std::vector<Moments>(num_parts));
  auto lower_gap = coverage, upper_gap = coverage, lower = coverage,
       upper = coverage;
  std::vector<ShrinkageOutcome> shrinkage(num_gammas);
  for (size_t gi = 0; gi < num_gammas; ++gi) {
    shrinkage[gi].gamma = config.gammas[gi];
  }
  std::vector<double> sigma_bars, gaps;

  Rng rng(MixSeed(config.seed, 40, 0));
  std::vector<CalibrationSample> samples;
  std::vector<ScoredPair> test;
  for (int32_t r = 0; r < config.resamples; ++r) {
    samples.clear();
    test.clear();
    for (size_t g = 0; g < num_parts; ++g) {
      Shuffle(std::span<size_t>(members[g]), rng);
      for (size_t k = 0; k < members[g].size(); ++k) {
        const ScoredPair& pair = pool[members[g][k]];
        if (k < calib_size[g]) {
          samples.push_back({pair.query.predicate, pair.query.direction,
                             pair.answer_score(), pair.answer_rank()});
        } else {
          test.push_back(pair);
        }
      }
    }
    const CalibratedModel part_mcp =
        FitPartMcp(samples, partition, config.epsilon, context);
    const double mcp_avesize = AveSize(part_mcp, test);
    for (size_t gi = 0; gi < num_gammas; ++gi) {
      CondKgcpOptions options;
      options.gamma = config.gammas[gi];
      const CalibratedModel cond =
          FitCondKgcp(samples, partition, config.epsilon, options, context);
      std::vector<int64_t> hits(num_parts, 0), totals(num_parts, 0);
      for (const ScoredPair& pair : test) {
        const int32_t g = RuleFor(cond, pair.query).part;
        ++totals[g];
        hits[g] += Covers(cond, pair);
      }
      for (size_t g = 0; g < num_parts; ++g) {
        const PartCalibration& part = cond.parts[g];
        const double cov =
            static_cast<double>(hits[g]) / static_cast<double>(totals[g]);
        const double lo =
            1 - config.epsilon - (1 - options.gamma) * part.miscoverage;
        const double hi = 1 - config.epsilon + options.gamma * part.miscoverage +
                          1.0 / static_cast<double>(part.calib_count + 1);
        coverage[gi][g].Add(cov);
        lower[gi][g].Add(lo);
        upper[gi][g].Add(hi);
        lower_gap[gi][g].Add(cov - lo);
        upper_gap[gi][g].Add(hi - cov);
      }
      const ShrinkageReport report =
          VerifyShrinkageCondition(cond, part_mcp, test);
      const double avesize = AveSize(cond, test);
      ShrinkageOutcome& out = shrinkage[gi];
      ++out.runs;
      bool all_le_one = report.evaluated_parts > 0;
      for (const ShrinkagePart& p : report.parts) {
        if (p.sigma && *p.sigma > 1) all_le_one = false;
      }
      if (all_le_one) {
        ++out.runs_all_sigma_le_one;
        if (avesize > mcp_avesize) ++out.violations;
      }
      out.mean_csr += report.csr;
      out.mean_sigma_bar += report.sigma_bar;
      out.mean_avesize += avesize;
      out.mean_part_mcp_avesize += mcp_avesize;
      sigma_bars.push_back(report.sigma_bar);
      gaps.push_back(avesize - mcp_avesize);
    }
  }

  result.bounds_pass = true;
  for (size_t gi = 0; gi < num_gammas; ++gi) {
    for (size_t g = 0; g < num_parts; ++g) {
      PartBoundOutcome out;
      out.gamma = config.gammas[gi];
      out.part = static_cast<int32_t>(g);
      out.strata = partition.parts[g];
      out.calib_pairs = static_cast<int64_t>(calib_size[g]);
      out.test_pairs = static_cast<int64_t>(members[g].size() - calib_size[g]);
      out.mean_coverage = coverage[gi][g].Mean();
      out.mean_lower = lower[gi][g].Mean();
      out.mean_upper = upper[gi][g].Mean();
      out.lower_se = lower_gap[gi][g].StandardError();
      out.upper_se = upper_gap[gi][g].StandardError();
      out.within = lower_gap[gi][g].Mean() >= -3 * out.lower_se &&
                   upper_gap[gi][g].Mean() >= -3 * out.upper_se;
      result.bounds_pass = result.bounds_pass && out.within;
      result.bounds.push_back(out);
    }
  }
  result.shrinkage_pass = true;
  for (ShrinkageOutcome& out : shrinkage) {
    out.mean_csr /= out.runs;
    out.mean_sigma_bar /= out.runs;
    out.mean_avesize /= out.runs;
    out.mean_part_mcp_avesize /= out.runs;
    if (out.violations > 0) result.shrinkage_pass = false;
  }
  result.shrinkage = std::move(shrinkage);
  result.sigma_gap_correlation = Pearson(sigma_bars, gaps);
  if (!(result.sigma_gap_correlation > 0)) result.shrinkage_pass = false;
  return result;
}

std::string FormatMarginalStudy(const MarginalStudyResult& result) {
  char line[256];
  std::snprintf(line, sizeof(line),
                "marginal coverage %.4f (se %.4f), target [%.4f, %.4f]: %s\n",
                result.mean_coverage, result.standard_error, result.lower,
                result.upper, result.pass ? "PASS" : "FAIL");
  return line;
}

std::string FormatConditionalStudy(const ConditionalStudyResult& result) {
  std::string out;
  char line[320];
  for (const PartBoundOutcome& b : result.bounds) {
    std::string strata;
    for (int32_t s : b.strata) {
      strata += (strata.empty() ? "" : ",") + std::to_string(s);
    }
    std::snprintf(line, sizeof(line),
                  "gamma %.2f part %d {%s} n_cal %lld n_test %lld: coverage "
                  "%.4f in [%.4f, %.4f] (se %.4f/%.4f) %s\n",
                  b.gamma, b.part, strata.c_str(),
                  static_cast<long long>(b.calib_pairs),
                  static_cast<long long>(b.test_pairs), b.mean_coverage,
                  b.mean_lower, b.mean_upper, b.lower_se, b.upper_se,
                  b.within ? "ok" : "OUTSIDE");
    out += line;
  }
  for (const ShrinkageOutcome& s : result.shrinkage) {
    std::snprintf(line, sizeof(line),
                  "gamma %.2f: CSR %.3f sigma_bar %.3f AveSize %.3f vs part "
                  "MCP %.3f; %d/%d runs with all sigma <= 1, %d violations\n",
                  s.gamma, s.mean_csr, s.mean_sigma_bar, s.mean_avesize,
                  s.mean_part_mcp_avesize, s.runs_all_sigma_le_one, s.runs,
                  s.violations);
    out += line;
  }
  std::snprintf(line, sizeof(line),
                "corr(sigma_bar, AveSize gap) %.3f; bounds %s; shrinkage %s\n",
                result.sigma_gap_correlation,
                result.bounds_pass ? "PASS" : "FAIL",
                result.shrinkage_pass ? "PASS" : "FAIL");
  out += line;
  return out;
}

}  // namespace kgcp
