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

#include "kgcp/evaluation.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "kgcp/error.h"

namespace kgcp {
namespace {

using nlohmann::json;

struct Accumulator {
  int64_t count = 0;
  double sum = 0;
};

double Mean(const std::vector<double>& v) {
  if (v.empty()) return 0;
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double SampleStd(const std::vector<double>& v) {
  if (v.size() < 2) return 0;
  const double m = Mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string Fmt(double v, int precision = 4) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", precision, v);
  return buffer;
}

std::string Full(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

json OptionalJson(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

CoverageMap CoveragePerPredicate(std::span<const QueryAnswer> test,
                                 std::span<const PredictionSet> sets) {
  if (test.size() != sets.size()) {
    throw Error("every test pair needs a prediction set");
  }
  std::map<PredicateId, Accumulator> acc;
  for (size_t i = 0; i < test.size(); ++i) {
    const auto& members = sets[i].members;
    auto& a = acc[test[i].query.predicate];
    ++a.count;
    a.sum += std::binary_search(members.begin(), members.end(), test[i].answer);
  }
  CoverageMap out;
  for (const auto& [r, a] : acc) {
    out[r] = {a.sum / static_cast<double>(a.count), a.count};
  }
  return out;
}

CoverageMap CoveragePerPredicate(const CalibratedModel& model,
                                 std::span<const ScoredPair> test) {
  std::map<PredicateId, Accumulator> acc;
  for (const ScoredPair& pair : test) {
    auto& a = acc[pair.query.predicate];
    ++a.count;
    a.sum += Covers(model, pair);
  }
  CoverageMap out;
  for (const auto& [r, a] : acc) {
    out[r] = {a.sum / static_cast<double>(a.count), a.count};
  }
  return out;
}

double CovGap(const CoverageMap& coverage, double epsilon) {
  if (coverage.empty()) throw Error("CovGap over an empty coverage map");
  double sum = 0;
  for (const auto& [r, c] : coverage) sum += std::abs(c.coverage - (1 - epsilon));
  return sum / static_cast<double>(coverage.size());
}

namespace {

double AveSizeFromSizes(std::span<const QueryAnswer> test,
                        const std::vector<int64_t>& sizes, AveSizeMode mode) {
  if (test.empty()) throw Error("AveSize over an empty test set");
  if (mode == AveSizeMode::kGlobal) {
    double sum = 0;
    for (int64_t s : sizes) sum += static_cast<double>(s);
    return sum / static_cast<double>(sizes.size());
  }
  std::map<PredicateId, Accumulator> acc;
  for (size_t i = 0; i < test.size(); ++i) {
    auto& a = acc[test[i].query.predicate];
    ++a.count;
    a.sum += static_cast<double>(sizes[i]);
  }
  double sum = 0;
  for (const auto& [r, a] : acc) sum += a.sum / static_cast<double>(a.count);
  return sum / static_cast<double>(acc.size());
}

}  // namespace

double AveSize(std::span<const QueryAnswer> test,
               std::span<const PredictionSet> sets, AveSizeMode mode) {
  if (test.size() != sets.size()) {
    throw Error("every test pair needs a prediction set");
  }
  std::vector<int64_t> sizes;
  sizes.reserve(sets.size());
  for (const PredictionSet& s : sets) {
    sizes.push_back(static_cast<int64_t>(s.members.size()));
  }
  return AveSizeFromSizes(test, sizes, mode);
}

double AveSize(const CalibratedModel& model, std::span<const ScoredPair> test,
               AveSizeMode mode) {
  std::vector<QueryAnswer> pairs;
  std::vector<int64_t> sizes;
  pairs.reserve(test.size());
  sizes.reserve(test.size());
  for (const ScoredPair& pair : test) {
    pairs.push_back({pair.query, pair.answer});
    sizes.push_back(PredictSetSize(model, pair));
  }
  return AveSizeFromSizes(pairs, sizes, mode);
}

std::optional<double> EfficiencyRate(double covgap, double avesize,
                                     double reference_covgap,
                                     double reference_avesize) {
  const double reduction = reference_covgap - covgap;
  if (!(reduction > 0) || avesize == reference_avesize) return std::nullopt;
  return (avesize - reference_avesize) / reduction * 0.01;
}

std::vector<BoundCheck> CheckCoverageBounds(const CalibratedModel& cond,
                                            std::span<const ScoredPair> test) {
  if (cond.method != Method::kCondKgcp) {
    throw Error("coverage bounds apply to CondKGCP models");
  }
  std::vector<Accumulator> acc(cond.parts.size());
  for (const ScoredPair& pair : test) {
    const SetRule rule = RuleFor(cond, pair.query);
    auto& a = acc[rule.part];
    ++a.count;
    a.sum += rule.Contains(pair.answer_score(), pair.answer_rank());
  }
  std::vector<BoundCheck> out;
  const double eps = cond.epsilon;
  for (size_t g = 0; g < cond.parts.size(); ++g) {
    if (acc[g].count == 0) continue;
    const PartCalibration& part = cond.parts[g];
    BoundCheck check;
    check.part = static_cast<int32_t>(g);
    check.test_pairs = acc[g].count;
    check.coverage = acc[g].sum / static_cast<double>(acc[g].count);
    check.lower = 1 - eps - (1 - cond.gamma) * part.miscoverage;
    check.upper = 1 - eps + cond.gamma * part.miscoverage +
                  1.0 / (static_cast<double>(part.calib_count) + 1);
    check.slack = 3 * std::sqrt(eps * (1 - eps) /
                                static_cast<double>(acc[g].count));
    check.within = check.coverage >= check.lower - check.slack &&
                   check.coverage <= check.upper + check.slack;
    out.push_back(check);
  }
  return out;
}

EvaluationReport Evaluate(const CalibratedModel& model,
                          std::span<const ScoredPair> test, AveSizeMode mode,
                          const CalibratedModel* part_mcp) {
  if (test.empty()) throw Error("evaluation needs test pairs");
  EvaluationReport report;
  report.method = model.method;
  report.epsilon = model.epsilon;
  report.coverage = CoveragePerPredicate(model, test);
  report.covgap = CovGap(report.coverage, model.epsilon);
  report.avesize = AveSize(model, test, mode);
  double covered = 0;
  for (const ScoredPair& pair : test) covered += Covers(model, pair);
  report.marginal_coverage = covered / static_cast<double>(test.size());
  if (model.method == Method::kCondKgcp) {
    report.gamma = model.gamma;
    report.phi = model.partition.phi;
    report.bounds = CheckCoverageBounds(model, test);
    if (part_mcp != nullptr) {
      const ShrinkageReport shrinkage =
          VerifyShrinkageCondition(model, *part_mcp, test);
      report.csr = shrinkage.csr;
      report.sigma_bar = shrinkage.sigma_bar;
    }
  }
  return report;
}

std::vector<TableRow> Aggregate(std::span<const EvaluationReport> reports) {
  using Key = std::tuple<int, int, double>;
  std::map<Key, std::vector<const EvaluationReport*>> groups;
  std::vector<Key> order;
  for (const EvaluationReport& r : reports) {
    const Key key{static_cast<int>(r.method), static_cast<int>(r.scorer),
                  r.epsilon};
    if (!groups.contains(key)) order.push_back(key);
    groups[key].push_back(&r);
  }
  std::vector<TableRow> rows;
  for (const Key& key : order) {
    const auto& group = groups[key];
    TableRow row;
    row.method = group.front()->method;
    row.scorer = group.front()->scorer;
    row.epsilon = group.front()->epsilon;
    row.runs = static_cast<int32_t>(group.size());
    std::vector<double> covgap, avesize, coverage, ef, csr, sigma;
    for (const EvaluationReport* r : group) {
      covgap.push_back(r->covgap);
      avesize.push_back(r->avesize);
      coverage.push_back(r->marginal_coverage);
      if (r->ef) ef.push_back(*r->ef);
      if (r->csr) csr.push_back(*r->csr);
      if (r->sigma_bar) sigma.push_back(*r->sigma_bar);
    }
    row.covgap_mean = Mean(covgap);
    row.covgap_std = SampleStd(covgap);
    row.avesize_mean = Mean(avesize);
    row.avesize_std = SampleStd(avesize);
    row.coverage_mean = Mean(coverage);
    if (!ef.empty()) row.ef_mean = Mean(ef);
    if (!csr.empty()) row.csr_mean = Mean(csr);
    if (!sigma.empty()) row.sigma_bar_mean = Mean(sigma);
    rows.push_back(row);
  }
  return rows;
}

std::string FormatTable(std::span<const TableRow> rows) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-9s %-8s %6s %4s %18s %22s %9s %8s %7s %7s\n",
                "method", "scorer", "eps", "runs", "CovGap", "AveSize", "EF",
                "Cov", "CSR", "sigma");
  out << line;
  for (const TableRow& r : rows) {
    const std::string covgap = Fmt(r.covgap_mean, 3) + " +- " + Fmt(r.covgap_std, 3);
    const std::string avesize =
        Fmt(r.avesize_mean, 2) + " +- " + Fmt(r.avesize_std, 2);
    std::snprintf(line, sizeof(line),
                  "%-9s %-8s %6.3f %4d %18s %22s %9s %8.4f %7s %7s\n",
                  MethodName(r.method), ScorerKindName(r.scorer), r.epsilon,
                  r.runs, covgap.c_str(), avesize.c_str(),
                  r.ef_mean ? Fmt(*r.ef_mean, 2).c_str() : "--",
                  r.coverage_mean,
                  r.csr_mean ? Fmt(*r.csr_mean, 3).c_str() : "--",
                  r.sigma_bar_mean ? Fmt(*r.sigma_bar_mean, 3).c_str() : "--");
    out << line;
  }
  return out.str();
}

void WriteReportsCsv(const std::filesystem::path& path,
                     std::span<const EvaluationReport> reports) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "method,scorer,epsilon,seed,gamma,phi,marginal_coverage,covgap,"
         "avesize,ef,csr,sigma_bar,bounds_within\n";
  for (const EvaluationReport& r : reports) {
    int within = 0;
    for (const BoundCheck& b : r.bounds) within += b.within;
    out << MethodName(r.method) << ',' << ScorerKindName(r.scorer) << ','
        << Full(r.epsilon) << ',' << r.seed << ',' << Full(r.gamma) << ','
        << r.phi << ',' << Full(r.marginal_coverage) << ',' << Full(r.covgap)
        << ',' << Full(r.avesize) << ',' << (r.ef ? Full(*r.ef) : "failure")
        << ',' << (r.csr ? Full(*r.csr) : "") << ','
        << (r.sigma_bar ? Full(*r.sigma_bar) : "") << ','
        << (r.method == Method::kCondKgcp
                ? std::to_string(within) + "/" + std::to_string(r.bounds.size())
                : "")
        << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

std::string SummaryJson(std::span<const EvaluationReport> reports,
                        std::span<const TableRow> rows) {
  json j;
  j["format_version"] = 1;
  json runs = json::array();
  for (const EvaluationReport& r : reports) {
    json run;
    run["method"] = MethodName(r.method);
    run["scorer"] = ScorerKindName(r.scorer);
    run["epsilon"] = r.epsilon;
    run["seed"] = r.seed;
    run["marginal_coverage"] = r.marginal_coverage;
    run["covgap"] = r.covgap;
    run["avesize"] = r.avesize;
    run["ef"] = r.ef ? json(*r.ef) : json("failure");
    json coverage = json::object();
    for (const auto& [p, c] : r.coverage) {
      coverage[std::to_string(p)] = {{"coverage", c.coverage},
                                     {"count", c.count}};
    }
    run["coverage_per_predicate"] = coverage;
    if (r.method == Method::kCondKgcp) {
      run["gamma"] = r.gamma;
      run["phi"] = r.phi;
      run["csr"] = OptionalJson(r.csr);
      run["sigma_bar"] = OptionalJson(r.sigma_bar);
      json bounds = json::array();
      for (const BoundCheck& b : r.bounds) {
        bounds.push_back({{"part", b.part},
                          {"test_pairs", b.test_pairs},
                          {"coverage", b.coverage},
                          {"lower", b.lower},
                          {"upper", b.upper},
                          {"slack", b.slack},
                          {"within", b.within}});
      }
      run["bounds"] = bounds;
    } else {
      run["csr"] = nullptr;
      run["sigma_bar"] = nullptr;
    }
    runs.push_back(run);
  }
  j["runs"] = runs;
  json table = json::array();
  for (const TableRow& r : rows) {
    table.push_back({{"method", MethodName(r.method)},
                     {"scorer", ScorerKindName(r.scorer)},
                     {"epsilon", r.epsilon},
                     {"runs", r.runs},
                     {"covgap_mean", r.covgap_mean},
                     {"covgap_std", r.covgap_std},
                     {"avesize_mean", r.avesize_mean},
                     {"avesize_std", r.avesize_std},
                     {"coverage_mean", r.coverage_mean},
                     {"ef_mean", OptionalJson(r.ef_mean)},
                     {"csr_mean", OptionalJson(r.csr_mean)},
                     {"sigma_bar_mean", OptionalJson(r.sigma_bar_mean)}});
  }
  j["table"] = table;
  return j.dump(2);
}

void WritePlotData(const std::filesystem::path& path,
                   std::span<const EvaluationReport> reports) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "method,scorer,target_coverage,gamma,phi,seed,metric,value\n";
  for (const EvaluationReport& r : reports) {
    auto row = [&](const char* metric, double value) {
      out << MethodName(r.method) << ',' << ScorerKindName(r.scorer) << ','
          << Full(1 - r.epsilon) << ',' << Full(r.gamma) << ',' << r.phi << ','
          << r.seed << ',' << metric << ',' << Full(value) << '\n';
    };
    row("covgap", r.covgap);
    row("avesize", r.avesize);
    row("coverage", r.marginal_coverage);
    if (r.ef) row("ef", *r.ef);
  }
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace kgcp
