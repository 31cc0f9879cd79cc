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

#ifndef KGCP_TESTS_PROPERTY_CHECKS_H_
#define KGCP_TESTS_PROPERTY_CHECKS_H_

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "kgcp/cp_engine.h"
#include "kgcp/random.h"

namespace kgcp::testing {

// A multiset of small integers with epsilon = num / den, so the quantile
// level can be computed exactly in integer arithmetic.
struct QuantileCase {
  std::vector<double> scores;
  int64_t num = 1;
  int64_t den = 10;
  double epsilon() const { return static_cast<double>(num) / den; }
};

inline QuantileCase RandomQuantileCase(Rng& rng) {
  QuantileCase c;
  const size_t n = 1 + UniformIndex(rng, 60);
  const uint64_t range = 1 + UniformIndex(rng, 30);  // small range: many ties
  for (size_t i = 0; i < n; ++i) {
    c.scores.push_back(static_cast<double>(UniformIndex(rng, range)));
  }
  c.den = 2 + static_cast<int64_t>(UniformIndex(rng, 199));
  c.num = 1 + static_cast<int64_t>(UniformIndex(rng, c.den - 1));
  return c;
}

// Brute force: the smallest candidate a with #{b <= a} >= k, where
// k = ceil((n + 1)(den - num) / den); +inf when k > n.
inline double QuantileOracle(const QuantileCase& c) {
  const int64_t n = static_cast<int64_t>(c.scores.size());
  const int64_t top = (n + 1) * (c.den - c.num);
  const int64_t k = std::max<int64_t>(1, (top + c.den - 1) / c.den);
  if (k > n) return kInfinity;
  double best = kInfinity;
  for (double a : c.scores) {
    int64_t at_most = 0;
    for (double b : c.scores) at_most += b <= a;
    if (at_most >= k) best = std::min(best, a);
  }
  return best;
}

struct PartitionCase {
  std::vector<int64_t> counts;
  std::vector<std::vector<double>> vectors;
  int32_t phi = 1;
};

inline PartitionCase RandomPartitionCase(Rng& rng) {
  PartitionCase c;
  const size_t strata = 1 + UniformIndex(rng, 40);
  const size_t dim = 1 + UniformIndex(rng, 6);
  for (size_t r = 0; r < strata; ++r) {
    // Heavy-tailed counts, some zero.
    const double u = UniformDouble(rng);
    c.counts.push_back(static_cast<int64_t>(u * u * u * 500));
    std::vector<double> v(dim);
    for (double& x : v) x = static_cast<double>(UniformIndex(rng, 5)) - 2.0;
    c.vectors.push_back(std::move(v));
  }
  int64_t& any = c.counts[UniformIndex(rng, strata)];
  any = std::max<int64_t>(any, 1);
  const int64_t max_count = *std::max_element(c.counts.begin(), c.counts.end());
  c.phi = 1 + static_cast<int32_t>(UniformIndex(rng, max_count));
  return c;
}

// Empty string when `p` is a disjoint cover with every part >= phi, rich
// strata seeding their own parts and every poor stratum in the part of a
// Manhattan-nearest seed. Otherwise a description of the first violation.
inline std::string CheckPartition(const PartitionCase& c,
                                  const PredicatePartition& p) {
  const size_t n = c.counts.size();
  if (p.part_of.size() != n) return "part_of has the wrong size";
  std::vector<int> seen(n, 0);
  for (size_t g = 0; g < p.parts.size(); ++g) {
    int64_t total = 0;
    for (int32_t r : p.parts[g]) {
      if (r < 0 || static_cast<size_t>(r) >= n) return "member out of range";
      if (seen[r]++) return "stratum in two parts";
      if (p.part_of[r] != static_cast<int32_t>(g)) return "part_of disagrees";
      total += c.counts[r];
    }
    if (total < c.phi) return "part below phi";
  }
  for (size_t r = 0; r < n; ++r) {
    if (!seen[r]) return "stratum not covered";
  }
  auto distance = [&](size_t a, size_t b) {
    double d = 0;
    for (size_t i = 0; i < c.vectors[a].size(); ++i) {
      d += std::abs(c.vectors[a][i] - c.vectors[b][i]);
    }
    return d;
  };
  std::vector<size_t> seeds;
  for (size_t r = 0; r < n; ++r) {
    if (c.counts[r] >= c.phi) seeds.push_back(r);
  }
  if (seeds.size() != p.parts.size()) return "part count differs from seeds";
  for (size_t g = 0; g < seeds.size(); ++g) {
    if (p.part_of[seeds[g]] != static_cast<int32_t>(g)) return "seed moved";
  }
  for (size_t r = 0; r < n; ++r) {
    if (c.counts[r] >= c.phi) continue;
    double best = kInfinity;
    for (size_t s : seeds) best = std::min(best, distance(r, s));
    if (distance(r, seeds[p.part_of[r]]) != best) return "poor stratum not nearest";
  }
  return "";
}

}  // namespace kgcp::testing

#endif  // KGCP_TESTS_PROPERTY_CHECKS_H_
