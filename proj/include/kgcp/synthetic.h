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

// Synthetic knowledge graphs with latent cluster rules, per-predicate noise
// and imbalanced predicate frequencies.

#ifndef KGCP_SYNTHETIC_H_
#define KGCP_SYNTHETIC_H_

#include <cstdint>
#include <filesystem>
#include <vector>

#include "kgcp/kg_core.h"

namespace kgcp {

// Entities are grouped into `clusters` (entity e belongs to e % clusters).
// Each predicate carries a cluster shift s in 1..C/2: heads come from
// clusters 0..C-1-s and the tail is a uniform member of cluster c(h) + s,
// or, with the predicate's noise rate, a uniform entity. Predicates in the
// same family (r % families) share the shift.
struct SyntheticKgSpec {
  int32_t num_entities = 100;
  int32_t num_predicates = 5;
  std::vector<int64_t> counts;          // triples per predicate, all splits
  double noise = 0.0;
  std::vector<double> predicate_noise;  // optional per-predicate override
  int32_t clusters = 10;
  int32_t families = 0;                 // 0: one family per predicate
  double train_fraction = 0.8;
  double calib_fraction = 0.1;
  double test_fraction = 0.1;
  uint64_t seed = 0;

  void Validate() const;
  double NoiseOf(PredicateId r) const {
    return predicate_noise.empty() ? noise : predicate_noise[r];
  }
};

// max(min_count, round(max_count * (r + 1)^-exponent)) for r = 0..n-1.
std::vector<int64_t> PowerLawCounts(int32_t num_predicates, int64_t max_count,
                                    double exponent, int64_t min_count);

// Deterministic under spec.seed; per-predicate counts are exact and each
// predicate is split with the configured fractions.
KnowledgeGraph GenerateSyntheticKg(const SyntheticKgSpec& spec);

// Writes train.tsv, valid.tsv, test.tsv and manifest.json into `dir`.
void WriteDataset(const std::filesystem::path& dir, const KnowledgeGraph& kg);

}  // namespace kgcp

#endif  // KGCP_SYNTHETIC_H_
