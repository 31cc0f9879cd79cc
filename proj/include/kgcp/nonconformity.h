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

// Nonconformity measures over a query's plausibility vector: SOFTMAX,
// APS and RAPS. Lower values mean more plausible candidates.

#ifndef KGCP_NONCONFORMITY_H_
#define KGCP_NONCONFORMITY_H_

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace kgcp {

enum class ScorerKind { kSoftmax, kAps, kRaps };

const char* ScorerKindName(ScorerKind kind);
ScorerKind ParseScorerKind(std::string_view name);

struct ScorerConfig {
  ScorerKind kind = ScorerKind::kSoftmax;
  double raps_lambda = 0.01;
  int32_t raps_k_reg = 5;
  uint64_t rng_seed = 0;

  void Validate() const;
};

struct NonconformityVector {
  ScorerKind kind = ScorerKind::kSoftmax;
  std::vector<double> values;
};

// Max-subtracted softmax over all candidates.
std::vector<double> Softmax(std::span<const double> raw);

// 1 - softmax(raw).
NonconformityVector SoftmaxScores(std::span<const double> raw);

// Cumulative softmax mass strictly ahead of each candidate plus `u` times
// its own mass. Candidates are ordered by decreasing probability; ties go to
// the lower entity index.
NonconformityVector ApsScores(std::span<const double> raw, double u);

// APS plus lambda * max(position - k_reg, 0).
NonconformityVector RapsScores(std::span<const double> raw, double u,
                               double lambda, int32_t k_reg);

NonconformityVector ComputeNonconformity(const ScorerConfig& config,
                                         std::span<const double> raw, double u);

// The uniform draw U used for the `index`-th query evaluation of `stream`.
// Depends only on (seed, stream, index) so evaluations can be partitioned
// freely.
double UniformDraw(uint64_t seed, uint64_t stream, uint64_t index);

}  // namespace kgcp

#endif  // KGCP_NONCONFORMITY_H_
