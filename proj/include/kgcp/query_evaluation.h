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

// Per-pair materialization of what calibration and set construction need:
// the nonconformity vector over all candidates and the filtered ranks.

#ifndef KGCP_QUERY_EVALUATION_H_
#define KGCP_QUERY_EVALUATION_H_

#include <cstdint>
#include <span>
#include <vector>

#include "kgcp/kg_core.h"
#include "kgcp/nonconformity.h"
#include "kgcp/score_matrix.h"

namespace kgcp {

struct ScoredPair {
  Query query;
  EntityId answer = 0;
  std::vector<double> nonconformity;  // indexed by entity
  std::vector<int32_t> ranks;         // filtered rank, 0 for masked entities

  double answer_score() const { return nonconformity[answer]; }
  int32_t answer_rank() const { return ranks[answer]; }
};

// Stream ids keep the U draws of different query-answer sets independent.
enum class DrawStream : uint64_t { kCalib = 1, kTest = 2, kTuning = 3 };

// Scores every pair of `set`. With `filter` set, each pair's mask is the
// other known answers of its query (filtered setting); nullptr gives raw
// ranks. The U draw of pair i is UniformDraw(seed, stream, i).
std::vector<ScoredPair> ScorePairs(std::span<const QueryAnswer> pairs,
                                   const ScoreProvider& provider,
                                   const KnownAnswers* filter,
                                   const ScorerConfig& scorer,
                                   DrawStream stream);

}  // namespace kgcp

#endif  // KGCP_QUERY_EVALUATION_H_
