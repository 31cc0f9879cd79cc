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

#include "kgcp/query_evaluation.h"

#include <map>

namespace kgcp {

std::vector<ScoredPair> ScorePairs(std::span<const QueryAnswer> pairs,
                                   const ScoreProvider& provider,
                                   const KnownAnswers* filter,
                                   const ScorerConfig& scorer,
                                   DrawStream stream) {
  std::vector<ScoredPair> out;
  out.reserve(pairs.size());
  // Raw scores are shared by every answer of a query.
  std::map<Query, std::vector<double>> cache;
  for (size_t i = 0; i < pairs.size(); ++i) {
    const QueryAnswer& qa = pairs[i];
    auto it = cache.find(qa.query);
    if (it == cache.end()) {
      it = cache.emplace(qa.query, provider.Scores(qa.query)).first;
    }
    const std::vector<double>& raw = it->second;
    ScoredPair pair;
    pair.query = qa.query;
    pair.answer = qa.answer;
    const double u =
        UniformDraw(scorer.rng_seed, static_cast<uint64_t>(stream), i);
    pair.nonconformity = ComputeNonconformity(scorer, raw, u).values;
    const std::vector<EntityId> mask =
        filter != nullptr ? filter->FilterMask(qa.query, qa.answer)
                          : std::vector<EntityId>{};
    pair.ranks = CandidateRanks(raw, mask);
    out.push_back(std::move(pair));
  }
  return out;
}

}  // namespace kgcp
