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

#include "kgcp/synthetic.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <string>

#include "json.hpp"
#include "kgcp/error.h"
#include "kgcp/random.h"

namespace kgcp {
namespace {

std::string PaddedName(char prefix, int32_t index, int32_t count) {
  const int width = static_cast<int>(std::to_string(std::max(count - 1, 0)).size());
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%c%0*d", prefix, width, index);
  return buffer;
}

}  // namespace

void SyntheticKgSpec::Validate() const {
  if (num_entities < 2) throw ConfigError("need at least 2 entities");
  if (num_predicates < 1) throw ConfigError("need at least 1 predicate");
  if (static_cast<int32_t>(counts.size()) != num_predicates) {
    throw ConfigError("need one triple count per predicate");
  }
  for (int64_t c : counts) {
    if (c < 1) throw ConfigError("triple counts must be >= 1");
  }
  if (!predicate_noise.empty() &&
      static_cast<int32_t>(predicate_noise.size()) != num_predicates) {
    throw ConfigError("need one noise rate per predicate");
  }
  for (PredicateId r = 0; r < num_predicates; ++r) {
    const double n = NoiseOf(r);
    if (!(n >= 0 && n < 1)) throw ConfigError("noise rate must lie in [0, 1)");
  }
  if (clusters < 1 || clusters > num_entities) {
    throw ConfigError("clusters must lie in [1, |E|]");
  }
  if (families < 0) throw ConfigError("families must be >= 0");
  SplitConfig split{train_fraction, calib_fraction, test_fraction, seed, true};
  split.Validate();
}

std::vector<int64_t> PowerLawCounts(int32_t num_predicates, int64_t max_count,
                                    double exponent, int64_t min_count) {
  std::vector<int64_t> counts;
  for (int32_t r = 0; r < num_predicates; ++r) {
    const double c = static_cast<double>(max_count) * std::pow(r + 1.0, -exponent);
    counts.push_back(std::max<int64_t>(min_count, std::llround(c)));
  }
  return counts;
}

KnowledgeGraph GenerateSyntheticKg(const SyntheticKgSpec& spec) {
  spec.Validate();
  std::vector<std::string> entities, predicates;
  for (int32_t e = 0; e < spec.num_entities; ++e) {
    entities.push_back(PaddedName('e', e, spec.num_entities));
  }
  for (int32_t r = 0; r < spec.num_predicates; ++r) {
    predicates.push_back(PaddedName('r', r, spec.num_predicates));
  }
  KnowledgeGraph pooled;
  pooled.vocab = Vocab::FromNames(entities, predicates);

  const int32_t families =
      spec.families == 0 ? spec.num_predicates : spec.families;
  // Shifts are a seeded permutation of 1..C/2, cycled over families, so up
  // to C/2 families get distinct rules. A single cluster forces shift 0.
  std::vector<int32_t> distinct(std::max(1, spec.clusters / 2));
  std::iota(distinct.begin(), distinct.end(), spec.clusters > 1 ? 1 : 0);
  Rng shift_rng(MixSeed(spec.seed, 10, 0));
  Shuffle(std::span<int32_t>(distinct), shift_rng);
  std::vector<int32_t> shifts(families);
  for (int32_t f = 0; f < families; ++f) {
    shifts[f] = distinct[f % distinct.size()];
  }
  std::vector<std::vector<EntityId>> members(spec.clusters);
  for (EntityId e = 0; e < spec.num_entities; ++e) {
    members[e % spec.clusters].push_back(e);
  }

  for (PredicateId r = 0; r < spec.num_predicates; ++r) {
    Rng rng(MixSeed(spec.seed, 11, r));
    const int32_t shift = shifts[r % families];
    // Heads come from clusters whose shifted cluster exists.
    const int32_t head_clusters = spec.clusters - shift;
    std::set<Triple> seen;
    const int64_t target = spec.counts[r];
    int64_t attempts = 0;
    while (static_cast<int64_t>(seen.size()) < target) {
      if (++attempts > 1000 * target + 100000) {
        throw ConfigError("cannot draw " + std::to_string(target) +
                          " distinct triples for predicate " +
                          std::to_string(r));
      }
      const int32_t head_cluster =
          static_cast<int32_t>(UniformIndex(rng, head_clusters));
      const auto& heads = members[head_cluster];
      const EntityId head = heads[UniformIndex(rng, heads.size())];
      EntityId tail;
      if (UniformDouble(rng) < spec.NoiseOf(r)) {
        tail = static_cast<EntityId>(UniformIndex(rng, spec.num_entities));
      } else {
        const auto& tails = members[head_cluster + shift];
        tail = tails[UniformIndex(rng, tails.size())];
      }
      const Triple t{head, r, tail};
      if (seen.insert(t).second) pooled.train.push_back(t);
    }
  }
  SplitConfig split{spec.train_fraction, spec.calib_fraction,
                    spec.test_fraction, MixSeed(spec.seed, 12, 0), true};
  return SplitKg(pooled, split);
}

void WriteDataset(const std::filesystem::path& dir, const KnowledgeGraph& kg) {
  std::filesystem::create_directories(dir);
  WriteTsv(dir / "train.tsv", kg.vocab, kg.train);
  WriteTsv(dir / "valid.tsv", kg.vocab, kg.calib);
  WriteTsv(dir / "test.tsv", kg.vocab, kg.test);
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error("cannot write " + (dir / "manifest.json").string());
  const nlohmann::json manifest = {
      {"train", "train.tsv"}, {"valid", "valid.tsv"}, {"test", "test.tsv"}};
  out << manifest.dump(2) << '\n';
}

}  // namespace kgcp
