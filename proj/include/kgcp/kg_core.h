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

// Knowledge-graph data model: vocabularies, triples, queries, splits and
// the rank of a candidate answer under a score vector.

#ifndef KGCP_KG_CORE_H_
#define KGCP_KG_CORE_H_

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace kgcp {

using EntityId = int32_t;
using PredicateId = int32_t;

// Dense, lexicographically ordered index maps for entities and predicates.
class Vocab {
 public:
  Vocab() = default;

  // Sorts both lists. Throws if an identifier occurs twice.
  static Vocab FromNames(std::vector<std::string> entities,
                         std::vector<std::string> predicates);

  int32_t num_entities() const { return static_cast<int32_t>(entities_.size()); }
  int32_t num_predicates() const {
    return static_cast<int32_t>(predicates_.size());
  }
  const std::string& entity(EntityId id) const { return entities_.at(id); }
  const std::string& predicate(PredicateId id) const {
    return predicates_.at(id);
  }
  const std::vector<std::string>& entities() const { return entities_; }
  const std::vector<std::string>& predicates() const { return predicates_; }

  std::optional<EntityId> FindEntity(std::string_view name) const;
  std::optional<PredicateId> FindPredicate(std::string_view name) const;

 private:
  std::vector<std::string> entities_;
  std::vector<std::string> predicates_;
  std::unordered_map<std::string, int32_t> entity_index_;
  std::unordered_map<std::string, int32_t> predicate_index_;
};

struct Triple {
  EntityId head = 0;
  PredicateId predicate = 0;
  EntityId tail = 0;
  auto operator<=>(const Triple&) const = default;
};

// kTail is <h, r, ?>, kHead is <?, r, t>.
enum class Direction : uint8_t { kTail = 0, kHead = 1 };

const char* DirectionName(Direction direction);

struct Query {
  Direction direction = Direction::kTail;
  EntityId anchor = 0;
  PredicateId predicate = 0;
  auto operator<=>(const Query&) const = default;
};

// The triple obtained by placing `candidate` in the missing slot.
inline Triple Complete(const Query& query, EntityId candidate) {
  return query.direction == Direction::kTail
             ? Triple{query.anchor, query.predicate, candidate}
             : Triple{candidate, query.predicate, query.anchor};
}

enum class SplitName { kTrain, kCalib, kTest, kNeg };

const char* SplitNameString(SplitName name);

struct QueryAnswer {
  Query query;
  EntityId answer = 0;
  auto operator<=>(const QueryAnswer&) const = default;
};

struct QueryAnswerSet {
  SplitName name = SplitName::kTest;
  std::vector<QueryAnswer> pairs;
};

struct SplitConfig {
  double train_fraction = 0.8;
  double calib_fraction = 0.1;
  double test_fraction = 0.1;
  uint64_t seed = 0;
  bool both_directions = true;

  // Throws ConfigError unless all fractions are positive and sum to 1.
  void Validate() const;
};

struct KnowledgeGraph {
  Vocab vocab;
  std::vector<Triple> train;
  std::vector<Triple> calib;
  std::vector<Triple> test;

  size_t num_triples() const {
    return train.size() + calib.size() + test.size();
  }
};

enum class KgFormat { kTsv, kManifest };

// Loads a single TSV file (all triples land in `train`, see SplitKg) or a
// JSON manifest {"train", "valid", "test", "entities"?, "relations"?}.
KnowledgeGraph LoadKg(const std::filesystem::path& path, KgFormat format);

// Picks the format from the extension: ".json" is a manifest.
KnowledgeGraph LoadKg(const std::filesystem::path& path);

// Pools every triple of `kg` and re-splits it, stratified per predicate.
// Reproducible bit-for-bit for a given seed.
KnowledgeGraph SplitKg(const KnowledgeGraph& kg, const SplitConfig& config);

void WriteTsv(const std::filesystem::path& path, const Vocab& vocab,
              std::span<const Triple> triples);

// Emits (<h,r,?>, t) per triple and, when `both_directions`, (<?,r,t>, h).
QueryAnswerSet MakeQueries(std::span<const Triple> triples,
                           bool both_directions, SplitName name);

// Every known true answer per query across train, calib and test. Backs
// the filtered ranking setting.
class KnownAnswers {
 public:
  KnownAnswers() = default;
  explicit KnownAnswers(const KnowledgeGraph& kg);

  // Sorted; empty for an unseen query.
  std::span<const EntityId> Answers(const Query& query) const;

  // Known answers of `query` other than `answer`, sorted.
  std::vector<EntityId> FilterMask(const Query& query, EntityId answer) const;

 private:
  std::map<Query, std::vector<EntityId>> answers_;
};

// Number of unmasked candidates scoring >= scores[answer]. `mask` must be
// sorted and must not contain `answer`.
int32_t RankOf(std::span<const double> scores, EntityId answer,
               std::span<const EntityId> mask = {});

// RankOf for every candidate at once; masked candidates get rank 0.
std::vector<int32_t> CandidateRanks(std::span<const double> scores,
                                    std::span<const EntityId> mask = {});

}  // namespace kgcp

#endif  // KGCP_KG_CORE_H_
