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

// Materialized per-query score vectors and predicate-vector sidecars, plus
// the ScoreProvider interface that abstracts trained and imported scores.

#ifndef KGCP_SCORE_MATRIX_H_
#define KGCP_SCORE_MATRIX_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "kgcp/kg_core.h"
#include "kgcp/kge_models.h"

namespace kgcp {

class ScoreProvider {
 public:
  virtual ~ScoreProvider() = default;
  virtual int32_t num_entities() const = 0;
  // Plausibility of every candidate for the missing slot of `query`.
  virtual std::vector<double> Scores(const Query& query) const = 0;
};

class ModelScoreProvider : public ScoreProvider {
 public:
  explicit ModelScoreProvider(const EmbeddingModel& model) : model_(model) {}
  int32_t num_entities() const override { return model_.num_entities; }
  std::vector<double> Scores(const Query& query) const override {
    return Score(model_, query);
  }

 private:
  const EmbeddingModel& model_;
};

enum class ScoreProvenance { kTrained, kImported };

// Binary layout, little-endian:
//   header: magic "KGSM" u32, |E| u32, query_count u32
//   record: direction u8, anchor u32, predicate u32, |E| x float64
// The debug CSV has one row per query: direction,anchor,predicate,s_0,...
class ScoreMatrix : public ScoreProvider {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(int32_t num_entities, ScoreProvenance provenance)
      : num_entities_(num_entities), provenance_(provenance) {}

  // Scores every query with `provider`.
  static ScoreMatrix Materialize(const ScoreProvider& provider,
                                 std::span<const Query> queries,
                                 ScoreProvenance provenance);

  // Throws on a vector whose length differs from num_entities().
  void Add(const Query& query, std::vector<double> scores);

  int32_t num_entities() const override { return num_entities_; }
  std::vector<double> Scores(const Query& query) const override;
  std::span<const double> Find(const Query& query) const;
  bool Contains(const Query& query) const { return rows_.contains(query); }
  size_t size() const { return rows_.size(); }
  ScoreProvenance provenance() const { return provenance_; }
  const std::map<Query, std::vector<double>>& rows() const { return rows_; }

  // Throws listing (up to 10 of) the queries that are absent.
  void RequireQueries(std::span<const Query> queries) const;

  // Throws when a key falls outside the vocabulary or |E| disagrees.
  void CheckAgainst(const Vocab& vocab) const;

  void WriteBinary(const std::filesystem::path& path) const;
  void WriteCsv(const std::filesystem::path& path) const;

 private:
  int32_t num_entities_ = 0;
  ScoreProvenance provenance_ = ScoreProvenance::kImported;
  std::map<Query, std::vector<double>> rows_;
};

// Reads either format; ".csv" selects the debug CSV.
ScoreMatrix ImportScores(const std::filesystem::path& path);

// Predicate embedding sidecar, same framing as the score matrix:
//   header: magic "KGPV" u32, dim u32, count u32
//   record: predicate u32, dim x float64
struct PredicateVectors {
  int32_t dim = 0;
  std::vector<std::vector<double>> rows;  // indexed by predicate

  static PredicateVectors FromModel(const EmbeddingModel& model);
  void Write(const std::filesystem::path& path) const;
  static PredicateVectors Read(const std::filesystem::path& path,
                               int32_t num_predicates);
};

}  // namespace kgcp

#endif  // KGCP_SCORE_MATRIX_H_
