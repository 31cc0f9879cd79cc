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

// Desk-scale knowledge-graph embedding models (TransE, DistMult, ComplEx):
// scoring, training and persistence.

#ifndef KGCP_KGE_MODELS_H_
#define KGCP_KGE_MODELS_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgcp/kg_core.h"

namespace kgcp {

enum class ModelKind : uint8_t { kTransE = 0, kDistMult = 1, kComplEx = 2 };

const char* ModelKindName(ModelKind kind);
ModelKind ParseModelKind(std::string_view name);

struct TrainConfig {
  int32_t dim = 16;
  int32_t norm = 1;  // TransE only: 1 or 2.
  int32_t epochs = 100;
  double learning_rate = 0.1;
  int32_t negatives = 4;
  double margin = 1.0;  // TransE only.
  double l2 = 0.0;
  int32_t batch_size = 64;
  uint64_t seed = 0;

  void Validate() const;
};

// Embedding tables are row-major. ComplEx rows hold 2*dim values with real
// and imaginary parts interleaved: [re_0, im_0, re_1, im_1, ...].
struct EmbeddingModel {
  ModelKind kind = ModelKind::kTransE;
  int32_t dim = 0;
  int32_t norm = 1;
  int32_t num_entities = 0;
  int32_t num_predicates = 0;
  std::vector<double> entity_embeddings;
  std::vector<double> predicate_embeddings;

  int32_t row_width() const {
    return kind == ModelKind::kComplEx ? 2 * dim : dim;
  }
  std::span<const double> entity(EntityId e) const {
    return {entity_embeddings.data() + static_cast<size_t>(e) * row_width(),
            static_cast<size_t>(row_width())};
  }
  std::span<double> entity(EntityId e) {
    return {entity_embeddings.data() + static_cast<size_t>(e) * row_width(),
            static_cast<size_t>(row_width())};
  }
  std::span<const double> predicate(PredicateId r) const {
    return {predicate_embeddings.data() + static_cast<size_t>(r) * row_width(),
            static_cast<size_t>(row_width())};
  }
  std::span<double> predicate(PredicateId r) {
    return {predicate_embeddings.data() + static_cast<size_t>(r) * row_width(),
            static_cast<size_t>(row_width())};
  }

  bool operator==(const EmbeddingModel&) const = default;
};

// Allocates and initializes a model: uniform in [-0.1, 0.1], TransE entity
// rows then normalized to unit L2 norm.
EmbeddingModel InitModel(ModelKind kind, int32_t num_entities,
                         int32_t num_predicates, const TrainConfig& config);

// Plausibility of a single triple.
double ScoreTriple(const EmbeddingModel& model, const Triple& triple);

// Plausibility of every candidate entity filling the missing slot. Linear in
// |E|. Throws on non-finite output.
std::vector<double> Score(const EmbeddingModel& model, const Query& query);

// Predicate embedding row; ComplEx returns real parts followed by imaginary
// parts (length 2*dim).
std::vector<double> PredicateVector(const EmbeddingModel& model,
                                    PredicateId predicate);

// One positive triple and its corruptions.
struct TrainingExample {
  Triple positive;
  std::vector<Triple> negatives;
};

// Sparse gradient keyed by embedding row.
struct Gradient {
  std::unordered_map<EntityId, std::vector<double>> entity;
  std::unordered_map<PredicateId, std::vector<double>> predicate;
};

// TransE: sum over negatives of max(0, margin + d(pos) - d(neg)) with
// d = ||h + r - t||_p. DistMult/ComplEx: softplus(-f(pos)) +
// sum softplus(f(neg)). All kinds add l2 * squared norm of every row used.
double ExampleLoss(const EmbeddingModel& model, const TrainConfig& config,
                   const TrainingExample& example);

// Same loss; accumulates its gradient into `gradient`.
double ExampleLossAndGradient(const EmbeddingModel& model,
                              const TrainConfig& config,
                              const TrainingExample& example,
                              Gradient& gradient);

// Adagrad over seeded minibatches with uniform head/tail corruption that
// resamples on collision with a training positive. Deterministic for a
// fixed seed. Throws naming the epoch if the loss diverges.
EmbeddingModel Train(const KnowledgeGraph& kg, ModelKind kind,
                     const TrainConfig& config);

void SaveModel(const std::filesystem::path& path, const EmbeddingModel& model);
EmbeddingModel LoadModel(const std::filesystem::path& path);

}  // namespace kgcp

#endif  // KGCP_KGE_MODELS_H_
