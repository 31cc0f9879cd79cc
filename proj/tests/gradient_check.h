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

#ifndef KGCP_TESTS_GRADIENT_CHECK_H_
#define KGCP_TESTS_GRADIENT_CHECK_H_

#include <algorithm>
#include <cmath>
#include <vector>

#include "kgcp/kge_models.h"
#include "kgcp/random.h"

namespace kgcp::testing {

// A random micro-model and one training example with 1-3 negatives.
struct GradientInstance {
  EmbeddingModel model;
  TrainConfig config;
  TrainingExample example;
};

inline GradientInstance RandomGradientInstance(ModelKind kind, Rng& rng) {
  GradientInstance g;
  g.config.dim = 1 + static_cast<int32_t>(UniformIndex(rng, 4));
  g.config.norm = 1 + static_cast<int32_t>(UniformIndex(rng, 2));
  g.config.margin = UniformDouble(rng, 0.5, 2.0);
  g.config.l2 = UniformIndex(rng, 2) == 0 ? 0.0 : UniformDouble(rng, 0, 0.1);
  const int32_t entities = 6, predicates = 2;
  g.model = InitModel(kind, entities, predicates, g.config);
  for (double& v : g.model.entity_embeddings) v = UniformDouble(rng, -1, 1);
  for (double& v : g.model.predicate_embeddings) v = UniformDouble(rng, -1, 1);
  auto entity = [&] { return static_cast<EntityId>(UniformIndex(rng, entities)); };
  const PredicateId r = static_cast<PredicateId>(UniformIndex(rng, predicates));
  g.example.positive = {entity(), r, entity()};
  const int negatives = 1 + static_cast<int>(UniformIndex(rng, 3));
  for (int i = 0; i < negatives; ++i) {
    Triple neg = g.example.positive;
    (UniformIndex(rng, 2) == 0 ? neg.head : neg.tail) = entity();
    g.example.negatives.push_back(neg);
  }
  return g;
}

// ||analytic - numeric|| / max(||analytic||, ||numeric||, 1e-8) over every
// parameter, numeric gradients by central differences. The floor keeps
// rounding noise from counting against an exactly zero gradient.
inline double GradientRelativeError(const GradientInstance& g,
                                    double step = 1e-4) {
  Gradient analytic;
  ExampleLossAndGradient(g.model, g.config, g.example, analytic);
  const int32_t w = g.model.row_width();
  double diff = 0, norm_a = 0, norm_n = 0;
  auto check = [&](std::vector<double> EmbeddingModel::*table, int32_t rows,
                   auto& grads) {
    for (int32_t row = 0; row < rows; ++row) {
      for (int32_t i = 0; i < w; ++i) {
        EmbeddingModel m = g.model;
        const size_t k = static_cast<size_t>(row) * w + i;
        (m.*table)[k] += step;
        const double up = ExampleLoss(m, g.config, g.example);
        (m.*table)[k] -= 2 * step;
        const double down = ExampleLoss(m, g.config, g.example);
        const double numeric = (up - down) / (2 * step);
        const auto it = grads.find(row);
        const double a = it == grads.end() ? 0.0 : it->second[i];
        diff += (a - numeric) * (a - numeric);
        norm_a += a * a;
        norm_n += numeric * numeric;
      }
    }
  };
  check(&EmbeddingModel::entity_embeddings, g.model.num_entities,
        analytic.entity);
  check(&EmbeddingModel::predicate_embeddings, g.model.num_predicates,
        analytic.predicate);
  const double scale = std::max(std::sqrt(std::max(norm_a, norm_n)), 1e-8);
  return std::sqrt(diff) / scale;
}

}  // namespace kgcp::testing

#endif  // KGCP_TESTS_GRADIENT_CHECK_H_
