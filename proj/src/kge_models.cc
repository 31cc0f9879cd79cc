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

#include "kgcp/kge_models.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_set>

#include "kgcp/binary_io.h"
#include "kgcp/error.h"
#include "kgcp/random.h"

namespace kgcp {
namespace {

constexpr uint32_t kModelMagic = binary_io::Magic("KGEM");
constexpr uint32_t kModelVersion = 1;

double Softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double TransEDistance(std::span<const double> h, std::span<const double> r,
                      std::span<const double> t, int32_t norm) {
  double sum = 0;
  for (size_t i = 0; i < h.size(); ++i) {
    const double x = h[i] + r[i] - t[i];
    sum += norm == 1 ? std::abs(x) : x * x;
  }
  return norm == 1 ? sum : std::sqrt(sum);
}

double DistMultScore(std::span<const double> h, std::span<const double> r,
                     std::span<const double> t) {
  double sum = 0;
  for (size_t i = 0; i < h.size(); ++i) sum += h[i] * r[i] * t[i];
  return sum;
}

// Re(<h, r, conj(t)>) over interleaved rows.
double ComplExScore(std::span<const double> h, std::span<const double> r,
                    std::span<const double> t) {
  double sum = 0;
  for (size_t i = 0; i < h.size(); i += 2) {
    const double a = h[i], b = h[i + 1];
    const double c = r[i], d = r[i + 1];
    const double e = t[i], f = t[i + 1];
    sum += (a * c - b * d) * e + (a * d + b * c) * f;
  }
  return sum;
}

std::vector<double>& Slot(std::unordered_map<int32_t, std::vector<double>>& map,
                          int32_t row, int32_t width) {
  auto& g = map[row];
  if (g.empty()) g.assign(width, 0.0);
  return g;
}

// Adds `scale` * d(f or d)/d(params) of a single triple.
void AccumulateTripleGradient(const EmbeddingModel& model, const Triple& tr,
                              double scale, Gradient& gradient) {
  const int32_t w = model.row_width();
  const auto h = model.entity(tr.head);
  const auto r = model.predicate(tr.predicate);
  const auto t = model.entity(tr.tail);
  auto& gh = Slot(gradient.entity, tr.head, w);
  auto& gr = Slot(gradient.predicate, tr.predicate, w);
  auto& gt = Slot(gradient.entity, tr.tail, w);
  switch (model.kind) {
    case ModelKind::kTransE: {
      const double dist = TransEDistance(h, r, t, model.norm);
      for (int32_t i = 0; i < w; ++i) {
        const double x = h[i] + r[i] - t[i];
        double dx;
        if (model.norm == 1) {
          dx = x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
        } else {
          dx = dist > 0 ? x / dist : 0.0;
        }
        gh[i] += scale * dx;
        gr[i] += scale * dx;
        gt[i] -= scale * dx;
      }
      break;
    }
    case ModelKind::kDistMult:
      for (int32_t i = 0; i < w; ++i) {
        gh[i] += scale * r[i] * t[i];
        gr[i] += scale * h[i] * t[i];
        gt[i] += scale * h[i] * r[i];
      }
      break;
    case ModelKind::kComplEx:
      for (int32_t i = 0; i < w; i += 2) {
        const double a = h[i], b = h[i + 1];
        const double c = r[i], d = r[i + 1];
        const double e = t[i], f = t[i + 1];
        gh[i] += scale * (c * e + d * f);
        gh[i + 1] += scale * (c * f - d * e);
        gr[i] += scale * (a * e + b * f);
        gr[i + 1] += scale * (a * f - b * e);
        gt[i] += scale * (a * c - b * d);
        gt[i + 1] += scale * (a * d + b * c);
      }
      break;
  }
}

void AccumulateL2(const EmbeddingModel& model, const Triple& tr, double l2,
                  Gradient& gradient) {
  if (l2 == 0) return;
  const int32_t w = model.row_width();
  auto add = [&](std::span<const double> row, std::vector<double>& g) {
    for (int32_t i = 0; i < w; ++i) g[i] += 2.0 * l2 * row[i];
  };
  add(model.entity(tr.head), Slot(gradient.entity, tr.head, w));
  add(model.predicate(tr.predicate), Slot(gradient.predicate, tr.predicate, w));
  add(model.entity(tr.tail), Slot(gradient.entity, tr.tail, w));
}

double SquaredNorm(std::span<const double> row) {
  double s = 0;
  for (double v : row) s += v * v;
  return s;
}

double L2Term(const EmbeddingModel& model, const Triple& tr, double l2) {
  if (l2 == 0) return 0;
  return l2 * (SquaredNorm(model.entity(tr.head)) +
               SquaredNorm(model.predicate(tr.predicate)) +
               SquaredNorm(model.entity(tr.tail)));
}

double LossImpl(const EmbeddingModel& model, const TrainConfig& config,
                const TrainingExample& example, Gradient* gradient) {
  double loss = 0;
  const Triple& pos = example.positive;
  if (model.kind == ModelKind::kTransE) {
    const double d_pos =
        TransEDistance(model.entity(pos.head), model.predicate(pos.predicate),
                       model.entity(pos.tail), model.norm);
    for (const Triple& neg : example.negatives) {
      const double d_neg = TransEDistance(model.entity(neg.head),
                                          model.predicate(neg.predicate),
                                          model.entity(neg.tail), model.norm);
      const double hinge = config.margin + d_pos - d_neg;
      if (hinge > 0) {
        loss += hinge;
        if (gradient != nullptr) {
          AccumulateTripleGradient(model, pos, 1.0, *gradient);
          AccumulateTripleGradient(model, neg, -1.0, *gradient);
        }
      }
    }
  } else {
    const double f_pos = ScoreTriple(model, pos);
    loss += Softplus(-f_pos);
    if (gradient != nullptr) {
      AccumulateTripleGradient(model, pos, -Sigmoid(-f_pos), *gradient);
    }
    for (const Triple& neg : example.negatives) {
      const double f_neg = ScoreTriple(model, neg);
      loss += Softplus(f_neg);
      if (gradient != nullptr) {
        AccumulateTripleGradient(model, neg, Sigmoid(f_neg), *gradient);
      }
    }
  }
  loss += L2Term(model, pos, config.l2);
  if (gradient != nullptr) AccumulateL2(model, pos, config.l2, *gradient);
  for (const Triple& neg : example.negatives) {
    loss += L2Term(model, neg, config.l2);
    if (gradient != nullptr) AccumulateL2(model, neg, config.l2, *gradient);
  }
  return loss;
}

void NormalizeRow(std::span<double> row) {
  const double n = std::sqrt(SquaredNorm(row));
  if (n > 0) {
    for (double& v : row) v /= n;
  }
}

uint64_t TripleKey(const Triple& t, int32_t num_entities,
                   int32_t num_predicates) {
  return (static_cast<uint64_t>(t.head) * num_predicates + t.predicate) *
             num_entities +
         t.tail;
}

}  // namespace

const char* ModelKindName(ModelKind kind) {
  switch (kind) {
    case ModelKind::kTransE:
      return "TransE";
    case ModelKind::kDistMult:
      return "DistMult";
    case ModelKind::kComplEx:
      return "ComplEx";
  }
  return "?";
}

ModelKind ParseModelKind(std::string_view name) {
  if (name == "TransE" || name == "transe") return ModelKind::kTransE;
  if (name == "DistMult" || name == "distmult") return ModelKind::kDistMult;
  if (name == "ComplEx" || name == "complex") return ModelKind::kComplEx;
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

void TrainConfig::Validate() const {
  if (dim <= 0) throw ConfigError("dim must be positive");
  if (norm != 1 && norm != 2) throw ConfigError("norm must be 1 or 2");
  if (epochs < 0) throw ConfigError("epochs must be non-negative");
  if (!(learning_rate > 0)) throw ConfigError("learning rate must be positive");
  if (negatives <= 0) throw ConfigError("negatives must be positive");
  if (!(margin > 0)) throw ConfigError("margin must be positive");
  if (l2 < 0) throw ConfigError("l2 must be non-negative");
  if (batch_size <= 0) throw ConfigError("batch size must be positive");
}

EmbeddingModel InitModel(ModelKind kind, int32_t num_entities,
                         int32_t num_predicates, const TrainConfig& config) {
  config.Validate();
  EmbeddingModel model;
  model.kind = kind;
  model.dim = config.dim;
  model.norm = config.norm;
  model.num_entities = num_entities;
  model.num_predicates = num_predicates;
  const size_t w = model.row_width();
  model.entity_embeddings.resize(num_entities * w);
  model.predicate_embeddings.resize(num_predicates * w);
  Rng rng(MixSeed(config.seed, 1, 0));
  for (double& v : model.entity_embeddings) v = UniformDouble(rng, -0.1, 0.1);
  for (double& v : model.predicate_embeddings) {
    v = UniformDouble(rng, -0.1, 0.1);
  }
  if (kind == ModelKind::kTransE) {
    for (EntityId e = 0; e < num_entities; ++e) NormalizeRow(model.entity(e));
  }
  return model;
}

double ScoreTriple(const EmbeddingModel& model, const Triple& triple) {
  const auto h = model.entity(triple.head);
  const auto r = model.predicate(triple.predicate);
  const auto t = model.entity(triple.tail);
  switch (model.kind) {
    case ModelKind::kTransE:
      return -TransEDistance(h, r, t, model.norm);
    case ModelKind::kDistMult:
      return DistMultScore(h, r, t);
    case ModelKind::kComplEx:
      return ComplExScore(h, r, t);
  }
  return 0;
}

std::vector<double> Score(const EmbeddingModel& model, const Query& query) {
  if (query.anchor < 0 || query.anchor >= model.num_entities ||
      query.predicate < 0 || query.predicate >= model.num_predicates) {
    throw Error("query out of model bounds");
  }
  const int32_t w = model.row_width();
  const auto anchor = model.entity(query.anchor);
  const auto r = model.predicate(query.predicate);
  const bool tail = query.direction == Direction::kTail;
  std::vector<double> out(model.num_entities);
  // Fold the fixed operands into one vector so each candidate costs O(w).
  std::vector<double> folded(w);
  switch (model.kind) {
    case ModelKind::kTransE:
      // tail: -||(h + r) - e||, head: -||e - (t - r)||.
      for (int32_t i = 0; i < w; ++i) {
        folded[i] = tail ? anchor[i] + r[i] : anchor[i] - r[i];
      }
      for (EntityId e = 0; e < model.num_entities; ++e) {
        const auto c = model.entity(e);
        double sum = 0;
        for (int32_t i = 0; i < w; ++i) {
          const double x = folded[i] - c[i];
          sum += model.norm == 1 ? std::abs(x) : x * x;
        }
        out[e] = -(model.norm == 1 ? sum : std::sqrt(sum));
      }
      break;
    case ModelKind::kDistMult:
      for (int32_t i = 0; i < w; ++i) folded[i] = anchor[i] * r[i];
      for (EntityId e = 0; e < model.num_entities; ++e) {
        const auto c = model.entity(e);
        double sum = 0;
        for (int32_t i = 0; i < w; ++i) sum += folded[i] * c[i];
        out[e] = sum;
      }
      break;
    case ModelKind::kComplEx:
      if (tail) {
        // Re(<h*r, conj(e)>) = sum re(hr) re(e) + im(hr) im(e).
        for (int32_t i = 0; i < w; i += 2) {
          folded[i] = anchor[i] * r[i] - anchor[i + 1] * r[i + 1];
          folded[i + 1] = anchor[i] * r[i + 1] + anchor[i + 1] * r[i];
        }
      } else {
        // Re(<e, r*conj(t)>) = sum re(e) re(w) - im(e) im(w).
        for (int32_t i = 0; i < w; i += 2) {
          folded[i] = r[i] * anchor[i] + r[i + 1] * anchor[i + 1];
          folded[i + 1] = -(r[i + 1] * anchor[i] - r[i] * anchor[i + 1]);
        }
      }
      for (EntityId e = 0; e < model.num_entities; ++e) {
        const auto c = model.entity(e);
        double sum = 0;
        for (int32_t i = 0; i < w; ++i) sum += folded[i] * c[i];
        out[e] = sum;
      }
      break;
  }
  for (double v : out) {
    if (!std::isfinite(v)) throw Error("non-finite score");
  }
  return out;
}

std::vector<double> PredicateVector(const EmbeddingModel& model,
                                    PredicateId predicate) {
  if (predicate < 0 || predicate >= model.num_predicates) {
    throw Error("predicate index out of range");
  }
  const auto row = model.predicate(predicate);
  if (model.kind != ModelKind::kComplEx) return {row.begin(), row.end()};
  std::vector<double> out(row.size());
  const size_t d = row.size() / 2;
  for (size_t i = 0; i < d; ++i) {
    out[i] = row[2 * i];
    out[d + i] = row[2 * i + 1];
  }
  return out;
}

double ExampleLoss(const EmbeddingModel& model, const TrainConfig& config,
                   const TrainingExample& example) {
  return LossImpl(model, config, example, nullptr);
}

double ExampleLossAndGradient(const EmbeddingModel& model,
                              const TrainConfig& config,
                              const TrainingExample& example,
                              Gradient& gradient) {
  return LossImpl(model, config, example, &gradient);
}

EmbeddingModel Train(const KnowledgeGraph& kg, ModelKind kind,
                     const TrainConfig& config) {
  if (kg.train.empty()) throw Error("training split is empty");
  const int32_t num_entities = kg.vocab.num_entities();
  const int32_t num_predicates = kg.vocab.num_predicates();
  EmbeddingModel model = InitModel(kind, num_entities, num_predicates, config);
  const int32_t w = model.row_width();

  std::unordered_set<uint64_t> positives;
  for (const Triple& t : kg.train) {
    positives.insert(TripleKey(t, num_entities, num_predicates));
  }
  std::vector<double> entity_accum(model.entity_embeddings.size(), 0.0);
  std::vector<double> predicate_accum(model.predicate_embeddings.size(), 0.0);
  std::vector<size_t> order(kg.train.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(MixSeed(config.seed, 2, 0));

  auto corrupt = [&](const Triple& pos) {
    Triple neg = pos;
    for (int attempt = 0; attempt < 64; ++attempt) {
      neg = pos;
      const EntityId e = static_cast<EntityId>(UniformIndex(rng, num_entities));
      if (UniformIndex(rng, 2) == 0) {
        neg.head = e;
      } else {
        neg.tail = e;
      }
      if (!positives.contains(TripleKey(neg, num_entities, num_predicates))) {
        break;
      }
    }
    return neg;
  };

  auto apply = [&](std::unordered_map<int32_t, std::vector<double>>& grads,
                   std::vector<double>& params, std::vector<double>& accum) {
    // Sorted row order keeps floating-point results independent of the
    // hash map's iteration order.
    std::vector<int32_t> rows;
    rows.reserve(grads.size());
    for (const auto& [row, g] : grads) rows.push_back(row);
    std::sort(rows.begin(), rows.end());
    for (int32_t row : rows) {
      const auto& g = grads[row];
      for (int32_t i = 0; i < w; ++i) {
        const size_t k = static_cast<size_t>(row) * w + i;
        accum[k] += g[i] * g[i];
        params[k] -= config.learning_rate * g[i] / (std::sqrt(accum[k]) + 1e-10);
      }
    }
  };

  for (int32_t epoch = 0; epoch < config.epochs; ++epoch) {
    Shuffle(std::span<size_t>(order), rng);
    double epoch_loss = 0;
    for (size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const size_t end = std::min(order.size(), begin + config.batch_size);
      Gradient gradient;
      for (size_t i = begin; i < end; ++i) {
        TrainingExample example;
        example.positive = kg.train[order[i]];
        for (int32_t n = 0; n < config.negatives; ++n) {
          example.negatives.push_back(corrupt(example.positive));
        }
        epoch_loss += ExampleLossAndGradient(model, config, example, gradient);
      }
      apply(gradient.entity, model.entity_embeddings, entity_accum);
      apply(gradient.predicate, model.predicate_embeddings, predicate_accum);
      if (kind == ModelKind::kTransE) {
        for (const auto& [row, g] : gradient.entity) {
          NormalizeRow(model.entity(row));
        }
      }
    }
    if (!std::isfinite(epoch_loss)) {
      throw Error("training diverged at epoch " + std::to_string(epoch));
    }
  }
  for (double v : model.entity_embeddings) {
    if (!std::isfinite(v)) throw Error("training produced non-finite weights");
  }
  return model;
}

void SaveModel(const std::filesystem::path& path, const EmbeddingModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  binary_io::Write<uint32_t>(out, kModelMagic);
  binary_io::Write<uint32_t>(out, kModelVersion);
  binary_io::Write<uint8_t>(out, static_cast<uint8_t>(model.kind));
  binary_io::Write<uint8_t>(out, static_cast<uint8_t>(model.norm));
  binary_io::Write<uint32_t>(out, model.dim);
  binary_io::Write<uint32_t>(out, model.num_entities);
  binary_io::Write<uint32_t>(out, model.num_predicates);
  binary_io::WriteDoubles(out, model.entity_embeddings);
  binary_io::WriteDoubles(out, model.predicate_embeddings);
  if (!out) throw Error("write failed: " + path.string());
}

EmbeddingModel LoadModel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  if (binary_io::Read<uint32_t>(in, "magic") != kModelMagic) {
    throw ParseError(path.string(), 0, "not a model file");
  }
  if (binary_io::Read<uint32_t>(in, "version") != kModelVersion) {
    throw ParseError(path.string(), 0, "unsupported model version");
  }
  EmbeddingModel model;
  const uint8_t kind = binary_io::Read<uint8_t>(in, "kind");
  if (kind > 2) throw ParseError(path.string(), 0, "unknown model kind");
  model.kind = static_cast<ModelKind>(kind);
  model.norm = binary_io::Read<uint8_t>(in, "norm");
  model.dim = static_cast<int32_t>(binary_io::Read<uint32_t>(in, "dim"));
  model.num_entities = static_cast<int32_t>(binary_io::Read<uint32_t>(in, "|E|"));
  model.num_predicates =
      static_cast<int32_t>(binary_io::Read<uint32_t>(in, "|R|"));
  model.entity_embeddings.resize(static_cast<size_t>(model.num_entities) *
                                 model.row_width());
  model.predicate_embeddings.resize(static_cast<size_t>(model.num_predicates) *
                                    model.row_width());
  binary_io::ReadDoubles(in, model.entity_embeddings, "entity embeddings");
  binary_io::ReadDoubles(in, model.predicate_embeddings,
                         "predicate embeddings");
  return model;
}

}  // namespace kgcp
