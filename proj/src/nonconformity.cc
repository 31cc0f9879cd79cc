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

#include "kgcp/nonconformity.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "kgcp/error.h"
#include "kgcp/random.h"

namespace kgcp {
namespace {

// Candidate order by decreasing probability, ties by index.
std::vector<int32_t> DescendingOrder(std::span<const double> probs) {
  std::vector<int32_t> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int32_t a, int32_t b) {
    return probs[a] > probs[b];
  });
  return order;
}

}  // namespace

const char* ScorerKindName(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::kSoftmax:
      return "softmax";
    case ScorerKind::kAps:
      return "aps";
    case ScorerKind::kRaps:
      return "raps";
  }
  return "?";
}

ScorerKind ParseScorerKind(std::string_view name) {
  if (name == "softmax" || name == "SOFTMAX") return ScorerKind::kSoftmax;
  if (name == "aps" || name == "APS") return ScorerKind::kAps;
  if (name == "raps" || name == "RAPS") return ScorerKind::kRaps;
  throw ConfigError("unknown nonconformity scorer '" + std::string(name) + "'");
}

void ScorerConfig::Validate() const {
  if (kind == ScorerKind::kRaps) {
    if (!(raps_lambda >= 0)) throw ConfigError("raps lambda must be >= 0");
    if (raps_k_reg < 1) throw ConfigError("raps k_reg must be >= 1");
  }
}

std::vector<double> Softmax(std::span<const double> raw) {
  std::vector<double> out(raw.size());
  if (raw.empty()) return out;
  const double max = *std::max_element(raw.begin(), raw.end());
  double sum = 0;
  for (size_t i = 0; i < raw.size(); ++i) {
    out[i] = std::exp(raw[i] - max);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

NonconformityVector SoftmaxScores(std::span<const double> raw) {
  NonconformityVector out{ScorerKind::kSoftmax, Softmax(raw)};
  for (double& v : out.values) v = 1.0 - v;
  return out;
}

NonconformityVector ApsScores(std::span<const double> raw, double u) {
  const std::vector<double> probs = Softmax(raw);
  NonconformityVector out{ScorerKind::kAps,
                          std::vector<double>(raw.size(), 0.0)};
  double ahead = 0;
  for (int32_t e : DescendingOrder(probs)) {
    out.values[e] = std::min(1.0, ahead + u * probs[e]);
    ahead += probs[e];
  }
  return out;
}

NonconformityVector RapsScores(std::span<const double> raw, double u,
                               double lambda, int32_t k_reg) {
  const std::vector<double> probs = Softmax(raw);
  NonconformityVector out{ScorerKind::kRaps,
                          std::vector<double>(raw.size(), 0.0)};
  double ahead = 0;
  int32_t position = 0;
  for (int32_t e : DescendingOrder(probs)) {
    ++position;
    out.values[e] = std::min(1.0, ahead + u * probs[e]) +
                    lambda * std::max(position - k_reg, 0);
    ahead += probs[e];
  }
  return out;
}

NonconformityVector ComputeNonconformity(const ScorerConfig& config,
                                         std::span<const double> raw,
                                         double u) {
  switch (config.kind) {
    case ScorerKind::kSoftmax:
      return SoftmaxScores(raw);
    case ScorerKind::kAps:
      return ApsScores(raw, u);
    case ScorerKind::kRaps:
      return RapsScores(raw, u, config.raps_lambda, config.raps_k_reg);
  }
  return SoftmaxScores(raw);
}

double UniformDraw(uint64_t seed, uint64_t stream, uint64_t index) {
  return UniformFromBits(MixSeed(seed, stream, index));
}

}  // namespace kgcp
