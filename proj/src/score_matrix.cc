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

#include "kgcp/score_matrix.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "kgcp/binary_io.h"
#include "kgcp/error.h"

namespace kgcp {
namespace {

constexpr uint32_t kScoreMagic = binary_io::Magic("KGSM");
constexpr uint32_t kVectorMagic = binary_io::Magic("KGPV");

std::string Describe(const Query& q) {
  return std::string(DirectionName(q.direction)) + "(" +
         std::to_string(q.anchor) + "," + std::to_string(q.predicate) + ")";
}

std::string FormatDouble(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

ScoreMatrix ReadBinary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  if (binary_io::Read<uint32_t>(in, "magic") != kScoreMagic) {
    throw ParseError(path.string(), 0, "not a score matrix");
  }
  const auto num_entities = binary_io::Read<uint32_t>(in, "|E|");
  const auto count = binary_io::Read<uint32_t>(in, "query count");
  ScoreMatrix matrix(static_cast<int32_t>(num_entities),
                     ScoreProvenance::kImported);
  for (uint32_t i = 0; i < count; ++i) {
    const auto direction = binary_io::Read<uint8_t>(in, "direction");
    if (direction > 1) throw ParseError(path.string(), 0, "bad direction");
    Query q;
    q.direction = static_cast<Direction>(direction);
    q.anchor = static_cast<EntityId>(binary_io::Read<uint32_t>(in, "anchor"));
    q.predicate =
        static_cast<PredicateId>(binary_io::Read<uint32_t>(in, "predicate"));
    std::vector<double> scores(num_entities);
    binary_io::ReadDoubles(in, scores, "scores");
    matrix.Add(q, std::move(scores));
  }
  return matrix;
}

ScoreMatrix ReadCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  int line_number = 0;
  ScoreMatrix matrix;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() < 4) {
      throw ParseError(path.string(), line_number, "too few columns");
    }
    Query q;
    if (fields[0] == "tail") {
      q.direction = Direction::kTail;
    } else if (fields[0] == "head") {
      q.direction = Direction::kHead;
    } else {
      throw ParseError(path.string(), line_number, "bad direction");
    }
    std::vector<double> scores;
    try {
      q.anchor = std::stoi(fields[1]);
      q.predicate = std::stoi(fields[2]);
      for (size_t i = 3; i < fields.size(); ++i) {
        scores.push_back(std::stod(fields[i]));
      }
    } catch (const std::exception&) {
      throw ParseError(path.string(), line_number, "bad number");
    }
    if (first) {
      matrix = ScoreMatrix(static_cast<int32_t>(scores.size()),
                           ScoreProvenance::kImported);
      first = false;
    }
    try {
      matrix.Add(q, std::move(scores));
    } catch (const Error& e) {
      throw ParseError(path.string(), line_number, e.what());
    }
  }
  return matrix;
}

}  // namespace

ScoreMatrix ScoreMatrix::Materialize(const ScoreProvider& provider,
                                     std::span<const Query> queries,
                                     ScoreProvenance provenance) {
  ScoreMatrix matrix(provider.num_entities(), provenance);
  for (const Query& q : queries) {
    if (!matrix.Contains(q)) matrix.Add(q, provider.Scores(q));
  }
  return matrix;
}

void ScoreMatrix::Add(const Query& query, std::vector<double> scores) {
  if (static_cast<int32_t>(scores.size()) != num_entities_) {
    throw Error("length mismatch: " + Describe(query) + " has " +
                std::to_string(scores.size()) + " scores, expected " +
                std::to_string(num_entities_));
  }
  for (double v : scores) {
    if (!std::isfinite(v)) throw Error("non-finite score in " + Describe(query));
  }
  if (query.anchor < 0 || query.anchor >= num_entities_ || query.predicate < 0) {
    throw Error("unknown query key " + Describe(query));
  }
  if (!rows_.emplace(query, std::move(scores)).second) {
    throw Error("duplicate query " + Describe(query));
  }
}

std::span<const double> ScoreMatrix::Find(const Query& query) const {
  const auto it = rows_.find(query);
  if (it == rows_.end()) {
    throw Error("no scores for query " + Describe(query));
  }
  return it->second;
}

std::vector<double> ScoreMatrix::Scores(const Query& query) const {
  const auto row = Find(query);
  return {row.begin(), row.end()};
}

void ScoreMatrix::RequireQueries(std::span<const Query> queries) const {
  std::vector<Query> missing;
  for (const Query& q : queries) {
    if (!Contains(q) &&
        std::find(missing.begin(), missing.end(), q) == missing.end()) {
      missing.push_back(q);
    }
  }
  if (missing.empty()) return;
  std::string what = std::to_string(missing.size()) + " queries missing:";
  for (size_t i = 0; i < missing.size() && i < 10; ++i) {
    what += " " + Describe(missing[i]);
  }
  throw Error(what);
}

void ScoreMatrix::CheckAgainst(const Vocab& vocab) const {
  if (num_entities_ != vocab.num_entities()) {
    throw Error("length mismatch: score vectors have " +
                std::to_string(num_entities_) + " entries, vocabulary has " +
                std::to_string(vocab.num_entities()) + " entities");
  }
  for (const auto& [q, scores] : rows_) {
    if (q.anchor >= vocab.num_entities() ||
        q.predicate >= vocab.num_predicates()) {
      throw Error("unknown query key " + Describe(q));
    }
  }
}

void ScoreMatrix::WriteBinary(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  binary_io::Write<uint32_t>(out, kScoreMagic);
  binary_io::Write<uint32_t>(out, num_entities_);
  binary_io::Write<uint32_t>(out, static_cast<uint32_t>(rows_.size()));
  for (const auto& [q, scores] : rows_) {
    binary_io::Write<uint8_t>(out, static_cast<uint8_t>(q.direction));
    binary_io::Write<uint32_t>(out, q.anchor);
    binary_io::Write<uint32_t>(out, q.predicate);
    binary_io::WriteDoubles(out, scores);
  }
  if (!out) throw Error("write failed: " + path.string());
}

void ScoreMatrix::WriteCsv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& [q, scores] : rows_) {
    out << DirectionName(q.direction) << ',' << q.anchor << ',' << q.predicate;
    for (double v : scores) out << ',' << FormatDouble(v);
    out << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

ScoreMatrix ImportScores(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? ReadCsv(path) : ReadBinary(path);
}

PredicateVectors PredicateVectors::FromModel(const EmbeddingModel& model) {
  PredicateVectors vectors;
  for (PredicateId r = 0; r < model.num_predicates; ++r) {
    vectors.rows.push_back(PredicateVector(model, r));
  }
  vectors.dim = vectors.rows.empty()
                    ? 0
                    : static_cast<int32_t>(vectors.rows.front().size());
  return vectors;
}

void PredicateVectors::Write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  binary_io::Write<uint32_t>(out, kVectorMagic);
  binary_io::Write<uint32_t>(out, dim);
  binary_io::Write<uint32_t>(out, static_cast<uint32_t>(rows.size()));
  for (size_t r = 0; r < rows.size(); ++r) {
    binary_io::Write<uint32_t>(out, static_cast<uint32_t>(r));
    binary_io::WriteDoubles(out, rows[r]);
  }
  if (!out) throw Error("write failed: " + path.string());
}

PredicateVectors PredicateVectors::Read(const std::filesystem::path& path,
                                        int32_t num_predicates) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  if (binary_io::Read<uint32_t>(in, "magic") != kVectorMagic) {
    throw ParseError(path.string(), 0, "not a predicate-vector file");
  }
  PredicateVectors vectors;
  vectors.dim = static_cast<int32_t>(binary_io::Read<uint32_t>(in, "dim"));
  const auto count = binary_io::Read<uint32_t>(in, "count");
  vectors.rows.assign(num_predicates, {});
  for (uint32_t i = 0; i < count; ++i) {
    const auto r = binary_io::Read<uint32_t>(in, "predicate");
    if (r >= static_cast<uint32_t>(num_predicates)) {
      throw ParseError(path.string(), 0,
                       "predicate " + std::to_string(r) + " out of range");
    }
    vectors.rows[r].resize(vectors.dim);
    binary_io::ReadDoubles(in, vectors.rows[r], "vector");
  }
  for (int32_t r = 0; r < num_predicates; ++r) {
    if (static_cast<int32_t>(vectors.rows[r].size()) != vectors.dim) {
      throw ParseError(path.string(), 0,
                       "missing vector for predicate " + std::to_string(r));
    }
  }
  return vectors;
}

}  // namespace kgcp
