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

#include "kgcp/kg_core.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "kgcp/error.h"
#include "kgcp/random.h"

namespace kgcp {
namespace {

struct RawTriple {
  std::string head, predicate, tail;
  int line = 0;
};

std::vector<RawTriple> ReadRawTsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<RawTriple> out;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    RawTriple t;
    t.line = line_number;
    const size_t a = line.find('\t');
    const size_t b = a == std::string::npos ? a : line.find('\t', a + 1);
    if (b == std::string::npos || line.find('\t', b + 1) != std::string::npos) {
      throw ParseError(path.string(), line_number,
                       "expected 3 tab-separated fields");
    }
    t.head = line.substr(0, a);
    t.predicate = line.substr(a + 1, b - a - 1);
    t.tail = line.substr(b + 1);
    if (t.head.empty() || t.predicate.empty() || t.tail.empty()) {
      throw ParseError(path.string(), line_number, "empty field");
    }
    if (!seen.emplace(t.head, t.predicate, t.tail).second) {
      throw ParseError(path.string(), line_number, "duplicate triple");
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<std::string> ReadNameList(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) names.push_back(line);
  }
  return names;
}

std::vector<Triple> Index(const std::vector<RawTriple>& raw, const Vocab& vocab,
                          const std::filesystem::path& path) {
  std::vector<Triple> out;
  out.reserve(raw.size());
  for (const RawTriple& r : raw) {
    const auto h = vocab.FindEntity(r.head);
    const auto p = vocab.FindPredicate(r.predicate);
    const auto t = vocab.FindEntity(r.tail);
    if (!h || !t) {
      throw ParseError(path.string(), r.line,
                       "unknown entity '" + (!h ? r.head : r.tail) + "'");
    }
    if (!p) {
      throw ParseError(path.string(), r.line,
                       "unknown predicate '" + r.predicate + "'");
    }
    out.push_back({*h, *p, *t});
  }
  return out;
}

void CollectNames(const std::vector<RawTriple>& raw,
                  std::set<std::string>& entities,
                  std::set<std::string>& predicates) {
  for (const RawTriple& r : raw) {
    entities.insert(r.head);
    entities.insert(r.tail);
    predicates.insert(r.predicate);
  }
}

}  // namespace

Vocab Vocab::FromNames(std::vector<std::string> entities,
                       std::vector<std::string> predicates) {
  Vocab vocab;
  std::sort(entities.begin(), entities.end());
  std::sort(predicates.begin(), predicates.end());
  for (size_t i = 0; i < entities.size(); ++i) {
    if (!vocab.entity_index_.emplace(entities[i], static_cast<int32_t>(i))
             .second) {
      throw Error("duplicate entity identifier '" + entities[i] + "'");
    }
  }
  for (size_t i = 0; i < predicates.size(); ++i) {
    if (!vocab.predicate_index_.emplace(predicates[i], static_cast<int32_t>(i))
             .second) {
      throw Error("duplicate predicate identifier '" + predicates[i] + "'");
    }
  }
  vocab.entities_ = std::move(entities);
  vocab.predicates_ = std::move(predicates);
  return vocab;
}

std::optional<EntityId> Vocab::FindEntity(std::string_view name) const {
  const auto it = entity_index_.find(std::string(name));
  if (it == entity_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<PredicateId> Vocab::FindPredicate(std::string_view name) const {
  const auto it = predicate_index_.find(std::string(name));
  if (it == predicate_index_.end()) return std::nullopt;
  return it->second;
}

const char* DirectionName(Direction direction) {
  return direction == Direction::kTail ? "tail" : "head";
}

const char* SplitNameString(SplitName name) {
  switch (name) {
    case SplitName::kTrain:
      return "train";
    case SplitName::kCalib:
      return "calib";
    case SplitName::kTest:
      return "test";
    case SplitName::kNeg:
      return "neg";
  }
  return "?";
}

void SplitConfig::Validate() const {
  if (!(train_fraction > 0 && calib_fraction > 0 && test_fraction > 0)) {
    throw ConfigError("split fractions must be positive");
  }
  if (std::abs(train_fraction + calib_fraction + test_fraction - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
}

KnowledgeGraph LoadKg(const std::filesystem::path& path, KgFormat format) {
  KnowledgeGraph kg;
  if (format == KgFormat::kTsv) {
    const auto raw = ReadRawTsv(path);
    if (raw.empty()) throw ParseError(path.string(), 0, "no triples");
    std::set<std::string> entities, predicates;
    CollectNames(raw, entities, predicates);
    kg.vocab = Vocab::FromNames({entities.begin(), entities.end()},
                                {predicates.begin(), predicates.end()});
    kg.train = Index(raw, kg.vocab, path);
    return kg;
  }

  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  const auto dir = path.parent_path();
  auto resolve = [&](const char* key) -> std::optional<std::filesystem::path> {
    if (!manifest.contains(key) || manifest[key].is_null()) return std::nullopt;
    if (!manifest[key].is_string()) {
      throw ParseError(path.string(), 0, std::string(key) + " must be a path");
    }
    std::filesystem::path p = manifest[key].get<std::string>();
    return p.is_absolute() ? p : dir / p;
  };
  const auto train_path = resolve("train");
  const auto valid_path = resolve("valid");
  const auto test_path = resolve("test");
  if (!train_path || !valid_path || !test_path) {
    throw ParseError(path.string(), 0,
                     "manifest needs \"train\", \"valid\" and \"test\"");
  }
  const auto train = ReadRawTsv(*train_path);
  const auto valid = ReadRawTsv(*valid_path);
  const auto test = ReadRawTsv(*test_path);
  if (train.empty() && valid.empty() && test.empty()) {
    throw ParseError(path.string(), 0, "no triples");
  }

  std::set<std::string> entities, predicates;
  CollectNames(train, entities, predicates);
  CollectNames(valid, entities, predicates);
  CollectNames(test, entities, predicates);
  std::vector<std::string> entity_list(entities.begin(), entities.end());
  std::vector<std::string> predicate_list(predicates.begin(), predicates.end());
  if (const auto p = resolve("entities")) entity_list = ReadNameList(*p);
  if (const auto p = resolve("relations")) predicate_list = ReadNameList(*p);
  kg.vocab = Vocab::FromNames(std::move(entity_list), std::move(predicate_list));
  kg.train = Index(train, kg.vocab, *train_path);
  kg.calib = Index(valid, kg.vocab, *valid_path);
  kg.test = Index(test, kg.vocab, *test_path);
  return kg;
}

KnowledgeGraph LoadKg(const std::filesystem::path& path) {
  return LoadKg(path, path.extension() == ".json" ? KgFormat::kManifest
                                                  : KgFormat::kTsv);
}

KnowledgeGraph SplitKg(const KnowledgeGraph& kg, const SplitConfig& config) {
  config.Validate();
  std::vector<std::vector<Triple>> by_predicate(kg.vocab.num_predicates());
  for (const auto* split : {&kg.train, &kg.calib, &kg.test}) {
    for (const Triple& t : *split) by_predicate.at(t.predicate).push_back(t);
  }
  KnowledgeGraph out;
  out.vocab = kg.vocab;
  Rng rng(config.seed);
  for (auto& triples : by_predicate) {
    std::sort(triples.begin(), triples.end());
    triples.erase(std::unique(triples.begin(), triples.end()), triples.end());
    Shuffle(std::span<Triple>(triples), rng);
    const size_t n = triples.size();
    const size_t n_calib =
        static_cast<size_t>(std::llround(config.calib_fraction * n));
    const size_t n_test = std::min(
        n - n_calib, static_cast<size_t>(std::llround(config.test_fraction * n)));
    out.calib.insert(out.calib.end(), triples.begin(),
                     triples.begin() + n_calib);
    out.test.insert(out.test.end(), triples.begin() + n_calib,
                    triples.begin() + n_calib + n_test);
    out.train.insert(out.train.end(), triples.begin() + n_calib + n_test,
                     triples.end());
  }
  return out;
}

void WriteTsv(const std::filesystem::path& path, const Vocab& vocab,
              std::span<const Triple> triples) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const Triple& t : triples) {
    out << vocab.entity(t.head) << '\t' << vocab.predicate(t.predicate) << '\t'
        << vocab.entity(t.tail) << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

QueryAnswerSet MakeQueries(std::span<const Triple> triples,
                           bool both_directions, SplitName name) {
  QueryAnswerSet set;
  set.name = name;
  set.pairs.reserve(triples.size() * (both_directions ? 2 : 1));
  for (const Triple& t : triples) {
    set.pairs.push_back({{Direction::kTail, t.head, t.predicate}, t.tail});
    if (both_directions) {
      set.pairs.push_back({{Direction::kHead, t.tail, t.predicate}, t.head});
    }
  }
  return set;
}

KnownAnswers::KnownAnswers(const KnowledgeGraph& kg) {
  for (const auto* split : {&kg.train, &kg.calib, &kg.test}) {
    for (const Triple& t : *split) {
      answers_[{Direction::kTail, t.head, t.predicate}].push_back(t.tail);
      answers_[{Direction::kHead, t.tail, t.predicate}].push_back(t.head);
    }
  }
  for (auto& [query, answers] : answers_) {
    std::sort(answers.begin(), answers.end());
    answers.erase(std::unique(answers.begin(), answers.end()), answers.end());
  }
}

std::span<const EntityId> KnownAnswers::Answers(const Query& query) const {
  const auto it = answers_.find(query);
  if (it == answers_.end()) return {};
  return it->second;
}

std::vector<EntityId> KnownAnswers::FilterMask(const Query& query,
                                               EntityId answer) const {
  std::vector<EntityId> mask;
  for (EntityId e : Answers(query)) {
    if (e != answer) mask.push_back(e);
  }
  return mask;
}

int32_t RankOf(std::span<const double> scores, EntityId answer,
               std::span<const EntityId> mask) {
  if (answer < 0 || static_cast<size_t>(answer) >= scores.size()) {
    throw Error("answer index out of range");
  }
  if (std::binary_search(mask.begin(), mask.end(), answer)) {
    throw Error("answer must not be part of the filter mask");
  }
  const double target = scores[answer];
  int32_t rank = 0;
  size_t m = 0;
  for (size_t e = 0; e < scores.size(); ++e) {
    if (!std::isfinite(scores[e])) throw Error("non-finite score");
    while (m < mask.size() && static_cast<size_t>(mask[m]) < e) ++m;
    if (m < mask.size() && static_cast<size_t>(mask[m]) == e) continue;
    if (scores[e] >= target) ++rank;
  }
  return rank;
}

std::vector<int32_t> CandidateRanks(std::span<const double> scores,
                                    std::span<const EntityId> mask) {
  const size_t n = scores.size();
  std::vector<int32_t> ranks(n, 0);
  std::vector<char> masked(n, 0);
  for (EntityId e : mask) masked.at(e) = 1;
  std::vector<int32_t> order;
  order.reserve(n);
  for (size_t e = 0; e < n; ++e) {
    if (!std::isfinite(scores[e])) throw Error("non-finite score");
    if (!masked[e]) order.push_back(static_cast<int32_t>(e));
  }
  std::sort(order.begin(), order.end(), [&](int32_t a, int32_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  });
  // Tied candidates share the pessimistic rank: the end of their tie group.
  size_t begin = 0;
  while (begin < order.size()) {
    size_t end = begin + 1;
    while (end < order.size() && scores[order[end]] == scores[order[begin]]) {
      ++end;
    }
    for (size_t i = begin; i < end; ++i) {
      ranks[order[i]] = static_cast<int32_t>(end);
    }
    begin = end;
  }
  return ranks;
}

}  // namespace kgcp
