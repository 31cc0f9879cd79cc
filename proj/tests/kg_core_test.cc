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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "kgcp/error.h"
#include "kgcp/random.h"
#include "test_util.h"

namespace kgcp {
namespace {

using testing::TempDir;
using testing::WriteText;

KnowledgeGraph SmallKg(int per_predicate) {
  std::vector<std::string> entities, predicates{"p", "q"};
  for (int i = 0; i < 20; ++i) entities.push_back("e" + std::to_string(100 + i));
  KnowledgeGraph kg;
  kg.vocab = Vocab::FromNames(entities, predicates);
  for (int r = 0; r < 2; ++r) {
    int made = 0;
    for (int h = 0; h < 20 && made < per_predicate; ++h) {
      for (int t = 0; t < 20 && made < per_predicate; ++t, ++made) {
        kg.train.push_back({h, r, t});
      }
    }
  }
  return kg;
}

TEST(LoadKgTest, CountsTsv) {
  TempDir dir;
  WriteText(dir / "g.tsv", "a\tlikes\tb\nb\tlikes\tc\nc\tknows\td\n");
  const KnowledgeGraph kg = LoadKg(dir / "g.tsv");
  EXPECT_EQ(kg.vocab.num_entities(), 4);
  EXPECT_EQ(kg.vocab.num_predicates(), 2);
  EXPECT_EQ(kg.num_triples(), 3u);
  EXPECT_EQ(kg.train.size(), 3u);
  EXPECT_EQ(kg.vocab.entity(0), "a");
  EXPECT_EQ(kg.vocab.predicate(1), "likes");
}

TEST(LoadKgTest, EmptyFile) {
  TempDir dir;
  WriteText(dir / "g.tsv", "");
  try {
    LoadKg(dir / "g.tsv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("no triples"), std::string::npos);
  }
}

TEST(LoadKgTest, DuplicateLineNamed) {
  TempDir dir;
  WriteText(dir / "g.tsv", "a\tr\tb\nb\tr\tc\na\tr\tb\n");
  try {
    LoadKg(dir / "g.tsv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos);
  }
}

TEST(LoadKgTest, BadFieldCount) {
  TempDir dir;
  WriteText(dir / "g.tsv", "a\tr\tb\na\tr\n");
  try {
    LoadKg(dir / "g.tsv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
}

TEST(LoadKgTest, ManifestWithOpenVocab) {
  TempDir dir;
  WriteText(dir / "train.tsv", "a\tr\tb\nb\tr\tc\n");
  WriteText(dir / "valid.tsv", "c\tr\ta\n");
  WriteText(dir / "test.tsv", "a\ts\tc\n");
  WriteText(dir / "m.json",
            R"({"train": "train.tsv", "valid": "valid.tsv", "test": "test.tsv"})");
  const KnowledgeGraph kg = LoadKg(dir / "m.json");
  EXPECT_EQ(kg.train.size(), 2u);
  EXPECT_EQ(kg.calib.size(), 1u);
  EXPECT_EQ(kg.test.size(), 1u);
  EXPECT_EQ(kg.vocab.num_entities(), 3);
  EXPECT_EQ(kg.vocab.num_predicates(), 2);
}

TEST(LoadKgTest, ClosedVocabRejectsUnknownEntity) {
  TempDir dir;
  WriteText(dir / "train.tsv", "a\tr\tb\n");
  WriteText(dir / "valid.tsv", "b\tr\ta\n");
  WriteText(dir / "test.tsv", "a\tr\tz\n");
  WriteText(dir / "entities.txt", "a\nb\n");
  WriteText(dir / "m.json",
            R"({"train": "train.tsv", "valid": "valid.tsv", "test": "test.tsv",
                "entities": "entities.txt"})");
  try {
    LoadKg(dir / "m.json");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown entity 'z'"),
              std::string::npos);
  }
}

TEST(LoadKgTest, WriteTsvRoundTrip) {
  TempDir dir;
  const KnowledgeGraph kg = SmallKg(30);
  WriteTsv(dir / "out.tsv", kg.vocab, kg.train);
  const KnowledgeGraph back = LoadKg(dir / "out.tsv");
  EXPECT_EQ(back.vocab.entities(), kg.vocab.entities());
  EXPECT_EQ(back.train, kg.train);
}

TEST(VocabTest, RejectsDuplicates) {
  EXPECT_THROW(Vocab::FromNames({"a", "a"}, {"r"}), Error);
  EXPECT_THROW(Vocab::FromNames({"a"}, {"r", "r"}), Error);
}

TEST(SplitKgTest, StratifiedAndDeterministic) {
  const KnowledgeGraph kg = SmallKg(100);
  SplitConfig config{0.8, 0.1, 0.1, 42, true};
  const KnowledgeGraph a = SplitKg(kg, config);
  const KnowledgeGraph b = SplitKg(kg, config);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.calib, b.calib);
  EXPECT_EQ(a.test, b.test);
  EXPECT_EQ(a.num_triples(), 200u);

  std::map<PredicateId, int> calib_per_predicate;
  for (const Triple& t : a.calib) ++calib_per_predicate[t.predicate];
  EXPECT_EQ(calib_per_predicate[0], 10);
  EXPECT_EQ(calib_per_predicate[1], 10);

  std::vector<Triple> pooled = a.train;
  pooled.insert(pooled.end(), a.calib.begin(), a.calib.end());
  pooled.insert(pooled.end(), a.test.begin(), a.test.end());
  std::sort(pooled.begin(), pooled.end());
  std::vector<Triple> original = kg.train;
  std::sort(original.begin(), original.end());
  EXPECT_EQ(pooled, original);

  config.seed = 43;
  EXPECT_NE(SplitKg(kg, config).calib, a.calib);
}

TEST(SplitKgTest, RejectsBadFractions) {
  EXPECT_THROW((SplitConfig{0.8, 0.1, 0.2, 0, true}.Validate()), ConfigError);
  EXPECT_THROW((SplitConfig{1.0, 0.0, 0.0, 0, true}.Validate()), ConfigError);
}

TEST(MakeQueriesTest, Directions) {
  const std::vector<Triple> one{{1, 0, 2}};
  const QueryAnswerSet both = MakeQueries(one, true, SplitName::kCalib);
  ASSERT_EQ(both.pairs.size(), 2u);
  EXPECT_EQ(both.name, SplitName::kCalib);
  EXPECT_EQ(both.pairs[0].query.direction, Direction::kTail);
  EXPECT_EQ(both.pairs[0].query.anchor, 1);
  EXPECT_EQ(both.pairs[0].answer, 2);
  EXPECT_EQ(both.pairs[1].query.direction, Direction::kHead);
  EXPECT_EQ(both.pairs[1].query.anchor, 2);
  EXPECT_EQ(both.pairs[1].answer, 1);

  const QueryAnswerSet tail = MakeQueries(one, false, SplitName::kTest);
  ASSERT_EQ(tail.pairs.size(), 1u);
  EXPECT_EQ(tail.pairs[0].query.direction, Direction::kTail);

  const KnowledgeGraph kg = SmallKg(7);
  EXPECT_EQ(MakeQueries(kg.train, true, SplitName::kTrain).pairs.size(),
            2 * kg.train.size());
}

TEST(MakeQueriesTest, CompleteInvertsQuery) {
  const Triple t{3, 1, 4};
  for (const QueryAnswer& qa :
       MakeQueries(std::vector<Triple>{t}, true, SplitName::kTest).pairs) {
    EXPECT_EQ(Complete(qa.query, qa.answer), t);
  }
}

TEST(KnownAnswersTest, FilterMaskExcludesAnswer) {
  KnowledgeGraph kg = SmallKg(0);
  kg.train = {{0, 0, 1}, {0, 0, 2}};
  kg.calib = {{0, 0, 3}};
  kg.test = {{5, 1, 3}};
  const KnownAnswers known(kg);
  const Query q{Direction::kTail, 0, 0};
  EXPECT_EQ(std::vector<EntityId>(known.Answers(q).begin(),
                                  known.Answers(q).end()),
            (std::vector<EntityId>{1, 2, 3}));
  EXPECT_EQ(known.FilterMask(q, 2), (std::vector<EntityId>{1, 3}));
  EXPECT_TRUE(known.Answers({Direction::kHead, 3, 0}).size() == 1);
  EXPECT_TRUE(known.Answers({Direction::kTail, 9, 0}).empty());
}

TEST(RankOfTest, Examples) {
  const std::vector<double> s{0.9, 0.5, 0.5, 0.1};
  EXPECT_EQ(RankOf(s, 0), 1);
  EXPECT_EQ(RankOf(s, 2), 3);
  EXPECT_EQ(RankOf(s, 1), 3);
  const std::vector<EntityId> mask{0};
  EXPECT_EQ(RankOf(s, 3, mask), 3);
}

TEST(RankOfTest, NonFiniteThrows) {
  const std::vector<double> s{0.9, std::numeric_limits<double>::quiet_NaN()};
  EXPECT_THROW(RankOf(s, 0), Error);
  const std::vector<double> inf{1.0, std::numeric_limits<double>::infinity()};
  EXPECT_THROW(CandidateRanks(inf), Error);
}

// Oracle: linear scan over unmasked candidates.
TEST(RankOfTest, MatchesLinearScan) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(UniformIndex(rng, 12));
    std::vector<double> s(n);
    for (double& v : s) v = static_cast<double>(UniformIndex(rng, 4));
    std::vector<EntityId> mask;
    for (int e = 0; e < n; ++e) {
      if (UniformIndex(rng, 3) == 0) mask.push_back(e);
    }
    const std::vector<int32_t> all = CandidateRanks(s, mask);
    for (int e = 0; e < n; ++e) {
      const bool masked = std::binary_search(mask.begin(), mask.end(), e);
      if (masked) {
        EXPECT_EQ(all[e], 0);
        continue;
      }
      int expected = 0;
      for (int o = 0; o < n; ++o) {
        if (!std::binary_search(mask.begin(), mask.end(), o) && s[o] >= s[e]) {
          ++expected;
        }
      }
      EXPECT_EQ(all[e], expected);
      std::vector<EntityId> others = mask;
      EXPECT_EQ(RankOf(s, e, others), expected);
    }
  }
}

}  // namespace
}  // namespace kgcp
