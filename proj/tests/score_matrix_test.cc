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

#include <gtest/gtest.h>

#include "kgcp/error.h"
#include "kgcp/kge_models.h"
#include "test_util.h"

namespace kgcp {
namespace {

using testing::TempDir;
using testing::WriteText;

Vocab FourEntities() { return Vocab::FromNames({"a", "b", "c", "d"}, {"r", "s"}); }

TEST(ScoreMatrixTest, ImportCsv) {
  TempDir dir;
  WriteText(dir / "s.csv",
            "tail,1,0,0.1,0.2,0.3,0.4\n"
            "head,2,1,1,2,3,4\n");
  const ScoreMatrix m = ImportScores(dir / "s.csv");
  EXPECT_EQ(m.size(), 2u);
  EXPECT_EQ(m.num_entities(), 4);
  EXPECT_EQ(m.provenance(), ScoreProvenance::kImported);
  EXPECT_EQ(m.Scores({Direction::kHead, 2, 1}),
            (std::vector<double>{1, 2, 3, 4}));
  EXPECT_NO_THROW(m.CheckAgainst(FourEntities()));
}

TEST(ScoreMatrixTest, LengthMismatch) {
  TempDir dir;
  WriteText(dir / "s.csv", "tail,1,0,0.1,0.2,0.3,0.4\ntail,2,0,0.1,0.2,0.3\n");
  try {
    ImportScores(dir / "s.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("length mismatch"), std::string::npos);
  }
  ScoreMatrix m(4, ScoreProvenance::kImported);
  EXPECT_THROW(m.Add({Direction::kTail, 0, 0}, {1, 2, 3}), Error);
  // A matrix of 3-vectors against a 4-entity vocabulary.
  ScoreMatrix three(3, ScoreProvenance::kImported);
  three.Add({Direction::kTail, 0, 0}, {1, 2, 3});
  try {
    three.CheckAgainst(FourEntities());
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("length mismatch"), std::string::npos);
  }
}

TEST(ScoreMatrixTest, UnknownQueryKey) {
  ScoreMatrix m(4, ScoreProvenance::kImported);
  m.Add({Direction::kTail, 0, 5}, {1, 2, 3, 4});
  try {
    m.CheckAgainst(FourEntities());
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("unknown query key"),
              std::string::npos);
  }
}

TEST(ScoreMatrixTest, MissingQueriesListed) {
  ScoreMatrix m(4, ScoreProvenance::kImported);
  m.Add({Direction::kTail, 0, 0}, {1, 2, 3, 4});
  const std::vector<Query> need{{Direction::kTail, 0, 0},
                                {Direction::kHead, 3, 1}};
  try {
    m.RequireQueries(need);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("1 queries missing: head(3,1)"),
              std::string::npos);
  }
  EXPECT_THROW(m.Scores({Direction::kHead, 3, 1}), Error);
}

TEST(ScoreMatrixTest, BinaryAndCsvRoundTrip) {
  TempDir dir;
  TrainConfig config;
  config.seed = 2;
  const EmbeddingModel model = InitModel(ModelKind::kComplEx, 6, 2, config);
  std::vector<Query> queries;
  for (EntityId a = 0; a < 6; ++a) {
    queries.push_back({Direction::kTail, a, 1});
    queries.push_back({Direction::kHead, a, 0});
  }
  const ScoreMatrix m = ScoreMatrix::Materialize(ModelScoreProvider(model),
                                                 queries,
                                                 ScoreProvenance::kTrained);
  m.WriteBinary(dir / "s.bin");
  m.WriteCsv(dir / "s.csv");
  const ScoreMatrix bin = ImportScores(dir / "s.bin");
  const ScoreMatrix csv = ImportScores(dir / "s.csv");
  EXPECT_EQ(bin.rows(), m.rows());
  EXPECT_EQ(csv.rows(), m.rows());
  bin.WriteBinary(dir / "again.bin");
  EXPECT_EQ(testing::ReadText(dir / "s.bin"), testing::ReadText(dir / "again.bin"));
}

TEST(PredicateVectorsTest, RoundTripAndCount) {
  TempDir dir;
  TrainConfig config;
  config.dim = 3;
  const EmbeddingModel model = InitModel(ModelKind::kComplEx, 4, 2, config);
  const PredicateVectors v = PredicateVectors::FromModel(model);
  EXPECT_EQ(v.dim, 6);
  EXPECT_EQ(v.rows[1], PredicateVector(model, 1));
  v.Write(dir / "v.bin");
  const PredicateVectors back = PredicateVectors::Read(dir / "v.bin", 2);
  EXPECT_EQ(back.rows, v.rows);
  EXPECT_THROW(PredicateVectors::Read(dir / "v.bin", 3), ParseError);
}

}  // namespace
}  // namespace kgcp
