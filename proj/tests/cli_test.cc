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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <string>

#include "test_util.h"

namespace kgcp {
namespace {

using testing::TempDir;

int RunCli(const std::string& args) {
  const std::string command =
      std::string(KGCP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(RunCli(""), 2);
  EXPECT_EQ(RunCli("frobnicate"), 2);
  EXPECT_EQ(RunCli("generate"), 2);  // --out is required
  EXPECT_EQ(RunCli("--help"), 0);
}

TEST(CliTest, ConfigErrorsExitTwo) {
  TempDir dir;
  EXPECT_EQ(RunCli("run --dataset " + (dir / "absent.tsv").string() +
                   " --model TransE"),
            2);
  testing::WriteText(dir / "c.json", "{\"unknown_field\": 3}");
  EXPECT_EQ(RunCli("run --config " + (dir / "c.json").string()), 2);
}

TEST(CliTest, RuntimeErrorsExitOne) {
  TempDir dir;
  testing::WriteText(dir / "bad.tsv", "a\tr\n");
  EXPECT_EQ(RunCli("run --dataset " + (dir / "bad.tsv").string() +
                   " --model TransE --output-dir " + (dir / "o").string()),
            1);
}

TEST(CliTest, GenerateRunAndStages) {
  TempDir dir;
  const std::string data = (dir / "data").string();
  ASSERT_EQ(RunCli("generate --counts 200,150,80,40,20 --seed 3 --out " + data),
            0);
  EXPECT_TRUE(std::filesystem::exists(dir / "data" / "manifest.json"));

  const std::string common = " --dataset " + data +
                             "/manifest.json --model TransE --dim 8"
                             " --epochs 5 --gammas 0.1 --phis 20 --seeds 0,1";
  ASSERT_EQ(RunCli("run" + common + " --plot-data --output-dir " +
                   (dir / "run").string()),
            0);
  for (const char* f : {"reports.csv", "summary.json", "table.txt",
                        "plot_data.csv", "config.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / "run" / f)) << f;
  }

  const std::string staged = common + " --output-dir " + (dir / "st").string();
  EXPECT_EQ(RunCli("calibrate" + staged), 1);  // no scores yet
  ASSERT_EQ(RunCli("train" + staged), 0);
  ASSERT_EQ(RunCli("score" + staged), 0);
  ASSERT_EQ(RunCli("calibrate" + staged), 0);
  ASSERT_EQ(RunCli("evaluate" + staged), 0);
  EXPECT_EQ(testing::ReadText(dir / "st" / "reports.csv"),
            testing::ReadText(dir / "run" / "reports.csv"));
}

}  // namespace
}  // namespace kgcp
