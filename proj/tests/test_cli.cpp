// Copyright 2026 The projtag Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace {

namespace fs = std::filesystem;

struct Run {
  int code = -1;
  std::string out;  // stdout and stderr
};

Run run(const std::string& args) {
  const std::string cmd = std::string(PROJTAG_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string stdout_of(const std::string& args) {
  const std::string cmd = std::string(PROJTAG_CLI_PATH) + " " + args + " 2>/dev/null";
  std::string out;
  FILE* p = popen(cmd.c_str(), "r");
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  pclose(p);
  return out;
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / "projtag_cli" / name;
  fs::create_directories(d.parent_path());
  return d;
}

TEST(Cli, EvaluateIdentical) {
  const auto g = scratch("gold.txt");
  std::ofstream(g) << "子/n 曰/v 學而/v\n";
  const auto r = run("evaluate --gold " + g.string() + " --pred " + g.string() + " --mode wsg");
  EXPECT_EQ(r.code, 0) << r.out;
  const auto j = nlohmann::json::parse(stdout_of("evaluate --gold " + g.string() + " --pred " +
                                                 g.string() + " --mode wsg"));
  EXPECT_EQ(j["f1"].get<double>(), 1.0);
}

TEST(Cli, UsageErrorsExitOne) {
  const auto r = run("evaluate --bogus");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("Usage"), std::string::npos) << r.out;
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, DataErrorsExitTwo) {
  const auto bad = scratch("bad.tsv");
  std::ofstream(bad) << "no tab\n";
  const auto r = run("align --parallel " + bad.string() + " --out " + scratch("t.tsv").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find(":1"), std::string::npos) << r.out;
  EXPECT_EQ(run("evaluate --gold /nonexistent --pred /nonexistent").code, 2);
}

TEST(Cli, SynthAlignProjectTrainRelabel) {
  const auto dir = scratch("flow");
  ASSERT_EQ(run("synth --out " + dir.string() +
                " --pairs 60 --annotated 20 --test-size 10 --chars 60 --word-types 40 --seed 3")
                .code,
            0);
  const std::string d = dir.string();
  auto r = run("align --parallel " + d + "/parallel.tsv --out " + d + "/table.tsv --links " + d +
               "/links.txt --iters 3");
  ASSERT_EQ(r.code, 0) << r.out;
  r = run("project --parallel " + d + "/parallel.tsv --modern " + d + "/modern.txt --table " + d +
          "/table.tsv --out " + d + "/dp.txt --report " + d + "/report.json");
  ASSERT_EQ(r.code, 0) << r.out;
  r = run("train --projected " + d + "/dp.txt --out " + d + "/m1.json --epochs 1 --task wsg" +
          " --embedding-dim 4 --hidden-dim 6");
  ASSERT_EQ(r.code, 0) << r.out;
  r = run("train --annotated " + d + "/annotated.txt --init " + d + "/m1.json --out " + d +
          "/m2.json --epochs 1 --report " + d + "/m2_report.json");
  ASSERT_EQ(r.code, 0) << r.out;
  r = run("relabel --model " + d + "/m2.json --data " + d + "/dp.txt --out " + d + "/dr.txt");
  ASSERT_EQ(r.code, 0) << r.out;
  r = run("evaluate --gold " + d + "/dp.txt --pred " + d + "/dr.txt --format chars --diff " + d +
          "/diff.txt");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_TRUE(fs::exists(d + "/diff.txt"));
  // --projected and --annotated are exclusive.
  EXPECT_EQ(run("train --projected " + d + "/dp.txt --annotated " + d + "/annotated.txt --out " + d +
                "/x.json")
                .code,
            1);
}

}  // namespace
