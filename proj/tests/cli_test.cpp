/*
 * Copyright 2026 The gdecal Authors.
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

// Runs the gdecal executable as a subprocess.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

const std::string kCli = GDECAL_CLI;
const std::string kDataDir = GDECAL_DATA_DIR;

struct Result {
  int exit_code = -1;
  std::string out;  // stdout and stderr interleaved
};

Result Exec(const std::string& args) {
  Result r;
  FILE* pipe = popen((kCli + " " + args + " 2>&1").c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string Temp(const std::string& name, const std::string& text) {
  const fs::path p = fs::temp_directory_path() / ("gdecal_cli_" + name);
  std::ofstream(p) << text;
  return p.string();
}

std::string Slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

TEST(Cli, VerifyTheoryPasses) {
  const Result r = Exec("verify-theory --seed 0 --sweeps 100");
  EXPECT_EQ(r.exit_code, 0) << r.out;
  EXPECT_NE(r.out.find("\"status\": \"pass\""), std::string::npos);
  EXPECT_EQ(r.out.find("\"fail\""), std::string::npos);
}

TEST(Cli, DisagreeOnIdenticalPredictions) {
  const std::string preds =
      Temp("same.csv", "point_id,model_0,model_1\na,1,1\nb,0,0\nc,3,3\n");
  const Result r = Exec("disagree --preds " + preds + " --bootstrap 20");
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_NE(r.out.find("\"mean\": 0.0"), std::string::npos) << r.out;
}

TEST(Cli, CalibrateWithMismatchedIds) {
  const std::string probs = Temp("p.csv", "point_id,class,prob\na,0,1\nb,1,1\n");
  const std::string labels = Temp("y.csv", "point_id,label\na,0\nz,1\n");
  const Result r = Exec("calibrate --probs " + probs + " --labels " + labels);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.out.find("AlignmentError"), std::string::npos) << r.out;
}

TEST(Cli, CalibrateFixtureIsByteDeterministic) {
  const fs::path dir = fs::temp_directory_path();
  const std::string a = (dir / "gdecal_cli_cex_a.json").string();
  const std::string b = (dir / "gdecal_cli_cex_b.json").string();
  const std::string fixture = kDataDir + "/counterexample_population.json";
  ASSERT_EQ(Exec("calibrate --population " + fixture + " --out " + a).exit_code, 0);
  ASSERT_EQ(Exec("calibrate --population " + fixture + " --out " + b).exit_code, 0);
  const std::string ta = Slurp(a);
  EXPECT_FALSE(ta.empty());
  EXPECT_EQ(ta, Slurp(b));
  EXPECT_NE(ta.find("\"cace_exact\": 0.35"), std::string::npos) << ta;
}

TEST(Cli, CsvCurveExport) {
  const Result r = Exec("calibrate --population " + kDataDir + "/counterexample_population.json --format csv");
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_EQ(r.out.rfind("bin_lower,bin_upper,mean_confidence,accuracy,mass\n", 0), 0u);
}

TEST(Cli, ReportMergesFiles) {
  const fs::path dir = fs::temp_directory_path();
  const std::string a = (dir / "gdecal_cli_r1.json").string();
  ASSERT_EQ(
      Exec("calibrate --population " + kDataDir + "/counterexample_population.json --out " + a).exit_code,
      0);
  const Result r = Exec("report --in " + a + " " + a);
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_NE(r.out.find("\"command\": \"report\""), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(Exec("").exit_code, 1);
  EXPECT_EQ(Exec("simulate --mode nonsense").exit_code, 1);
  EXPECT_EQ(Exec("calibrate").exit_code, 1);
  EXPECT_EQ(Exec("disagree --preds /nonexistent.csv").exit_code, 1);
  EXPECT_EQ(Exec("--help").exit_code, 0);
}

}  // namespace
