// Copyright 2026 The zsflow Authors.
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

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path work_root() {
  static const fs::path root = [] {
    fs::path p = fs::temp_directory_path() / "zsflow_cli_tests";
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string quote(const std::string& s) { return "'" + s + "'"; }

// Runs the CLI with `args` (already shell-quoted where needed) from the work directory.
Result run(const std::string& args, const std::string& env = "") {
  const fs::path err_file = work_root() / "stderr.txt";
  const std::string cmd = "cd " + quote(work_root().string()) + " && " + env + " " +
                          quote(ZSFLOW_CLI_PATH) + " " + args + " 2>" + quote(err_file.string());
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  std::size_t got = 0;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(err_file);
  return r;
}

const std::string kConfig = std::string(ZSFLOW_SOURCE_DIR) + "/configs/default.json";
// Small and quick: 20 samples per class, a few epochs everywhere.
const std::string kSmall =
    "--set synth.samples_per_class=20 --set train.epochs=2 --set train.n_syn_per_unseen=10 "
    "--set train.classifier.epochs=3 --set train.mining.contrastive_epochs=2";

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    const Result r = run("synth --config " + quote(kConfig) + " --out small " + kSmall);
    ASSERT_EQ(r.code, 0) << r.err;
    const Result t = run("train --data small --config " + quote(kConfig) + " --out small_model.json " + kSmall);
    ASSERT_EQ(t.code, 0) << t.err;
  }
};

TEST_F(Cli, SynthDefaultConfigBuildsBenchmark) {
  const Result r = run("synth --config " + quote(kConfig) + " --out full");
  ASSERT_EQ(r.code, 0) << r.err;
  const json doc = json::parse(r.out);
  EXPECT_EQ(doc["samples"], 1500);
  EXPECT_EQ(doc["split"]["train_seen"], 800);
  EXPECT_EQ(doc["split"]["test_seen"], 200);
  EXPECT_EQ(doc["split"]["test_unseen"], 500);
  EXPECT_TRUE(fs::exists(work_root() / "full" / "manifest.json"));
}

TEST_F(Cli, SynthIsByteIdenticalAcrossRuns) {
  ASSERT_EQ(run("synth --config " + quote(kConfig) + " --out again " + kSmall).code, 0);
  for (const char* f : {"features.csv", "attributes.csv", "split.json"}) {
    EXPECT_EQ(slurp(work_root() / "small" / f), slurp(work_root() / "again" / f)) << f;
  }
}

TEST_F(Cli, MissingRequiredFieldExitsTwoNamingIt) {
  json cfg = json::parse(slurp(kConfig));
  cfg["synth"].erase("C_s");
  std::ofstream(work_root() / "no_cs.json") << cfg.dump();
  const Result r = run("synth --config no_cs.json --out bad");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("C_s"), std::string::npos) << r.err;
  EXPECT_TRUE(r.out.empty());
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("eval --data small --config " + quote(kConfig) + " --mode fancy").code, 2);
  EXPECT_EQ(run("synth --config " + quote(kConfig) + " --out x --set train.bogus=1").code, 2);
  EXPECT_EQ(run("synth --config " + quote(kConfig) + " --out x", "ZSFLOW_SEED=abc").code, 2);
}

TEST_F(Cli, IoErrorsExitThree) {
  EXPECT_EQ(run("synth --config missing.json --out x").code, 3);
  EXPECT_EQ(run("train --data nowhere --config " + quote(kConfig) + " --out m.json").code, 3);
}

TEST_F(Cli, DivergenceExitsFour) {
  const Result r = run("train --data small --config " + quote(kConfig) +
                       " --out diverged.json --set train.lr=50 --set train.s_cap=0 --set train.epochs=20"
                       " --set train.mining.enabled=false");
  EXPECT_EQ(r.code, 4) << r.err;
  EXPECT_NE(r.err.find("epoch"), std::string::npos);
}

TEST_F(Cli, TrainWritesModelLogAndManifest) {
  EXPECT_TRUE(fs::exists(work_root() / "small_model.json"));
  EXPECT_TRUE(fs::exists(work_root() / "small_model.manifest.json"));
  std::istringstream log(slurp(work_root() / "small_model.log.jsonl"));
  std::string line;
  std::size_t n = 0;
  while (std::getline(log, line)) {
    EXPECT_TRUE(json::parse(line).contains("total"));
    ++n;
  }
  EXPECT_EQ(n, 2u);
  const json manifest = json::parse(slurp(work_root() / "small_model.manifest.json"));
  EXPECT_EQ(manifest["config"]["train"]["epochs"], 2);
  EXPECT_TRUE(manifest.contains("duration_seconds"));
  EXPECT_TRUE(manifest.contains("tool_version"));
}

TEST_F(Cli, TrainIsByteIdenticalAcrossRuns) {
  ASSERT_EQ(run("train --data small --config " + quote(kConfig) + " --out twin.json " + kSmall).code, 0);
  EXPECT_EQ(slurp(work_root() / "twin.json"), slurp(work_root() / "small_model.json"));
}

TEST_F(Cli, SeedEnvironmentOverridesConfig) {
  const Result r = run("train --data small --config " + quote(kConfig) + " --out env.json " + kSmall,
                       "ZSFLOW_SEED=5");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(slurp(work_root() / "env.manifest.json"))["seed"], 5);
  EXPECT_NE(slurp(work_root() / "env.json"), slurp(work_root() / "small_model.json"));
  // --set comes after the environment.
  ASSERT_EQ(run("train --data small --config " + quote(kConfig) + " --out env2.json " + kSmall +
                    " --set train.seed=0",
                "ZSFLOW_SEED=5")
                .code,
            0);
  EXPECT_EQ(slurp(work_root() / "env2.json"), slurp(work_root() / "small_model.json"));
}

TEST_F(Cli, GenerateCountsAndDeterminism) {
  const Result r = run("generate --model small_model.json --data small --n 4 --out g1.csv --seed 3");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["rows"], 20);
  std::istringstream csv(slurp(work_root() / "g1.csv"));
  std::string line;
  std::size_t rows = 0;
  std::getline(csv, line);
  EXPECT_EQ(line.rfind("label,f0,", 0), 0u);
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 20u);

  ASSERT_EQ(run("generate --model small_model.json --data small --n 4 --out g2.csv --seed 3").code, 0);
  EXPECT_EQ(slurp(work_root() / "g1.csv"), slurp(work_root() / "g2.csv"));
}

TEST_F(Cli, GenerateZeroIsHeaderOnly) {
  ASSERT_EQ(run("generate --model small_model.json --data small --n 0 --out empty.csv").code, 0);
  const std::string text = slurp(work_root() / "empty.csv");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
  EXPECT_EQ(text.rfind("label,f0,", 0), 0u);
}

TEST_F(Cli, GenerateRejectsVersionMismatch) {
  json model = json::parse(slurp(work_root() / "small_model.json"));
  model["format_version"] = 99;
  std::ofstream(work_root() / "future.json") << model.dump();
  EXPECT_EQ(run("generate --model future.json --data small --n 1 --out f.csv").code, 2);
}

TEST_F(Cli, EvalGzslSchema) {
  const Result r = run("eval --data small --config " + quote(kConfig) + " --mode gzsl " + kSmall);
  ASSERT_EQ(r.code, 0) << r.err;
  const json doc = json::parse(r.out);
  for (const char* key : {"acc_seen", "acc_unseen", "harmonic_mean", "zsl_t1", "per_class", "config_echo", "seed"}) {
    EXPECT_TRUE(doc.contains(key)) << key;
  }
}

TEST_F(Cli, EvalZslSchema) {
  const Result r = run("eval --data small --config " + quote(kConfig) + " --mode zsl " + kSmall);
  ASSERT_EQ(r.code, 0) << r.err;
  const json doc = json::parse(r.out);
  EXPECT_TRUE(doc.contains("zsl_t1"));
  EXPECT_FALSE(doc.contains("acc_seen"));
  EXPECT_FALSE(doc.contains("harmonic_mean"));
}

TEST_F(Cli, EvalAblationKeys) {
  const Result r = run("eval --data small --config " + quote(kConfig) + " --mode ablation --out abl.json " + kSmall);
  ASSERT_EQ(r.code, 0) << r.err;
  const json doc = json::parse(r.out);
  for (const char* key : {"GSMFlow", "GSMFlow w/o constraints", "GSMFlow w/o EM", "GSMFlow w/o VP",
                          "GSMFlow w/o RP", "GSMFlow w/o EM&VP"}) {
    ASSERT_TRUE(doc.contains(key)) << key;
    EXPECT_TRUE(doc[key].contains("harmonic_mean"));
  }
  EXPECT_EQ(json::parse(slurp(work_root() / "abl.json")), doc);
}

TEST_F(Cli, VerifyDetectsTampering) {
  ASSERT_EQ(run("generate --model small_model.json --data small --n 2 --out tamper.csv").code, 0);
  const Result ok = run("verify --manifest tamper.manifest.json");
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_TRUE(json::parse(ok.out)["ok"].get<bool>());
  std::ofstream(work_root() / "tamper.csv", std::ios::app) << "10,0\n";
  const Result bad = run("verify --manifest tamper.manifest.json");
  EXPECT_EQ(bad.code, 3);
  EXPECT_FALSE(json::parse(bad.out)["ok"].get<bool>());
}

}  // namespace
