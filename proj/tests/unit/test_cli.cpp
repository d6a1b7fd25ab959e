// Copyright 2026 The lora-advsec Authors.
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


// Exit codes and side effects of the advsec command-line tool.

#include <sys/wait.h>

#include <cstdlib>
#include <cstring>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "advsec/attacks.hpp"
#include "advsec/dataset.hpp"
#include "advsec/pipeline.hpp"
#include "test_support.hpp"

namespace advsec {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  Result run(const std::string& args) {
    const fs::path out = dir_ / "stdout.txt", err = dir_ / "stderr.txt";
    const std::string cmd = std::string(ADVSEC_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = testing::read_file(out);
    r.err = testing::read_file(err);
    return r;
  }

  fs::path tiny_config() {
    const fs::path p = dir_ / "tiny.json";
    testing::write_file(p, R"({"seed": 3, "dataset": {"n_total": 120}, "model": {"arch": "fnn", "mode": "single"},
                               "train": {"epochs": 1}, "psr_grid": [-3], "defense": {"enabled": false}})");
    return p;
  }

  testing::TempDir dir_;
};

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("run --bogus").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("run --seed notanumber").code, 1);
  EXPECT_EQ(run("attack --scope everything --psr -3").code, 1);
}

TEST_F(Cli, HelpAndVersionExitZero) {
  EXPECT_EQ(run("--help").code, 0);
  const Result v = run("--version");
  EXPECT_EQ(v.code, 0);
  EXPECT_NE(v.out.find(std::string(library_version())), std::string::npos);
}

TEST_F(Cli, MissingConfigNamesThePath) {
  const Result r = run("run --config " + (dir_ / "absent.json").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find((dir_ / "absent.json").string()), std::string::npos);
}

TEST_F(Cli, InvalidConfigExitsOne) {
  testing::write_file(dir_ / "bad.json", R"({"dataset": {"n_total": 7}})");
  EXPECT_EQ(run("run --config " + (dir_ / "bad.json").string()).code, 1);
}

TEST_F(Cli, ConfigPrintsResolvedJsonAndSchema) {
  const Result r = run("config --seed 42");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(parse_experiment_config(r.out).seed, 42u);
  const Result s = run("config --schema");
  EXPECT_EQ(s.code, 0);
  EXPECT_EQ(s.out, std::string(experiment_config_schema()));
}

TEST_F(Cli, RunThenSingleAttack) {
  const fs::path out = dir_ / "out";
  const std::string common = " --config " + tiny_config().string() + " --out " + out.string();
  ASSERT_EQ(run("run" + common + " --seed 7").code, 0);
  const RunManifest m = parse_manifest(testing::read_file(out / kManifestFile));
  EXPECT_TRUE(m.complete);
  EXPECT_EQ(m.seed, 7u);

  const std::size_t before = parse_asp_csv(testing::read_file(out / kAspFile)).size();
  const Result a = run("attack --psr -3 --scope hybrid --seed 7" + common);
  EXPECT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(parse_asp_csv(testing::read_file(out / kAspFile)).size(), before + 2);

  EXPECT_EQ(run("attack --psr -3" + common).code, 1);
  EXPECT_EQ(run("attack --psr -3 --scope hybrid --kind targeted --seed 7" + common).code, 1);
  EXPECT_EQ(run("attack --psr -3 --scope hybrid --kind targeted --targets 0 0 --seed 7" + common).code, 0);
  // No multi-task model in single mode: a runtime failure, not a usage one.
  EXPECT_EQ(run("attack --psr -3 --scope multitask --seed 7" + common).code, 2);
}

TEST_F(Cli, StageWithoutInputsExitsTwo) {
  const Result r = run("train --config " + tiny_config().string() + " --out " + (dir_ / "empty").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("train"), std::string::npos);
}

TEST_F(Cli, ConvertsRawCaptures) {
  std::vector<float> raw(3 * 64, 0.25f);
  std::string bytes(raw.size() * 4, '\0');
  std::memcpy(bytes.data(), raw.data(), bytes.size());
  testing::write_file(dir_ / "cap.f32", bytes);
  const fs::path dest = dir_ / "conv.iq";
  const std::string base = "gen-data --from-raw-f32 " + (dir_ / "cap.f32").string() + " --dataset-out " + dest.string();
  ASSERT_EQ(run(base + " --device 2 --authenticity rogue").code, 0);
  ASSERT_EQ(run(base + " --append").code, 0);
  const Dataset ds = load_dataset(dest);
  EXPECT_EQ(ds.size(), 6u);
  EXPECT_EQ(ds.meta.cell_counts[cell_index(Device::Device2, Authenticity::Rogue)], 3u);
  EXPECT_EQ(ds.meta.cell_counts[cell_index(Device::Device1, Authenticity::Legitimate)], 3u);
  EXPECT_EQ(run("gen-data --device 2").code, 1);
  EXPECT_EQ(run("gen-data --from-raw-f32 " + (dir_ / "nope.f32").string()).code, 1);
}

}  // namespace
}  // namespace advsec
