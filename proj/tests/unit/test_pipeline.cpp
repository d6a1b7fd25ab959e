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


#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "advsec/digest.hpp"
#include "advsec/error.hpp"
#include "advsec/pipeline.hpp"
#include "test_support.hpp"

namespace advsec {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kTiny = R"({
  "seed": 11,
  "dataset": {"n_total": 200},
  "model": {"arch": "fnn", "mode": "both"},
  "train": {"epochs": 2, "batch_size": 32},
  "psr_grid": [-10, -3, 0]
})";

ExperimentConfig tiny_config(const fs::path& out) {
  ExperimentConfig cfg = parse_experiment_config(kTiny);
  cfg.output_dir = out;
  return cfg;
}

std::string config_error(std::string_view text) {
  try {
    parse_experiment_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

// Relative path -> contents for every regular file below dir.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).generic_string()] = testing::read_file(e.path());
  }
  return files;
}

TEST(Config, DefaultsAndCanonicalRoundTrip) {
  const ExperimentConfig d = default_experiment_config();
  EXPECT_EQ(d.seed, 7u);
  EXPECT_EQ(d.arch, Arch::CNN);
  EXPECT_EQ(d.mode, RunMode::Both);
  EXPECT_EQ(d.train.epochs, 50u);
  EXPECT_EQ(d.dataset.generator.n_total, 5000u);
  EXPECT_EQ(d.psr_grid.size(), 21u);
  EXPECT_EQ(d.attacks.size(), 6u);
  const std::string text = experiment_config_json(d);
  EXPECT_EQ(experiment_config_json(parse_experiment_config(text)), text);
  EXPECT_EQ(experiment_config_json(parse_experiment_config("{}")), text);
}

TEST(Config, OverlayKeepsUnspecifiedDefaults) {
  const ExperimentConfig cfg = parse_experiment_config(kTiny);
  EXPECT_EQ(cfg.seed, 11u);
  EXPECT_EQ(cfg.arch, Arch::FNN);
  EXPECT_EQ(cfg.train.epochs, 2u);
  EXPECT_EQ(cfg.train.batch_size, 32u);
  EXPECT_EQ(cfg.train.adam.learning_rate, 1e-3);
  EXPECT_EQ(cfg.dataset.train_fraction, 0.8);
  EXPECT_EQ(cfg.psr_grid, (std::vector<double>{-10, -3, 0}));
}

TEST(Config, SingleModeDropsMultiTaskDefaults) {
  const ExperimentConfig cfg = parse_experiment_config(R"({"model": {"mode": "single"}})");
  for (const AttackPlan& a : cfg.attacks) EXPECT_NE(a.scope, AttackScope::MultiTask);
  for (AttackScope s : cfg.defense.scopes) EXPECT_NE(s, AttackScope::MultiTask);
  EXPECT_FALSE(cfg.wants_multitask());
}

TEST(Config, SchemaViolationsAreReported) {
  EXPECT_NE(config_error(R"({"sed": 1})").find("sed"), std::string::npos);
  EXPECT_NE(config_error(R"({"seed": "seven"})"), "");
  EXPECT_NE(config_error(R"({"seed": -1})"), "");
  EXPECT_NE(config_error(R"({"model": {"arch": "rnn"}})"), "");
  EXPECT_NE(config_error(R"({"train": {"epochs": 0}})"), "");
  EXPECT_NE(config_error(R"({"attacks": [{"kind": "untargeted"}]})"), "");
  EXPECT_NE(config_error("{"), "");
  EXPECT_NE(config_error("[]"), "");
}

TEST(Config, CrossFieldRules) {
  EXPECT_NE(config_error(R"({"dataset": {"n_total": 402}})").find("n_total"), std::string::npos);
  EXPECT_NE(config_error(R"({"train": {"task_weights": [0.6, 0.6]}})"), "");
  EXPECT_NE(config_error(R"({"attacks": [{"scope": "hybrid", "kind": "untargeted", "targets": [0, 0]}]})"), "");
  EXPECT_NE(config_error(R"({"attacks": [{"scope": "hybrid", "kind": "targeted"}]})"), "");
  EXPECT_NE(config_error(R"({"model": {"mode": "single"}, "attacks": [{"scope": "multitask"}]})"), "");
  EXPECT_NE(config_error(R"({"model": {"mode": "single"}, "defense": {"scopes": ["multitask"]}})"), "");
  // Several problems at once are all listed.
  const std::string both = config_error(R"({"dataset": {"n_total": 402}, "train": {"task_weights": [0.6, 0.6]}})");
  EXPECT_NE(both.find("n_total"), std::string::npos);
  EXPECT_NE(both.find("weight"), std::string::npos);
}

TEST(Config, MissingFileNamesThePath) {
  try {
    load_experiment_config("/nonexistent/dir/cfg.json");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/cfg.json"), std::string::npos);
  }
}

TEST(Config, PublishedSchemaIsJson) {
  const json schema = json::parse(experiment_config_schema());
  EXPECT_EQ(schema.at("type"), "object");
  EXPECT_TRUE(schema.at("properties").contains("defense"));
  EXPECT_TRUE(schema.contains("$defs"));
}

TEST(Manifest, RoundTrip) {
  RunManifest m;
  m.version = "1.2.3";
  m.seed = 99;
  m.config_json = R"({"a":1})";
  m.complete = true;
  StageRecord s;
  s.name = "train";
  s.status = StageStatus::Failed;
  s.inputs["data/dataset.iq"] = sha256_hex("x");
  s.error = "boom";
  m.stages = {s};
  EXPECT_EQ(parse_manifest(manifest_json(m)), m);
  EXPECT_THROW(parse_manifest("{}"), FormatError);
  EXPECT_THROW(parse_manifest(R"({"version":"1","seed":1,"complete":false,"config":{},
      "stages":[{"name":"x","status":"odd","inputs":{},"outputs":{}}]})"),
               FormatError);
}

TEST(AccuracyCsv, RoundTripWithNan) {
  Metrics m;
  m.overall = 0.5;
  m.conditional = {1.0, std::nan("")};
  m.support = {4, 0};
  m.total = 4;
  const std::vector<AccuracyRow> rows{{"task1_all", Arch::CNN, RunMode::Single, m},
                                      {"task2_all", Arch::FNN, RunMode::MultiTask, m}};
  const std::string text = accuracy_csv(rows);
  EXPECT_NE(text.find(",nan,"), std::string::npos);
  const auto back = parse_accuracy_csv(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].block, "task2_all");
  EXPECT_EQ(back[1].mode, RunMode::MultiTask);
  EXPECT_TRUE(std::isnan(back[0].metrics.conditional[1]));
  EXPECT_EQ(accuracy_csv(back), text);
  EXPECT_THROW(parse_accuracy_csv("bad\n"), FormatError);
}

TEST(Digest, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_u64("abc"), 0xba7816bf8f01cfeaull);
}

class PipelineRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir();
    manifest_ = new RunManifest(run_pipeline(tiny_config(dir_->path() / "a")));
  }
  static void TearDownTestSuite() {
    delete manifest_;
    delete dir_;
  }
  static fs::path out() { return dir_->path() / "a"; }

  static testing::TempDir* dir_;
  static RunManifest* manifest_;
};

testing::TempDir* PipelineRun::dir_ = nullptr;
RunManifest* PipelineRun::manifest_ = nullptr;

TEST_F(PipelineRun, ManifestRecordsEveryStage) {
  EXPECT_TRUE(manifest_->complete);
  EXPECT_EQ(manifest_->seed, 11u);
  EXPECT_EQ(manifest_->version, library_version());
  ASSERT_EQ(manifest_->stages.size(), stage_names().size());
  for (std::size_t i = 0; i < stage_names().size(); ++i) {
    EXPECT_EQ(manifest_->stages[i].name, stage_names()[i]);
    EXPECT_EQ(manifest_->stages[i].status, StageStatus::Done);
  }
  EXPECT_EQ(parse_manifest(testing::read_file(out() / kManifestFile)), *manifest_);
  // Recorded digests match the files on disk.
  for (const StageRecord& s : manifest_->stages) {
    for (const auto& [rel, digest] : s.outputs) EXPECT_EQ(sha256_file(out() / rel), digest) << rel;
  }
}

TEST_F(PipelineRun, ReportsHaveExpectedStructure) {
  const auto acc = parse_accuracy_csv(testing::read_file(out() / kAccuracyFile));
  ASSERT_EQ(acc.size(), 8u);
  const std::vector<std::string> blocks{"task1_all", "task1_legitimate", "task1_rogue", "task2_all"};
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(acc[i].block, blocks[i % 4]);
    EXPECT_EQ(acc[i].mode, i < 4 ? RunMode::Single : RunMode::MultiTask);
  }
  const auto asp = parse_asp_csv(testing::read_file(out() / kAspFile));
  // 6 attacks x 3 PSR values x (FGSM, Gaussian) x 2 tasks.
  EXPECT_EQ(asp.size(), 6u * 3u * 2u * 2u);
  const auto def = parse_defense_csv(testing::read_file(out() / kDefenseFile));
  EXPECT_EQ(def.size(), 8u);
  EXPECT_TRUE(fs::exists(out() / "training.csv"));
}

TEST_F(PipelineRun, ReportStageReproducesInRunReport) {
  const std::string before = testing::read_file(out() / kAccuracyFile);
  fs::remove(out() / kAccuracyFile);
  run_stage(tiny_config(out()), "report");
  EXPECT_EQ(testing::read_file(out() / kAccuracyFile), before);
}

TEST(PipelineDeterminism, SameConfigGivesByteIdenticalOutputs) {
  // Both runs use the same output path so the recorded configs agree too.
  testing::TempDir dir;
  const ExperimentConfig cfg = tiny_config(dir / "run");
  run_pipeline(cfg);
  fs::rename(dir / "run", dir / "first");
  run_pipeline(cfg);
  const auto a = snapshot(dir / "first"), b = snapshot(dir / "run");
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [rel, bytes] : a) {
    ASSERT_TRUE(b.count(rel)) << rel;
    EXPECT_TRUE(b.at(rel) == bytes) << rel;
  }
}

TEST_F(PipelineRun, SingleAttackAppendsOneRowPerTask) {
  const fs::path copy = dir_->path() / "attack";
  fs::copy(out(), copy, fs::copy_options::recursive);
  const std::size_t before = parse_asp_csv(testing::read_file(copy / kAspFile)).size();
  AttackPlan plan;
  plan.scope = AttackScope::Hybrid;
  const std::vector<double> grid{-3.0};
  const AspCurve rows = run_single_attack(tiny_config(copy), plan, grid);
  EXPECT_EQ(rows.rows.size(), 2u);
  EXPECT_EQ(parse_asp_csv(testing::read_file(copy / kAspFile)).size(), before + 2);
}

TEST_F(PipelineRun, ExternalDatasetSkipsGeneration) {
  ExperimentConfig cfg = tiny_config(dir_->path() / "external");
  cfg.mode = RunMode::Single;
  cfg.attacks.resize(1);
  cfg.defense.enabled = false;
  cfg.dataset.path = out() / "data" / "dataset.iq";
  const RunManifest m = run_pipeline(cfg);
  EXPECT_TRUE(m.complete);
  const StageRecord* gen = m.find("gen-data");
  ASSERT_NE(gen, nullptr);
  EXPECT_EQ(gen->status, StageStatus::Skipped);
  EXPECT_EQ(m.find("spoof")->status, StageStatus::Skipped);
  EXPECT_EQ(gen->inputs.begin()->second, sha256_file(*cfg.dataset.path));
  EXPECT_FALSE(fs::exists(cfg.output_dir / "data" / "legitimate.iq"));
  EXPECT_EQ(parse_accuracy_csv(testing::read_file(cfg.output_dir / kAccuracyFile)).size(), 4u);
}

TEST(PipelineFailure, StageErrorMarksManifestIncomplete) {
  testing::TempDir dir;
  testing::write_file(dir / "broken.iq", "LORAIQ01 not really");
  ExperimentConfig cfg = tiny_config(dir / "out");
  cfg.dataset.path = dir / "broken.iq";
  try {
    run_pipeline(cfg);
    FAIL() << "expected StageError";
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "train");
  }
  const RunManifest m = parse_manifest(testing::read_file(dir / "out" / kManifestFile));
  EXPECT_FALSE(m.complete);
  EXPECT_EQ(m.find("train")->status, StageStatus::Failed);
  EXPECT_FALSE(m.find("train")->error.empty());
  EXPECT_EQ(m.find("attack")->status, StageStatus::Pending);
}

TEST(PipelineFailure, UnknownStageIsRejected) {
  testing::TempDir dir;
  EXPECT_THROW(run_stage(tiny_config(dir.path()), "bake"), ConfigError);
}

}  // namespace
}  // namespace advsec
