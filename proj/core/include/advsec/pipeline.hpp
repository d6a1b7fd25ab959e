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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "advsec/defense.hpp"

namespace advsec {

std::string_view library_version();

enum class RunMode { Single, MultiTask, Both };

std::string_view mode_name(RunMode mode);

struct DatasetPlan {
  /// Existing dataset file; when set, gen-data and spoof are skipped.
  std::optional<std::filesystem::path> path;
  GeneratorConfig generator;
  double train_fraction = 0.8;
};

/// An attack family to sweep over the PSR grid.
struct AttackPlan {
  AttackKind kind = AttackKind::Untargeted;
  AttackScope scope = AttackScope::Classifier1;
  TaskWeights gamma;
  std::optional<AttackTargets> targets;
};

struct DefensePlan {
  bool enabled = true;
  double psr_db = -3.0;
  double ratio = 1.0;
  /// Scopes scored before/after; single-task scopes apply to the
  /// single-task pair, "multitask" to the multi-task model.
  std::vector<AttackScope> scopes{AttackScope::Classifier1, AttackScope::Hybrid, AttackScope::Classifier2,
                                  AttackScope::MultiTask};
};

struct ExperimentConfig {
  std::uint64_t seed = 7;
  std::filesystem::path output_dir = "out";
  DatasetPlan dataset;
  Arch arch = Arch::CNN;
  RunMode mode = RunMode::Both;
  TrainConfig train;  // train.seed is ignored; stages derive their own
  std::vector<AttackPlan> attacks;
  std::vector<double> psr_grid = default_psr_grid();
  bool gaussian_baseline = true;
  DefensePlan defense;

  bool wants_single() const { return mode != RunMode::MultiTask; }
  bool wants_multitask() const { return mode != RunMode::Single; }
};

/// Defaults plus the standard attack list: untargeted classifier1,
/// classifier2 and hybrid on the single-task pair, untargeted and
/// targeted (device 1, legitimate) multitask.
ExperimentConfig default_experiment_config();

/// Validates against the published schema and the cross-field rules,
/// then overlays the given keys on the defaults. Throws ConfigError with
/// every violation listed.
ExperimentConfig parse_experiment_config(std::string_view json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Fully resolved config as canonical JSON (every default spelled out).
std::string experiment_config_json(const ExperimentConfig& cfg);

/// The published JSON schema text.
std::string_view experiment_config_schema();

enum class StageStatus { Pending, Done, Skipped, Failed };

std::string_view status_name(StageStatus status);

struct StageRecord {
  std::string name;
  StageStatus status = StageStatus::Pending;
  std::map<std::string, std::string> inputs;   // relative path -> sha256
  std::map<std::string, std::string> outputs;  // relative path -> sha256
  std::string error;                           // failed stages only

  bool operator==(const StageRecord&) const = default;
};

/// Record of one run, written to <output_dir>/run_manifest.json. Contains
/// no timestamps so identical runs give identical manifests.
struct RunManifest {
  std::string version;
  std::uint64_t seed = 0;
  std::string config_json;  // resolved config
  bool complete = false;
  std::vector<StageRecord> stages;

  StageRecord* find(std::string_view stage);
  const StageRecord* find(std::string_view stage) const;
  bool operator==(const RunManifest&) const = default;
};

std::string manifest_json(const RunManifest& manifest);
RunManifest parse_manifest(std::string_view text);

inline constexpr std::string_view kManifestFile = "run_manifest.json";
inline constexpr std::string_view kAccuracyFile = "accuracy.csv";
inline constexpr std::string_view kAspFile = "asp_curves.csv";
inline constexpr std::string_view kDefenseFile = "defense.csv";

/// Stage names in execution order.
const std::vector<std::string>& stage_names();

/// Runs one stage against cfg.output_dir, reading earlier stages' files
/// from there, and records it in the manifest on disk. Throws StageError.
void run_stage(const ExperimentConfig& cfg, std::string_view stage);

/// All stages in order. On failure the manifest is left marked incomplete
/// and the StageError is rethrown.
RunManifest run_pipeline(const ExperimentConfig& cfg);

/// One attack family at the given PSR values against the saved models,
/// appended to asp_curves.csv: one FGSM row per victim task and PSR, no
/// Gaussian baseline. Returns the new rows.
AspCurve run_single_attack(const ExperimentConfig& cfg, const AttackPlan& plan, std::span<const double> psr_grid);

/// Overall and per-class metrics for one accuracy.csv row.
struct AccuracyRow {
  std::string block;  // task1_all, task1_legitimate, task1_rogue, task2_all
  Arch arch = Arch::CNN;
  RunMode mode = RunMode::Single;  // Single or MultiTask
  Metrics metrics;
};

inline constexpr std::string_view kAccuracyCsvHeader =
    "block,arch,mode,overall,class0,class1,support0,support1";

std::string accuracy_csv(const std::vector<AccuracyRow>& rows);
std::vector<AccuracyRow> parse_accuracy_csv(std::string_view text);

/// The four blocks for a single-task pair or a multi-task model.
std::vector<AccuracyRow> accuracy_rows(const SingleTaskModel& task1, const SingleTaskModel& task2,
                                       const Dataset& test);
std::vector<AccuracyRow> accuracy_rows(const MultiTaskModel& mtl, const Dataset& test);

}  // namespace advsec
