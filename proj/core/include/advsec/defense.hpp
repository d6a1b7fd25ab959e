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

#include <string>
#include <string_view>
#include <vector>

#include "advsec/attacks.hpp"

namespace advsec {

struct DefenseConfig {
  /// Augmentation attack. Only untargeted FGSM is used; its psr_db,
  /// clamp_bound and gamma (multi-task) apply, scope and targets do not.
  AttackSpec attack;
  /// Adversarial rows per clean row in each batch.
  double ratio = 1.0;
  /// Reference power turning attack.psr_db into epsilon.
  double mean_power = 0.0;
  TrainConfig train;

  void validate() const;
};

/// Trains `model` (normally freshly built from the baseline's seed) on
/// batches extended with FGSM copies computed against the current
/// parameters. Epoch selection scores the mean of clean and adversarial
/// validation accuracy.
TrainHistory adversarial_training(SingleTaskModel& model, const Dataset& train, const DefenseConfig& cfg);
MultiTaskHistory adversarial_training(MultiTaskModel& model, const Dataset& train, const DefenseConfig& cfg);

struct DefenseRow {
  AttackScope scope = AttackScope::Classifier1;
  TaskId task = TaskId::Device;
  double asp_before = 0.0;
  double asp_after = 0.0;
  double clean_accuracy = 0.0;  // robust model, unperturbed test set

  bool operator==(const DefenseRow&) const = default;
};

struct DefenseReport {
  std::vector<DefenseRow> rows;
};

/// ASP of attack.scope at attack.psr_db before (baseline models) and after
/// (robust models) the defense, one row per victim task. Perturbations are
/// always regenerated against the models being scored.
DefenseReport evaluate_defense(const SingleTaskModel& robust1, const SingleTaskModel& robust2,
                               const SingleTaskModel& baseline1, const SingleTaskModel& baseline2,
                               const Dataset& test, const AttackSpec& attack, const AspOptions& options = {});
DefenseReport evaluate_defense(const MultiTaskModel& robust, const MultiTaskModel& baseline, const Dataset& test,
                               const AttackSpec& attack, const AspOptions& options = {});

inline constexpr std::string_view kDefenseCsvHeader = "scope,asp_before,asp_after,clean_accuracy";

/// The scope cell reads "<scope>/<task>", e.g. "hybrid/task1".
std::string defense_csv(const DefenseReport& report);
std::vector<DefenseRow> parse_defense_csv(std::string_view text);

}  // namespace advsec
