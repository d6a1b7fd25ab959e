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
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "advsec/classifiers.hpp"

namespace advsec {

enum class AttackKind { Untargeted, Targeted };

/// Which gradient the perturbation is built from.
///   Classifier1 / Classifier2: one single-task model (head 1 / head 2 of a
///   multi-task model). Hybrid: gamma-weighted sum over both classifiers.
///   MultiTask: gamma-weighted sum through a shared trunk.
enum class AttackScope { Classifier1, Classifier2, Hybrid, MultiTask };

std::string_view kind_name(AttackKind kind);
AttackKind parse_kind(std::string_view name);
std::string_view scope_name(AttackScope scope);
AttackScope parse_scope(std::string_view name);

struct AttackTargets {
  int task1 = 0;  // target device label
  int task2 = 0;  // target authenticity label
};

struct AttackSpec {
  AttackKind kind = AttackKind::Untargeted;
  AttackScope scope = AttackScope::Classifier1;
  TaskWeights gamma;
  double psr_db = -3.0;
  std::optional<AttackTargets> targets;  // present iff kind == Targeted
  double clamp_bound = std::numeric_limits<double>::infinity();

  void validate() const;
};

/// delta has the shape of the attacked batch.
struct Perturbation {
  Tensor delta;
  double epsilon = 0.0;
};

/// eps = sqrt(mean_power * 10^(psr_db / 10)). Throws ConfigError unless
/// mean_power > 0.
double psr_to_epsilon(double psr_db, double mean_power);

/// Component-wise sign with sign(0) = 0, times eps.
Tensor scaled_sign(const Tensor& gradient, double eps);

// All FGSM constructions below take a batch (n, 2, 32) with one label per
// row and evaluate gradients in Eval mode.

Perturbation fgsm_untargeted(const Network& model, const Tensor& x, std::span<const int> y, double eps);
Perturbation fgsm_targeted(const Network& model, const Tensor& x, std::span<const int> y_target, double eps);

/// eps * sign(gamma1 * grad L1 + gamma2 * grad L2) over two separate models.
Perturbation fgsm_hybrid(const Network& model1, const Network& model2, const Tensor& x, std::span<const int> y1,
                         std::span<const int> y2, TaskWeights gamma, double eps);

/// Negated hybrid step towards (t1, t2).
Perturbation fgsm_hybrid_targeted(const Network& model1, const Network& model2, const Tensor& x,
                                  std::span<const int> t1, std::span<const int> t2, TaskWeights gamma,
                                  double eps);

Perturbation fgsm_multitask_untargeted(const MultiTaskModel& mtl, const Tensor& x, std::span<const int> y1,
                                       std::span<const int> y2, TaskWeights gamma, double eps);
Perturbation fgsm_multitask_targeted(const MultiTaskModel& mtl, const Tensor& x, std::span<const int> t1,
                                     std::span<const int> t2, TaskWeights gamma, double eps);

/// i.i.d. N(0, eps^2) per component.
Perturbation gaussian_baseline(const Shape& shape, double eps, Rng& rng);

/// clamp(x + delta, -bound, +bound). Throws ConfigError unless bound > 0.
Tensor apply_and_clamp(const Tensor& x, const Tensor& delta, double bound);

/// One ASP value: perturbation family `scope`/`kind` built at `psr_db` and
/// scored against the classifier of `task`.
struct AspRow {
  double psr_db = 0.0;
  AttackScope scope = AttackScope::Classifier1;
  AttackKind kind = AttackKind::Untargeted;
  TaskId task = TaskId::Device;
  double asp = 0.0;
  bool baseline = false;  // Gaussian noise of equal power instead of FGSM

  bool operator==(const AspRow&) const = default;
};

struct AspCurve {
  std::vector<AspRow> rows;
};

struct AspOptions {
  bool include_baseline = true;
  std::uint64_t seed = 0;  // Gaussian baseline substreams
  /// Per-component signal power defining PSR; computed from the test set
  /// when not given.
  std::optional<double> mean_power;
};

/// -20 .. 0 dB in 1 dB steps.
std::vector<double> default_psr_grid();

/// Untargeted ASP: fraction of all samples whose perturbed prediction
/// differs from the true label. Targeted ASP: among samples whose true
/// label differs from the target, the fraction predicted as the target.
/// Throws DataError when a targeted evaluation has no eligible sample.
double attack_success(std::span<const int> predicted, std::span<const int> truth, AttackKind kind, int target);

/// ASP of the perturbation family in `spec` against both single-task
/// classifiers (one row per victim task, per PSR, per FGSM/baseline).
AspCurve evaluate_asp(const SingleTaskModel& classifier1, const SingleTaskModel& classifier2, const Dataset& test,
                      const AttackSpec& spec, std::span<const double> psr_grid, const AspOptions& options = {});

/// Same against both heads of a multi-task model. Classifier1/Classifier2
/// scopes use gamma (1, 0) / (0, 1); Hybrid and MultiTask use spec.gamma.
AspCurve evaluate_asp(const MultiTaskModel& mtl, const Dataset& test, const AttackSpec& spec,
                      std::span<const double> psr_grid, const AspOptions& options = {});

inline constexpr std::string_view kAspCsvHeader = "psr_db,scope,kind,task,asp,baseline";

std::string asp_csv_row(const AspRow& row);
std::string asp_csv(const AspCurve& curve);  // header plus rows
std::vector<AspRow> parse_asp_csv(std::string_view text);

/// Appends rows, writing the header first when the file is new or empty.
void append_asp_csv(const std::filesystem::path& path, const AspCurve& curve);

}  // namespace advsec
