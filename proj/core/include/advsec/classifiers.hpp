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

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "advsec/adam.hpp"
#include "advsec/dataset.hpp"
#include "advsec/network.hpp"

namespace advsec {

enum class Arch { CNN, FNN };

std::string_view arch_name(Arch arch);        // "cnn" / "fnn"
Arch parse_arch(std::string_view name);
std::string_view task_name(TaskId task);      // "task1" / "task2"
TaskId parse_task(std::string_view name);

/// Two-class classifier stacks on (2, 32) input.
///   CNN: Conv2D(32, 1x3, relu, full) Flatten Dense32 Drop.1 Dense8 Drop.1 Dense2-softmax
///   FNN: Dense64 Drop.1 Dense32 Drop.1 Dense8 Drop.1 Dense2-softmax
std::vector<LayerSpec> architecture_layers(Arch arch);

/// The same stack cut after its first layer: shared trunk plus one head.
struct MultiTaskLayers {
  std::vector<LayerSpec> shared;
  std::vector<LayerSpec> head;
};
MultiTaskLayers multitask_layers(Arch arch);

/// Per-task weights of the joint loss; both in [0, 1], summing to 1.
struct TaskWeights {
  double first = 0.5;
  double second = 0.5;

  void validate() const;
};

struct SingleTaskModel {
  Arch arch = Arch::CNN;
  TaskId task = TaskId::Device;
  Network net;
};

/// Shared first layer feeding two heads; head1 reads the device label,
/// head2 the authenticity label.
struct MultiTaskModel {
  Arch arch = Arch::CNN;
  Network shared;
  Network head1;
  Network head2;
  TaskWeights weights;

  std::size_t parameter_count() const;
  const Network& head(TaskId task) const { return task == TaskId::Device ? head1 : head2; }
};

SingleTaskModel build_single(Arch arch, TaskId task, std::uint64_t seed);
MultiTaskModel build_multitask(Arch arch, std::uint64_t seed, TaskWeights weights = {});

struct MultiTaskOutput {
  Tensor probs1;
  Tensor probs2;
};

/// Eval-mode class probabilities of both heads.
MultiTaskOutput multitask_forward(const MultiTaskModel& model, const Tensor& batch);

struct MultiTaskBackward {
  Gradients shared;
  Gradients head1;
  Gradients head2;
  double loss1 = 0.0;  // mean cross-entropy of head 1
  double loss2 = 0.0;
};

/// Forward and backward through both heads with logit gradients
/// coef1 * (p1 - y1) and coef2 * (p2 - y2). The gradients that reach the
/// shared trunk are summed before its backward pass.
MultiTaskBackward multitask_backward(const MultiTaskModel& model, const Tensor& batch,
                                     std::span<const int> y1, std::span<const int> y2, double coef1,
                                     double coef2, Mode mode, Rng* rng, BackwardOptions options = {});

/// Per-sample input gradient of gamma1 * L1 + gamma2 * L2 (Eval mode).
Tensor multitask_input_gradient(const MultiTaskModel& model, const Tensor& batch, std::span<const int> y1,
                                std::span<const int> y2, TaskWeights gamma);

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  AdamHyper adam;
  std::uint64_t seed = 0;
  TaskWeights weights;               // multi-task only
  double validation_fraction = 0.1;  // carved from the training split for checkpoint selection
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double validation_score = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_validation_score = 0.0;
};

struct MultiTaskStep {
  double loss1 = 0.0;
  double loss2 = 0.0;
  double joint = 0.0;
};

struct MultiTaskEpochRecord {
  std::size_t epoch = 0;
  double loss1 = 0.0;
  double loss2 = 0.0;
  double joint = 0.0;
  double validation_score = 0.0;
};

struct MultiTaskHistory {
  std::vector<MultiTaskEpochRecord> epochs;
  std::vector<MultiTaskStep> steps;
  std::size_t best_epoch = 0;
  double best_validation_score = 0.0;
};

/// Optional customisation points, used by adversarial training.
struct SingleTrainHooks {
  /// May append rows to the clean batch before the update.
  std::function<void(const SingleTaskModel&, Tensor&, std::vector<int>&)> augment_batch;
  /// Score used to pick the kept epoch; defaults to validation accuracy.
  std::function<double(const SingleTaskModel&, const Dataset&)> validation_score;
};

struct MultiTaskTrainHooks {
  std::function<void(const MultiTaskModel&, Tensor&, std::vector<int>&, std::vector<int>&)> augment_batch;
  std::function<double(const MultiTaskModel&, const Dataset&)> validation_score;
};

/// Adam on the mean cross-entropy for cfg.epochs. The parameters kept at
/// the end are those of the epoch with the highest validation score
/// (latest epoch on ties).
TrainHistory train_single(SingleTaskModel& model, const Dataset& train, const TrainConfig& cfg,
                          const SingleTrainHooks& hooks = {});

/// One Adam optimisation of w1 * L1 + w2 * L2 over shared and both heads.
/// Selection score is the mean of the two heads' validation accuracies.
MultiTaskHistory train_multitask(MultiTaskModel& model, const Dataset& train, const TrainConfig& cfg,
                                 const MultiTaskTrainHooks& hooks = {});

/// Overall accuracy and per-class conditional accuracies. A class with no
/// samples has conditional accuracy NaN.
struct Metrics {
  double overall = 0.0;
  std::array<double, 2> conditional{};
  std::array<std::size_t, 2> support{};
  std::size_t total = 0;
};

Metrics compute_metrics(std::span<const int> predicted, std::span<const int> truth);

/// Eval-mode argmax predictions, evaluated in parallel chunks.
std::vector<int> predict(const Network& net, const Tensor& batch);
std::array<std::vector<int>, 2> predict(const MultiTaskModel& model, const Tensor& batch);

Metrics evaluate(const SingleTaskModel& model, const Dataset& test);
std::array<Metrics, 2> evaluate(const MultiTaskModel& model, const Dataset& test);

/// Metrics on the legitimate-only or rogue-only part of the test set.
Metrics evaluate_subset(const SingleTaskModel& model, const Dataset& test, Subset subset);
std::array<Metrics, 2> evaluate_subset(const MultiTaskModel& model, const Dataset& test, Subset subset);

void save_single(const SingleTaskModel& model, const std::filesystem::path& path);
SingleTaskModel load_single(const std::filesystem::path& path);

/// Writes a JSON manifest at `path` plus three parameter blocks beside it
/// (<stem>.shared.lann, <stem>.head1.lann, <stem>.head2.lann).
void save_multitask(const MultiTaskModel& model, const std::filesystem::path& path);
MultiTaskModel load_multitask(const std::filesystem::path& path);

}  // namespace advsec
