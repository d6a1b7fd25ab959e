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

#include "advsec/classifiers.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "advsec/checkpoint.hpp"
#include "advsec/digest.hpp"
#include "advsec/error.hpp"
#include "advsec/parallel.hpp"
#include "binary_io.hpp"

namespace advsec {
namespace {

constexpr std::size_t kEvalChunk = 256;

const Shape kInputShape{kIqRows, kIqLength};

/// Rows of x selected by idx, as a new batch.
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> idx) {
  Shape s = x.shape();
  s[0] = idx.size();
  Tensor out(std::move(s));
  const std::size_t row = x.row_size();
  for (std::size_t k = 0; k < idx.size(); ++k) {
    std::copy_n(x.raw() + idx[k] * row, row, out.raw() + k * row);
  }
  return out;
}

std::vector<int> gather_labels(std::span<const int> y, std::span<const std::size_t> idx) {
  std::vector<int> out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out[k] = y[idx[k]];
  return out;
}

void require_both_classes(std::span<const int> y, const char* what) {
  bool seen[2] = {false, false};
  for (int v : y) seen[v] = true;
  if (!seen[0] || !seen[1]) {
    throw DataError(std::string(what) + ": training data covers only one class");
  }
}

/// Splits train into (fit, validation) for checkpoint selection.
std::pair<Dataset, Dataset> carve_validation(const Dataset& train, const TrainConfig& cfg) {
  if (cfg.validation_fraction <= 0.0) return {train, Dataset{}};
  if (cfg.validation_fraction >= 1.0) throw ConfigError("validation fraction must be below 1");
  return split(train, 1.0 - cfg.validation_fraction, derive_seed(cfg.seed, "validation"));
}

void validate_train_config(const TrainConfig& cfg) {
  if (cfg.epochs == 0) throw ConfigError("epochs must be at least 1");
  if (cfg.batch_size == 0) throw ConfigError("batch size must be at least 1");
}

}  // namespace

std::string_view arch_name(Arch arch) { return arch == Arch::CNN ? "cnn" : "fnn"; }

Arch parse_arch(std::string_view name) {
  if (name == "cnn" || name == "CNN") return Arch::CNN;
  if (name == "fnn" || name == "FNN") return Arch::FNN;
  throw ConfigError("unknown architecture '" + std::string(name) + "' (expected cnn or fnn)");
}

std::string_view task_name(TaskId task) { return task == TaskId::Device ? "task1" : "task2"; }

TaskId parse_task(std::string_view name) {
  if (name == "task1" || name == "1" || name == "device") return TaskId::Device;
  if (name == "task2" || name == "2" || name == "authenticity") return TaskId::Authenticity;
  throw ConfigError("unknown task '" + std::string(name) + "' (expected task1 or task2)");
}

std::vector<LayerSpec> architecture_layers(Arch arch) {
  if (arch == Arch::CNN) {
    return {Conv2DSpec{32, 1, 3, Activation::ReLU, Padding::Full},
            FlattenSpec{},
            DenseSpec{32, Activation::ReLU},
            DropoutSpec{0.1},
            DenseSpec{8, Activation::ReLU},
            DropoutSpec{0.1},
            DenseSpec{2, Activation::SoftMax}};
  }
  return {DenseSpec{64, Activation::ReLU}, DropoutSpec{0.1}, DenseSpec{32, Activation::ReLU}, DropoutSpec{0.1},
          DenseSpec{8, Activation::ReLU},  DropoutSpec{0.1}, DenseSpec{2, Activation::SoftMax}};
}

MultiTaskLayers multitask_layers(Arch arch) {
  std::vector<LayerSpec> all = architecture_layers(arch);
  MultiTaskLayers out;
  out.shared.push_back(all.front());
  out.head.assign(all.begin() + 1, all.end());
  return out;
}

void TaskWeights::validate() const {
  if (!(first >= 0.0 && first <= 1.0 && second >= 0.0 && second <= 1.0) ||
      std::abs(first + second - 1.0) > 1e-12) {
    throw ConfigError("task weights must lie in [0, 1] and sum to 1");
  }
}

std::size_t MultiTaskModel::parameter_count() const {
  return count_parameters(shared) + count_parameters(head1) + count_parameters(head2);
}

SingleTaskModel build_single(Arch arch, TaskId task, std::uint64_t seed) {
  return SingleTaskModel{arch, task, Network::init(architecture_layers(arch), kInputShape, seed)};
}

MultiTaskModel build_multitask(Arch arch, std::uint64_t seed, TaskWeights weights) {
  weights.validate();
  MultiTaskLayers layers = multitask_layers(arch);
  MultiTaskModel m;
  m.arch = arch;
  m.weights = weights;
  m.shared = Network::init(layers.shared, kInputShape, derive_seed(seed, "shared"));
  m.head1 = Network::init(layers.head, m.shared.output_shape(), derive_seed(seed, "head1"));
  m.head2 = Network::init(layers.head, m.shared.output_shape(), derive_seed(seed, "head2"));
  return m;
}

MultiTaskOutput multitask_forward(const MultiTaskModel& model, const Tensor& batch) {
  const Tensor h = model.shared.forward(batch, Mode::Eval);
  return {model.head1.forward(h, Mode::Eval), model.head2.forward(h, Mode::Eval)};
}

MultiTaskBackward multitask_backward(const MultiTaskModel& model, const Tensor& batch, std::span<const int> y1,
                                     std::span<const int> y2, double coef1, double coef2, Mode mode, Rng* rng,
                                     BackwardOptions options) {
  const ForwardTrace shared_trace = model.shared.forward_trace(batch, mode, rng);
  const Tensor& h = shared_trace.output();
  const ForwardTrace t1 = model.head1.forward_trace(h, mode, rng);
  const ForwardTrace t2 = model.head2.forward_trace(h, mode, rng);
  MultiTaskBackward out;
  out.loss1 = cross_entropy(t1.output(), y1);
  out.loss2 = cross_entropy(t2.output(), y2);
  const BackwardOptions head_opts{.parameters = options.parameters, .input = true};
  out.head1 = model.head1.backward(t1, softmax_cross_entropy_grad(t1.output(), y1, coef1), head_opts);
  out.head2 = model.head2.backward(t2, softmax_cross_entropy_grad(t2.output(), y2, coef2), head_opts);
  Tensor dh = out.head1.input;
  dh += out.head2.input;
  out.shared = model.shared.backward(shared_trace, dh, options);
  return out;
}

Tensor multitask_input_gradient(const MultiTaskModel& model, const Tensor& batch, std::span<const int> y1,
                                std::span<const int> y2, TaskWeights gamma) {
  return std::move(multitask_backward(model, batch, y1, y2, gamma.first, gamma.second, Mode::Eval, nullptr,
                                      {.parameters = false, .input = true})
                       .shared.input);
}

Metrics compute_metrics(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) throw ConfigError("compute_metrics: length mismatch");
  if (truth.empty()) throw DataError("compute_metrics: no samples");
  Metrics m;
  std::array<std::size_t, 2> correct{};
  std::size_t all_correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto c = static_cast<std::size_t>(truth[i]);
    ++m.support[c];
    if (predicted[i] == truth[i]) {
      ++correct[c];
      ++all_correct;
    }
  }
  m.total = truth.size();
  m.overall = static_cast<double>(all_correct) / static_cast<double>(m.total);
  for (std::size_t c = 0; c < 2; ++c) {
    m.conditional[c] = m.support[c] == 0 ? std::numeric_limits<double>::quiet_NaN()
                                         : static_cast<double>(correct[c]) / static_cast<double>(m.support[c]);
  }
  return m;
}

std::vector<int> predict(const Network& net, const Tensor& batch) {
  std::vector<int> out(batch.dim(0));
  parallel_chunks(batch.dim(0), kEvalChunk, [&](std::size_t begin, std::size_t end) {
    const std::vector<int> p = argmax_rows(net.forward(batch.slice_rows(begin, end), Mode::Eval));
    std::copy(p.begin(), p.end(), out.begin() + static_cast<std::ptrdiff_t>(begin));
  });
  return out;
}

std::array<std::vector<int>, 2> predict(const MultiTaskModel& model, const Tensor& batch) {
  std::array<std::vector<int>, 2> out{std::vector<int>(batch.dim(0)), std::vector<int>(batch.dim(0))};
  parallel_chunks(batch.dim(0), kEvalChunk, [&](std::size_t begin, std::size_t end) {
    const MultiTaskOutput o = multitask_forward(model, batch.slice_rows(begin, end));
    const std::vector<int> p1 = argmax_rows(o.probs1);
    const std::vector<int> p2 = argmax_rows(o.probs2);
    std::copy(p1.begin(), p1.end(), out[0].begin() + static_cast<std::ptrdiff_t>(begin));
    std::copy(p2.begin(), p2.end(), out[1].begin() + static_cast<std::ptrdiff_t>(begin));
  });
  return out;
}

Metrics evaluate(const SingleTaskModel& model, const Dataset& test) {
  if (test.empty()) throw DataError("evaluate: empty test set");
  return compute_metrics(predict(model.net, to_tensor(test)), labels(test, model.task));
}

std::array<Metrics, 2> evaluate(const MultiTaskModel& model, const Dataset& test) {
  if (test.empty()) throw DataError("evaluate: empty test set");
  const auto p = predict(model, to_tensor(test));
  return {compute_metrics(p[0], labels(test, TaskId::Device)),
          compute_metrics(p[1], labels(test, TaskId::Authenticity))};
}

Metrics evaluate_subset(const SingleTaskModel& model, const Dataset& test, Subset subset) {
  const Dataset part = filter(test, subset);
  if (part.empty()) throw DataError("evaluate_subset: filter leaves no samples");
  return evaluate(model, part);
}

std::array<Metrics, 2> evaluate_subset(const MultiTaskModel& model, const Dataset& test, Subset subset) {
  const Dataset part = filter(test, subset);
  if (part.empty()) throw DataError("evaluate_subset: filter leaves no samples");
  return evaluate(model, part);
}

TrainHistory train_single(SingleTaskModel& model, const Dataset& train, const TrainConfig& cfg,
                          const SingleTrainHooks& hooks) {
  validate_train_config(cfg);
  if (train.empty()) throw DataError("train_single: empty training set");
  const std::vector<int> all_labels = labels(train, model.task);
  require_both_classes(all_labels, "train_single");

  const auto [fit, validation] = carve_validation(train, cfg);
  const Tensor x = to_tensor(fit);
  const std::vector<int> y = labels(fit, model.task);
  require_both_classes(y, "train_single");

  auto score = [&](const SingleTaskModel& m) {
    if (hooks.validation_score) return hooks.validation_score(m, validation);
    return evaluate(m, validation).overall;
  };

  Rng order(derive_seed(cfg.seed, "shuffle"));
  Rng dropout(derive_seed(cfg.seed, "dropout"));
  AdamState adam = AdamState::for_parameters(model.net.parameters(), cfg.adam);
  std::vector<std::size_t> idx(fit.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});

  TrainHistory history;
  std::vector<Tensor> best = model.net.parameters();
  history.best_validation_score = -std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    order.shuffle(std::span<std::size_t>(idx));
    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < idx.size(); b += cfg.batch_size) {
      const std::span<const std::size_t> batch_idx(idx.data() + b, std::min(cfg.batch_size, idx.size() - b));
      Tensor xb = gather_rows(x, batch_idx);
      std::vector<int> yb = gather_labels(y, batch_idx);
      if (hooks.augment_batch) hooks.augment_batch(model, xb, yb);
      const ForwardTrace trace = model.net.forward_trace(xb, Mode::Train, &dropout);
      const double n = static_cast<double>(yb.size());
      loss_sum += cross_entropy(trace.output(), yb) * n;
      seen += yb.size();
      const Tensor dz = softmax_cross_entropy_grad(trace.output(), yb, 1.0 / n);
      Gradients g = model.net.backward(trace, dz, {.parameters = true, .input = false});
      adam_step(model.net.parameters(), g.parameters, adam);
    }
    EpochRecord rec{epoch, loss_sum / static_cast<double>(seen), 0.0};
    if (!validation.empty()) {
      rec.validation_score = score(model);
      if (rec.validation_score >= history.best_validation_score) {
        history.best_validation_score = rec.validation_score;
        history.best_epoch = epoch;
        best = model.net.parameters();
      }
    }
    history.epochs.push_back(rec);
  }
  if (validation.empty()) {
    history.best_epoch = cfg.epochs;
    history.best_validation_score = std::numeric_limits<double>::quiet_NaN();
  } else {
    model.net.parameters() = std::move(best);
  }
  return history;
}

MultiTaskHistory train_multitask(MultiTaskModel& model, const Dataset& train, const TrainConfig& cfg,
                                 const MultiTaskTrainHooks& hooks) {
  validate_train_config(cfg);
  cfg.weights.validate();
  if (train.empty()) throw DataError("train_multitask: empty training set");
  require_both_classes(labels(train, TaskId::Device), "train_multitask (task 1)");
  require_both_classes(labels(train, TaskId::Authenticity), "train_multitask (task 2)");
  model.weights = cfg.weights;

  const auto [fit, validation] = carve_validation(train, cfg);
  const Tensor x = to_tensor(fit);
  const std::vector<int> y1 = labels(fit, TaskId::Device);
  const std::vector<int> y2 = labels(fit, TaskId::Authenticity);

  auto score = [&](const MultiTaskModel& m) {
    if (hooks.validation_score) return hooks.validation_score(m, validation);
    const auto metrics = evaluate(m, validation);
    return 0.5 * (metrics[0].overall + metrics[1].overall);
  };

  Rng order(derive_seed(cfg.seed, "shuffle"));
  Rng dropout(derive_seed(cfg.seed, "dropout"));
  AdamState adam_shared = AdamState::for_parameters(model.shared.parameters(), cfg.adam);
  AdamState adam_head1 = AdamState::for_parameters(model.head1.parameters(), cfg.adam);
  AdamState adam_head2 = AdamState::for_parameters(model.head2.parameters(), cfg.adam);
  std::vector<std::size_t> idx(fit.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});

  MultiTaskHistory history;
  MultiTaskModel best = model;
  history.best_validation_score = -std::numeric_limits<double>::infinity();
  const double w1 = cfg.weights.first;
  const double w2 = cfg.weights.second;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    order.shuffle(std::span<std::size_t>(idx));
    MultiTaskEpochRecord rec;
    rec.epoch = epoch;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < idx.size(); b += cfg.batch_size) {
      const std::span<const std::size_t> batch_idx(idx.data() + b, std::min(cfg.batch_size, idx.size() - b));
      Tensor xb = gather_rows(x, batch_idx);
      std::vector<int> yb1 = gather_labels(y1, batch_idx);
      std::vector<int> yb2 = gather_labels(y2, batch_idx);
      if (hooks.augment_batch) hooks.augment_batch(model, xb, yb1, yb2);
      const double n = static_cast<double>(yb1.size());
      MultiTaskBackward g = multitask_backward(model, xb, yb1, yb2, w1 / n, w2 / n, Mode::Train, &dropout,
                                               {.parameters = true, .input = false});
      const MultiTaskStep step{g.loss1, g.loss2, w1 * g.loss1 + w2 * g.loss2};
      history.steps.push_back(step);
      rec.loss1 += step.loss1 * n;
      rec.loss2 += step.loss2 * n;
      rec.joint += step.joint * n;
      seen += yb1.size();
      adam_step(model.shared.parameters(), g.shared.parameters, adam_shared);
      adam_step(model.head1.parameters(), g.head1.parameters, adam_head1);
      adam_step(model.head2.parameters(), g.head2.parameters, adam_head2);
    }
    rec.loss1 /= static_cast<double>(seen);
    rec.loss2 /= static_cast<double>(seen);
    rec.joint /= static_cast<double>(seen);
    if (!validation.empty()) {
      rec.validation_score = score(model);
      if (rec.validation_score >= history.best_validation_score) {
        history.best_validation_score = rec.validation_score;
        history.best_epoch = epoch;
        best = model;
      }
    }
    history.epochs.push_back(rec);
  }
  if (validation.empty()) {
    history.best_epoch = cfg.epochs;
    history.best_validation_score = std::numeric_limits<double>::quiet_NaN();
  } else {
    model = std::move(best);
  }
  return history;
}

void save_single(const SingleTaskModel& model, const std::filesystem::path& path) {
  save_network(model.net, path,
               {{"arch", std::string(arch_name(model.arch))}, {"task", std::string(task_name(model.task))}});
}

SingleTaskModel load_single(const std::filesystem::path& path) {
  CheckpointMeta meta;
  SingleTaskModel m;
  m.net = load_network(path, &meta);
  try {
    m.arch = parse_arch(meta.at("arch"));
    m.task = parse_task(meta.at("task"));
  } catch (const std::out_of_range&) {
    throw FormatError(path.string() + ": checkpoint lacks arch/task metadata");
  } catch (const ConfigError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return m;
}

void save_multitask(const MultiTaskModel& model, const std::filesystem::path& path) {
  using nlohmann::json;
  const std::string stem = path.stem().string();
  const std::filesystem::path dir = path.parent_path();
  json manifest;
  manifest["format"] = "advsec-multitask-1";
  manifest["arch"] = arch_name(model.arch);
  manifest["task_weights"] = {model.weights.first, model.weights.second};
  manifest["blocks"] = json::object();
  const std::array<std::pair<const char*, const Network*>, 3> blocks{
      {{"shared", &model.shared}, {"head1", &model.head1}, {"head2", &model.head2}}};
  for (const auto& [name, net] : blocks) {
    const std::string file = stem + "." + name + ".lann";
    const std::string bytes = encode_network(*net, {{"block", name}});
    detail::write_file(dir / file, bytes);
    manifest["blocks"][name] = {{"file", file}, {"sha256", sha256_hex(bytes)}};
  }
  detail::write_file(path, manifest.dump(2) + "\n");
}

MultiTaskModel load_multitask(const std::filesystem::path& path) {
  using nlohmann::json;
  MultiTaskModel m;
  try {
    const json manifest = json::parse(detail::read_file(path));
    if (manifest.at("format") != "advsec-multitask-1") throw FormatError(path.string() + ": unknown format");
    m.arch = parse_arch(manifest.at("arch").get<std::string>());
    m.weights = {manifest.at("task_weights").at(0).get<double>(), manifest.at("task_weights").at(1).get<double>()};
    const std::array<std::pair<const char*, Network*>, 3> blocks{
        {{"shared", &m.shared}, {"head1", &m.head1}, {"head2", &m.head2}}};
    for (const auto& [name, net] : blocks) {
      const json& b = manifest.at("blocks").at(name);
      const std::string bytes = detail::read_file(path.parent_path() / b.at("file").get<std::string>());
      if (sha256_hex(bytes) != b.at("sha256").get<std::string>()) {
        throw FormatError(path.string() + ": block '" + name + "' does not match its recorded digest");
      }
      *net = decode_network(bytes);
    }
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": malformed multitask manifest: " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return m;
}

}  // namespace advsec
