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

#include "advsec/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "advsec/error.hpp"
#include "advsec/parallel.hpp"

namespace advsec {
namespace {

constexpr std::size_t kGradChunk = 128;

std::vector<int> constant_labels(std::size_t n, int value) { return std::vector<int>(n, value); }

void check_batch(const Tensor& x, std::size_t n_labels) {
  if (x.rank() == 0 || x.dim(0) != n_labels) {
    throw ConfigError("attack: batch has " + std::to_string(x.rank() ? x.dim(0) : 0) + " rows but " +
                      std::to_string(n_labels) + " labels");
  }
}

/// Per-sample input gradient, evaluated in fixed chunks.
Tensor chunked_gradient(const Tensor& x, const std::function<Tensor(const Tensor&, std::size_t, std::size_t)>& grad) {
  Tensor out(x.shape());
  const std::size_t row = x.row_size();
  parallel_chunks(x.dim(0), kGradChunk, [&](std::size_t begin, std::size_t end) {
    const Tensor g = grad(x.slice_rows(begin, end), begin, end);
    std::copy_n(g.raw(), g.size(), out.raw() + begin * row);
  });
  return out;
}

Tensor single_gradient(const Network& net, const Tensor& x, std::span<const int> y) {
  return chunked_gradient(x, [&](const Tensor& xb, std::size_t b, std::size_t e) {
    return input_gradient(net, xb, y.subspan(b, e - b));
  });
}

Tensor weighted_sum(const Tensor& g1, const Tensor& g2, TaskWeights gamma) {
  Tensor out(g1.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gamma.first * g1[i] + gamma.second * g2[i];
  return out;
}

Tensor hybrid_gradient(const Network& m1, const Network& m2, const Tensor& x, std::span<const int> y1,
                       std::span<const int> y2, TaskWeights gamma) {
  gamma.validate();
  return weighted_sum(single_gradient(m1, x, y1), single_gradient(m2, x, y2), gamma);
}

Tensor mtl_gradient(const MultiTaskModel& mtl, const Tensor& x, std::span<const int> y1, std::span<const int> y2,
                    TaskWeights gamma) {
  gamma.validate();
  return chunked_gradient(x, [&](const Tensor& xb, std::size_t b, std::size_t e) {
    return multitask_input_gradient(mtl, xb, y1.subspan(b, e - b), y2.subspan(b, e - b), gamma);
  });
}

Perturbation make(Tensor gradient, double eps, double sign) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) throw ConfigError("attack: epsilon must be finite and non-negative");
  return {scaled_sign(gradient, sign * eps), eps};
}

/// Gradient direction (before sign) for a whole test set; the sign of the
/// step is folded in, so x_adv = x + eps * sign(direction).
struct Direction {
  Tensor gradient;
  double step_sign = 1.0;
};

TaskWeights scope_gamma(AttackScope scope, TaskWeights gamma) {
  switch (scope) {
    case AttackScope::Classifier1: return {1.0, 0.0};
    case AttackScope::Classifier2: return {0.0, 1.0};
    default: return gamma;
  }
}

std::pair<std::vector<int>, std::vector<int>> gradient_labels(const Dataset& test, const AttackSpec& spec) {
  if (spec.kind == AttackKind::Targeted) {
    return {constant_labels(test.size(), spec.targets->task1), constant_labels(test.size(), spec.targets->task2)};
  }
  return {labels(test, TaskId::Device), labels(test, TaskId::Authenticity)};
}

/// Noise with unit variance per component, one substream per sample.
Tensor unit_noise(const Shape& shape, std::uint64_t seed) {
  Tensor z(shape);
  const std::size_t row = z.row_size();
  parallel_chunks(shape[0], kGradChunk, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Rng rng(derive_seed(seed, "gaussian", i));
      for (std::size_t c = 0; c < row; ++c) z[i * row + c] = rng.normal();
    }
  });
  return z;
}

Tensor perturbed(const Tensor& x, const Tensor& unit, double eps, double bound, bool is_sign) {
  Tensor delta = is_sign ? scaled_sign(unit, eps) : unit;
  if (!is_sign) delta *= eps;
  return apply_and_clamp(x, delta, bound);
}

using PredictBoth = std::function<std::array<std::vector<int>, 2>(const Tensor&)>;

AspCurve sweep(const Dataset& test, const AttackSpec& spec, std::span<const double> psr_grid,
               const AspOptions& options, const Direction& dir, const PredictBoth& predict_both) {
  const Tensor x = to_tensor(test);
  const double power = options.mean_power ? *options.mean_power : mean_signal_power(test);
  Tensor signed_dir = dir.gradient;
  signed_dir *= dir.step_sign;
  const Tensor noise = options.include_baseline ? unit_noise(x.shape(), options.seed) : Tensor{};
  const AttackTargets t = spec.targets.value_or(AttackTargets{});
  const std::array<TaskId, 2> tasks{TaskId::Device, TaskId::Authenticity};
  const std::array<std::vector<int>, 2> truth{labels(test, tasks[0]), labels(test, tasks[1])};
  const std::array<int, 2> targets{t.task1, t.task2};

  AspCurve curve;
  for (double psr : psr_grid) {
    const double eps = psr_to_epsilon(psr, power);
    for (int pass = 0; pass < (options.include_baseline ? 2 : 1); ++pass) {
      const bool baseline = pass == 1;
      const Tensor x_adv = baseline ? perturbed(x, noise, eps, spec.clamp_bound, false)
                                    : perturbed(x, signed_dir, eps, spec.clamp_bound, true);
      const auto pred = predict_both(x_adv);
      for (std::size_t k = 0; k < 2; ++k) {
        curve.rows.push_back({psr, spec.scope, spec.kind, tasks[k], attack_success(pred[k], truth[k], spec.kind,
                                                                                   targets[k]),
                              baseline});
      }
    }
  }
  return curve;
}

std::string format_double(const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

std::string_view kind_name(AttackKind kind) { return kind == AttackKind::Untargeted ? "untargeted" : "targeted"; }

AttackKind parse_kind(std::string_view name) {
  if (name == "untargeted") return AttackKind::Untargeted;
  if (name == "targeted") return AttackKind::Targeted;
  throw ConfigError("unknown attack kind '" + std::string(name) + "'");
}

std::string_view scope_name(AttackScope scope) {
  switch (scope) {
    case AttackScope::Classifier1: return "classifier1";
    case AttackScope::Classifier2: return "classifier2";
    case AttackScope::Hybrid: return "hybrid";
    case AttackScope::MultiTask: return "multitask";
  }
  return "?";
}

AttackScope parse_scope(std::string_view name) {
  if (name == "classifier1") return AttackScope::Classifier1;
  if (name == "classifier2") return AttackScope::Classifier2;
  if (name == "hybrid") return AttackScope::Hybrid;
  if (name == "multitask") return AttackScope::MultiTask;
  throw ConfigError("unknown attack scope '" + std::string(name) +
                    "' (expected classifier1, classifier2, hybrid or multitask)");
}

void AttackSpec::validate() const {
  gamma.validate();
  if (!std::isfinite(psr_db)) throw ConfigError("attack PSR must be finite");
  if (!(clamp_bound > 0.0)) throw ConfigError("clamp bound must be positive");
  if ((kind == AttackKind::Targeted) != targets.has_value()) {
    throw ConfigError("targets must be given exactly when the attack is targeted");
  }
  if (targets && (targets->task1 < 0 || targets->task1 > 1 || targets->task2 < 0 || targets->task2 > 1)) {
    throw ConfigError("attack targets must be 0 or 1");
  }
}

double psr_to_epsilon(double psr_db, double mean_power) {
  if (!(mean_power > 0.0)) throw ConfigError("psr_to_epsilon: mean power must be positive");
  return std::sqrt(mean_power * std::pow(10.0, psr_db / 10.0));
}

Tensor scaled_sign(const Tensor& gradient, double eps) {
  Tensor out(gradient.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double g = gradient[i];
    out[i] = g > 0.0 ? eps : (g < 0.0 ? -eps : 0.0);
  }
  return out;
}

Perturbation fgsm_untargeted(const Network& model, const Tensor& x, std::span<const int> y, double eps) {
  check_batch(x, y.size());
  return make(single_gradient(model, x, y), eps, 1.0);
}

Perturbation fgsm_targeted(const Network& model, const Tensor& x, std::span<const int> y_target, double eps) {
  check_batch(x, y_target.size());
  return make(single_gradient(model, x, y_target), eps, -1.0);
}

Perturbation fgsm_hybrid(const Network& model1, const Network& model2, const Tensor& x, std::span<const int> y1,
                         std::span<const int> y2, TaskWeights gamma, double eps) {
  check_batch(x, y1.size());
  check_batch(x, y2.size());
  return make(hybrid_gradient(model1, model2, x, y1, y2, gamma), eps, 1.0);
}

Perturbation fgsm_hybrid_targeted(const Network& model1, const Network& model2, const Tensor& x,
                                  std::span<const int> t1, std::span<const int> t2, TaskWeights gamma, double eps) {
  check_batch(x, t1.size());
  check_batch(x, t2.size());
  return make(hybrid_gradient(model1, model2, x, t1, t2, gamma), eps, -1.0);
}

Perturbation fgsm_multitask_untargeted(const MultiTaskModel& mtl, const Tensor& x, std::span<const int> y1,
                                       std::span<const int> y2, TaskWeights gamma, double eps) {
  check_batch(x, y1.size());
  check_batch(x, y2.size());
  return make(mtl_gradient(mtl, x, y1, y2, gamma), eps, 1.0);
}

Perturbation fgsm_multitask_targeted(const MultiTaskModel& mtl, const Tensor& x, std::span<const int> t1,
                                     std::span<const int> t2, TaskWeights gamma, double eps) {
  check_batch(x, t1.size());
  check_batch(x, t2.size());
  return make(mtl_gradient(mtl, x, t1, t2, gamma), eps, -1.0);
}

Perturbation gaussian_baseline(const Shape& shape, double eps, Rng& rng) {
  if (!(eps >= 0.0)) throw ConfigError("gaussian_baseline: epsilon must be non-negative");
  Tensor delta(shape);
  for (double& v : delta.data()) v = eps * rng.normal();
  return {std::move(delta), eps};
}

Tensor apply_and_clamp(const Tensor& x, const Tensor& delta, double bound) {
  if (!(bound > 0.0)) throw ConfigError("apply_and_clamp: bound must be positive");
  if (x.shape() != delta.shape()) {
    throw ConfigError("apply_and_clamp: shape " + shape_string(x.shape()) + " vs " + shape_string(delta.shape()));
  }
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(x[i] + delta[i], -bound, bound);
  return out;
}

std::vector<double> default_psr_grid() {
  std::vector<double> grid;
  for (int p = -20; p <= 0; ++p) grid.push_back(p);
  return grid;
}

double attack_success(std::span<const int> predicted, std::span<const int> truth, AttackKind kind, int target) {
  if (predicted.size() != truth.size()) throw ConfigError("attack_success: length mismatch");
  std::size_t hits = 0;
  std::size_t eligible = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (kind == AttackKind::Untargeted) {
      ++eligible;
      hits += predicted[i] != truth[i];
    } else if (truth[i] != target) {
      ++eligible;
      hits += predicted[i] == target;
    }
  }
  if (eligible == 0) throw DataError("attack_success: no eligible samples");
  return static_cast<double>(hits) / static_cast<double>(eligible);
}

AspCurve evaluate_asp(const SingleTaskModel& classifier1, const SingleTaskModel& classifier2, const Dataset& test,
                      const AttackSpec& spec, std::span<const double> psr_grid, const AspOptions& options) {
  spec.validate();
  if (test.empty()) throw DataError("evaluate_asp: empty test set");
  if (spec.scope == AttackScope::MultiTask) throw ConfigError("multitask scope needs a multi-task model");
  if (classifier1.task != TaskId::Device || classifier2.task != TaskId::Authenticity) {
    throw ConfigError("evaluate_asp: expects the task-1 classifier first and the task-2 classifier second");
  }
  const auto [l1, l2] = gradient_labels(test, spec);
  const Tensor x = to_tensor(test);
  Direction dir;
  dir.step_sign = spec.kind == AttackKind::Targeted ? -1.0 : 1.0;
  switch (spec.scope) {
    case AttackScope::Classifier1: dir.gradient = single_gradient(classifier1.net, x, l1); break;
    case AttackScope::Classifier2: dir.gradient = single_gradient(classifier2.net, x, l2); break;
    default: dir.gradient = hybrid_gradient(classifier1.net, classifier2.net, x, l1, l2, spec.gamma); break;
  }
  return sweep(test, spec, psr_grid, options, dir, [&](const Tensor& xa) {
    return std::array<std::vector<int>, 2>{predict(classifier1.net, xa), predict(classifier2.net, xa)};
  });
}

AspCurve evaluate_asp(const MultiTaskModel& mtl, const Dataset& test, const AttackSpec& spec,
                      std::span<const double> psr_grid, const AspOptions& options) {
  spec.validate();
  if (test.empty()) throw DataError("evaluate_asp: empty test set");
  const auto [l1, l2] = gradient_labels(test, spec);
  const Tensor x = to_tensor(test);
  Direction dir{mtl_gradient(mtl, x, l1, l2, scope_gamma(spec.scope, spec.gamma)),
                spec.kind == AttackKind::Targeted ? -1.0 : 1.0};

  return sweep(test, spec, psr_grid, options, dir, [&](const Tensor& xa) { return predict(mtl, xa); });
}

std::string asp_csv_row(const AspRow& row) {
  std::string s = format_double("%g", row.psr_db);
  s += ',';
  s += scope_name(row.scope);
  s += ',';
  s += kind_name(row.kind);
  s += ',';
  s += task_name(row.task);
  s += ',';
  s += format_double("%.6f", row.asp);
  s += ',';
  s += row.baseline ? "gaussian" : "fgsm";
  return s;
}

std::string asp_csv(const AspCurve& curve) {
  std::string out(kAspCsvHeader);
  out += '\n';
  for (const AspRow& r : curve.rows) out += asp_csv_row(r) + '\n';
  return out;
}

std::vector<AspRow> parse_asp_csv(std::string_view text) {
  std::vector<AspRow> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      if (line != kAspCsvHeader) throw FormatError("asp csv: unexpected header '" + line + "'");
      header = false;
      continue;
    }
    std::vector<std::string> f;
    std::istringstream fields(line);
    for (std::string cell; std::getline(fields, cell, ',');) f.push_back(cell);
    if (f.size() != 6) throw FormatError("asp csv: expected 6 fields in '" + line + "'");
    try {
      AspRow r;
      r.psr_db = std::stod(f[0]);
      r.scope = parse_scope(f[1]);
      r.kind = parse_kind(f[2]);
      r.task = parse_task(f[3]);
      r.asp = std::stod(f[4]);
      if (f[5] != "fgsm" && f[5] != "gaussian") throw FormatError("bad baseline flag");
      r.baseline = f[5] == "gaussian";
      if (!(r.asp >= 0.0 && r.asp <= 1.0)) throw FormatError("asp outside [0, 1]");
      rows.push_back(r);
    } catch (const std::exception& e) {
      throw FormatError("asp csv: bad row '" + line + "': " + e.what());
    }
  }
  if (header) throw FormatError("asp csv: missing header");
  return rows;
}

void append_asp_csv(const std::filesystem::path& path, const AspCurve& curve) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw DataError("cannot open " + path.string() + " for appending");
  if (fresh) out << kAspCsvHeader << '\n';
  for (const AspRow& r : curve.rows) out << asp_csv_row(r) << '\n';
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace advsec
