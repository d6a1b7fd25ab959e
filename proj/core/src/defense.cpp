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

#include "advsec/defense.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "advsec/error.hpp"

namespace advsec {
namespace {

/// Row indices of the adversarial copies: ratio * n rows, cycling.
std::vector<std::size_t> copy_rows(std::size_t n, double ratio) {
  const auto k = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
  std::vector<std::size_t> idx(std::max<std::size_t>(k, 1));
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i % n;
  return idx;
}

Tensor take(const Tensor& x, std::span<const std::size_t> idx) {
  Shape s = x.shape();
  s[0] = idx.size();
  Tensor out(std::move(s));
  const std::size_t row = x.row_size();
  for (std::size_t k = 0; k < idx.size(); ++k) std::copy_n(x.raw() + idx[k] * row, row, out.raw() + k * row);
  return out;
}

std::vector<int> take(std::span<const int> y, std::span<const std::size_t> idx) {
  std::vector<int> out(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) out[k] = y[idx[k]];
  return out;
}

/// x followed by extra rows along the batch axis.
Tensor concat_rows(const Tensor& x, const Tensor& extra) {
  Shape s = x.shape();
  s[0] += extra.dim(0);
  std::vector<double> data(x.data().begin(), x.data().end());
  data.insert(data.end(), extra.data().begin(), extra.data().end());
  return Tensor(std::move(s), std::move(data));
}

double epsilon_of(const DefenseConfig& cfg) { return psr_to_epsilon(cfg.attack.psr_db, cfg.mean_power); }

double single_adv_accuracy(const SingleTaskModel& m, const Dataset& ds, const DefenseConfig& cfg) {
  const Tensor x = to_tensor(ds);
  const std::vector<int> y = labels(ds, m.task);
  const Perturbation p = fgsm_untargeted(m.net, x, y, epsilon_of(cfg));
  return compute_metrics(predict(m.net, apply_and_clamp(x, p.delta, cfg.attack.clamp_bound)), y).overall;
}

std::array<double, 2> mtl_adv_accuracy(const MultiTaskModel& m, const Dataset& ds, const DefenseConfig& cfg) {
  const Tensor x = to_tensor(ds);
  const std::vector<int> y1 = labels(ds, TaskId::Device);
  const std::vector<int> y2 = labels(ds, TaskId::Authenticity);
  const Perturbation p = fgsm_multitask_untargeted(m, x, y1, y2, cfg.attack.gamma, epsilon_of(cfg));
  const auto pred = predict(m, apply_and_clamp(x, p.delta, cfg.attack.clamp_bound));
  return {compute_metrics(pred[0], y1).overall, compute_metrics(pred[1], y2).overall};
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void DefenseConfig::validate() const {
  if (!(ratio > 0.0) || !std::isfinite(ratio)) throw ConfigError("defense ratio must be positive");
  if (!std::isfinite(attack.psr_db)) throw ConfigError("defense PSR must be finite");
  if (!(mean_power > 0.0)) throw ConfigError("defense reference power must be positive");
  if (!(attack.clamp_bound > 0.0)) throw ConfigError("defense clamp bound must be positive");
  attack.gamma.validate();
}

TrainHistory adversarial_training(SingleTaskModel& model, const Dataset& train, const DefenseConfig& cfg) {
  cfg.validate();
  const double eps = epsilon_of(cfg);
  SingleTrainHooks hooks;
  hooks.augment_batch = [&](const SingleTaskModel& m, Tensor& x, std::vector<int>& y) {
    const std::vector<std::size_t> idx = copy_rows(y.size(), cfg.ratio);
    const Tensor xs = take(x, idx);
    const std::vector<int> ys = take(y, idx);
    const Perturbation p = fgsm_untargeted(m.net, xs, ys, eps);
    x = concat_rows(x, apply_and_clamp(xs, p.delta, cfg.attack.clamp_bound));
    y.insert(y.end(), ys.begin(), ys.end());
  };
  hooks.validation_score = [&](const SingleTaskModel& m, const Dataset& val) {
    return 0.5 * (evaluate(m, val).overall + single_adv_accuracy(m, val, cfg));
  };
  return train_single(model, train, cfg.train, hooks);
}

MultiTaskHistory adversarial_training(MultiTaskModel& model, const Dataset& train, const DefenseConfig& cfg) {
  cfg.validate();
  const double eps = epsilon_of(cfg);
  MultiTaskTrainHooks hooks;
  hooks.augment_batch = [&](const MultiTaskModel& m, Tensor& x, std::vector<int>& y1, std::vector<int>& y2) {
    const std::vector<std::size_t> idx = copy_rows(y1.size(), cfg.ratio);
    const Tensor xs = take(x, idx);
    const std::vector<int> ys1 = take(y1, idx);
    const std::vector<int> ys2 = take(y2, idx);
    const Perturbation p = fgsm_multitask_untargeted(m, xs, ys1, ys2, cfg.attack.gamma, eps);
    x = concat_rows(x, apply_and_clamp(xs, p.delta, cfg.attack.clamp_bound));
    y1.insert(y1.end(), ys1.begin(), ys1.end());
    y2.insert(y2.end(), ys2.begin(), ys2.end());
  };
  hooks.validation_score = [&](const MultiTaskModel& m, const Dataset& val) {
    const auto clean = evaluate(m, val);
    const auto adv = mtl_adv_accuracy(m, val, cfg);
    return 0.25 * (clean[0].overall + clean[1].overall + adv[0] + adv[1]);
  };
  return train_multitask(model, train, cfg.train, hooks);
}

DefenseReport evaluate_defense(const SingleTaskModel& robust1, const SingleTaskModel& robust2,
                               const SingleTaskModel& baseline1, const SingleTaskModel& baseline2,
                               const Dataset& test, const AttackSpec& attack, const AspOptions& options) {
  AspOptions opts = options;
  opts.include_baseline = false;
  const std::vector<double> grid{attack.psr_db};
  const AspCurve before = evaluate_asp(baseline1, baseline2, test, attack, grid, opts);
  const AspCurve after = evaluate_asp(robust1, robust2, test, attack, grid, opts);
  const std::array<double, 2> clean{evaluate(robust1, test).overall, evaluate(robust2, test).overall};
  DefenseReport report;
  for (std::size_t k = 0; k < 2; ++k) {
    report.rows.push_back({attack.scope, before.rows[k].task, before.rows[k].asp, after.rows[k].asp, clean[k]});
  }
  return report;
}

DefenseReport evaluate_defense(const MultiTaskModel& robust, const MultiTaskModel& baseline, const Dataset& test,
                               const AttackSpec& attack, const AspOptions& options) {
  AspOptions opts = options;
  opts.include_baseline = false;
  const std::vector<double> grid{attack.psr_db};
  const AspCurve before = evaluate_asp(baseline, test, attack, grid, opts);
  const AspCurve after = evaluate_asp(robust, test, attack, grid, opts);
  const auto clean = evaluate(robust, test);
  DefenseReport report;
  for (std::size_t k = 0; k < 2; ++k) {
    report.rows.push_back({attack.scope, before.rows[k].task, before.rows[k].asp, after.rows[k].asp, clean[k].overall});
  }
  return report;
}

std::string defense_csv(const DefenseReport& report) {
  std::string out(kDefenseCsvHeader);
  out += '\n';
  for (const DefenseRow& r : report.rows) {
    out += std::string(scope_name(r.scope)) + '/' + std::string(task_name(r.task)) + ',' + fmt(r.asp_before) + ',' +
           fmt(r.asp_after) + ',' + fmt(r.clean_accuracy) + '\n';
  }
  return out;
}

std::vector<DefenseRow> parse_defense_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kDefenseCsvHeader) throw FormatError("defense csv: unexpected header");
  std::vector<DefenseRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream fields(line);
    for (std::string cell; std::getline(fields, cell, ',');) f.push_back(cell);
    const auto slash = f.empty() ? std::string::npos : f[0].find('/');
    if (f.size() != 4 || slash == std::string::npos) throw FormatError("defense csv: bad row '" + line + "'");
    try {
      DefenseRow r;
      r.scope = parse_scope(f[0].substr(0, slash));
      r.task = parse_task(f[0].substr(slash + 1));
      r.asp_before = std::stod(f[1]);
      r.asp_after = std::stod(f[2]);
      r.clean_accuracy = std::stod(f[3]);
      for (double v : {r.asp_before, r.asp_after, r.clean_accuracy}) {
        if (!(v >= 0.0 && v <= 1.0)) throw FormatError("value outside [0, 1]");
      }
      rows.push_back(r);
    } catch (const std::exception& e) {
      throw FormatError("defense csv: bad row '" + line + "': " + e.what());
    }
  }
  return rows;
}

}  // namespace advsec
