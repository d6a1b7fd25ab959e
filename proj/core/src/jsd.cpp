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

#include "advsec/jsd.hpp"

#include <algorithm>
#include <cmath>

#include "advsec/error.hpp"

namespace advsec {

Histogram2D::Histogram2D(std::size_t bins_i, std::size_t bins_q, double i_lo, double i_hi, double q_lo,
                         double q_hi)
    : bins_i_(bins_i), bins_q_(bins_q), i_lo_(i_lo), i_hi_(i_hi), q_lo_(q_lo), q_hi_(q_hi),
      counts_(bins_i * bins_q, 0.0) {
  if (bins_i == 0 || bins_q == 0) throw ConfigError("histogram needs at least one bin per axis");
  if (!(i_hi >= i_lo) || !(q_hi >= q_lo)) throw ConfigError("histogram range is inverted");
}

std::size_t Histogram2D::index(double v, double lo, double hi, std::size_t bins) const {
  if (hi == lo) return 0;
  const double pos = (v - lo) / (hi - lo) * static_cast<double>(bins);
  if (pos <= 0.0) return 0;
  return std::min(bins - 1, static_cast<std::size_t>(pos));
}

void Histogram2D::add(double i, double q) {
  counts_[index(i, i_lo_, i_hi_, bins_i_) * bins_q_ + index(q, q_lo_, q_hi_, bins_q_)] += 1.0;
  total_ += 1.0;
}

void Histogram2D::add_constellation(std::span<const IQSample> samples) {
  for (const IQSample& s : samples) {
    for (std::size_t t = 0; t < kIqLength; ++t) add(s.in_phase(t), s.quadrature(t));
  }
}

std::vector<double> Histogram2D::normalized(double epsilon) const {
  if (total_ == 0.0) throw DataError("cannot normalize an empty histogram");
  std::vector<double> p(counts_.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = counts_[k] / total_ + epsilon;
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

double jsd_distributions(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw ConfigError("jsd: distributions have different supports");
  double kl_pm = 0.0;
  double kl_qm = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double m = 0.5 * (p[k] + q[k]);
    if (p[k] > 0.0) kl_pm += p[k] * std::log2(p[k] / m);
    if (q[k] > 0.0) kl_qm += q[k] * std::log2(q[k] / m);
  }
  return std::clamp(0.5 * (kl_pm + kl_qm), 0.0, 1.0);
}

double jsd(std::span<const IQSample> p_samples, std::span<const IQSample> q_samples,
           const HistogramConfig& config) {
  if (p_samples.empty() || q_samples.empty()) throw DataError("jsd: both sample sets must be non-empty");
  double i_lo = INFINITY, i_hi = -INFINITY, q_lo = INFINITY, q_hi = -INFINITY;
  for (auto set : {p_samples, q_samples}) {
    for (const IQSample& s : set) {
      for (std::size_t t = 0; t < kIqLength; ++t) {
        i_lo = std::min(i_lo, s.in_phase(t));
        i_hi = std::max(i_hi, s.in_phase(t));
        q_lo = std::min(q_lo, s.quadrature(t));
        q_hi = std::max(q_hi, s.quadrature(t));
      }
    }
  }
  Histogram2D hp(config.bins_i, config.bins_q, i_lo, i_hi, q_lo, q_hi);
  Histogram2D hq(config.bins_i, config.bins_q, i_lo, i_hi, q_lo, q_hi);
  hp.add_constellation(p_samples);
  hq.add_constellation(q_samples);
  return jsd_distributions(hp.normalized(config.epsilon), hq.normalized(config.epsilon));
}

}  // namespace advsec
