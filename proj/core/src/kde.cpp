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

#include "advsec/kde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "advsec/error.hpp"

namespace advsec {

IQSample quantize_f32(const IQSample& s) {
  IQSample out;
  for (std::size_t i = 0; i < kIqValues; ++i) out.values[i] = static_cast<double>(static_cast<float>(s.values[i]));
  return out;
}

KdeModel::KdeModel(std::size_t dim, std::vector<double> points, double bandwidth)
    : dim_(dim), points_(std::move(points)), bandwidth_(bandwidth) {
  if (dim_ == 0) throw ConfigError("KDE dimension must be positive");
  if (points_.empty()) throw DataError("KDE needs at least one observation");
  if (points_.size() % dim_ != 0) throw ConfigError("KDE point buffer is not a multiple of the dimension");
  if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_)) throw ConfigError("KDE bandwidth must be positive");
  if (!std::all_of(points_.begin(), points_.end(), [](double v) { return std::isfinite(v); })) {
    throw NumericError("KDE observations must be finite");
  }
}

KdeModel kde_fit(std::span<const IQSample> samples, double bandwidth) {
  if (samples.empty()) throw DataError("kde_fit: no samples");
  std::vector<double> points;
  points.reserve(samples.size() * kIqValues);
  for (const IQSample& s : samples) points.insert(points.end(), s.values.begin(), s.values.end());
  return KdeModel(kIqValues, std::move(points), bandwidth);
}

KdeModel kde_fit_points(std::size_t dim, std::span<const double> points, double bandwidth) {
  return KdeModel(dim, std::vector<double>(points.begin(), points.end()), bandwidth);
}

double kde_log_pdf(const KdeModel& model, std::span<const double> x) {
  if (x.size() != model.dim()) throw ConfigError("kde_pdf: query dimension mismatch");
  const double h = model.bandwidth();
  const double log_norm = static_cast<double>(model.dim()) * (std::log(h) + 0.5 * std::log(2.0 * std::numbers::pi));
  std::vector<double> terms(model.size());
  for (std::size_t i = 0; i < model.size(); ++i) {
    auto p = model.point(i);
    double q = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
      const double z = (x[d] - p[d]) / h;
      q += z * z;
    }
    terms[i] = -0.5 * q;
  }
  const double m = *std::max_element(terms.begin(), terms.end());
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - m);
  return m + std::log(acc) - std::log(static_cast<double>(model.size())) - log_norm;
}

double kde_pdf(const KdeModel& model, std::span<const double> x) { return std::exp(kde_log_pdf(model, x)); }

std::vector<double> kde_sample(const KdeModel& model, Rng& rng) {
  auto p = model.point(rng.below(model.size()));
  std::vector<double> out(p.begin(), p.end());
  for (double& v : out) v += model.bandwidth() * rng.normal();
  return out;
}

IQSample scale_rotate(const IQSample& x, double gain_db, double theta) {
  const double g = std::pow(10.0, gain_db / 20.0);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  IQSample out;
  for (std::size_t t = 0; t < kIqLength; ++t) {
    const double i = x.in_phase(t);
    const double q = x.quadrature(t);
    out.in_phase(t) = g * (i * c - q * s);
    out.quadrature(t) = g * (i * s + q * c);
  }
  return out;
}

IQSample rogue_transform(const IQSample& x, const RogueTransform& t, Rng& rng) {
  if (t.phase_max_rad < 0.0) throw ConfigError("rogue phase bound must be non-negative");
  const double theta = rng.uniform(-t.phase_max_rad, t.phase_max_rad);
  return scale_rotate(x, t.gain_offset_db, theta);
}

}  // namespace advsec
