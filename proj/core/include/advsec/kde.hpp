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

#include <numbers>
#include <span>
#include <vector>

#include "advsec/iq.hpp"
#include "advsec/rng.hpp"

namespace advsec {

inline constexpr double kDefaultKdeBandwidth = 1e-3;

/// Gaussian kernel density estimate over d-dimensional points with one
/// shared bandwidth. The multivariate kernel is the product of d
/// one-dimensional Gaussians of standard deviation h.
class KdeModel {
 public:
  KdeModel(std::size_t dim, std::vector<double> points, double bandwidth);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return points_.size() / dim_; }
  double bandwidth() const noexcept { return bandwidth_; }
  std::span<const double> point(std::size_t i) const {
    return std::span<const double>(points_).subspan(i * dim_, dim_);
  }

 private:
  std::size_t dim_;
  std::vector<double> points_;
  double bandwidth_;
};

/// Fits on flattened (2, 32) records, 64 dimensions each.
KdeModel kde_fit(std::span<const IQSample> samples, double bandwidth = kDefaultKdeBandwidth);

/// Fits on raw points of arbitrary dimension, stored row by row.
KdeModel kde_fit_points(std::size_t dim, std::span<const double> points,
                        double bandwidth = kDefaultKdeBandwidth);

/// f(x) = (1/n) sum_i prod_d phi((x_d - x_id) / h) / h. May underflow to
/// zero in high dimension; use kde_log_pdf there.
double kde_pdf(const KdeModel& model, std::span<const double> x);
double kde_log_pdf(const KdeModel& model, std::span<const double> x);

/// Exact draw from the estimate: a uniformly chosen observation plus
/// N(0, h^2) noise in every dimension.
std::vector<double> kde_sample(const KdeModel& model, Rng& rng);

/// Amplitude and phase deviation a rogue transmitter applies on top of
/// the spoofed waveform.
struct RogueTransform {
  double gain_offset_db = 0.0;
  double phase_max_rad = std::numbers::pi / 30.0;
};

inline constexpr RogueTransform kRogue1Default{2.5, std::numbers::pi / 30.0};
inline constexpr RogueTransform kRogue2Default{0.5, std::numbers::pi / 30.0};

/// Scales by 10^(gain_db / 20) and rotates every (I, Q) pair by theta.
IQSample scale_rotate(const IQSample& x, double gain_db, double theta);

/// scale_rotate with theta drawn uniformly in [-phase_max, +phase_max].
IQSample rogue_transform(const IQSample& x, const RogueTransform& t, Rng& rng);

}  // namespace advsec
