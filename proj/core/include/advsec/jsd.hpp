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
#include <span>
#include <vector>

#include "advsec/iq.hpp"

namespace advsec {

struct HistogramConfig {
  std::size_t bins_i = 64;
  std::size_t bins_q = 64;
  double epsilon = 1e-12;
};

/// Counts of (I, Q) points over a fixed rectangular grid. The last bin on
/// each axis is closed so the maximum lands inside.
class Histogram2D {
 public:
  Histogram2D(std::size_t bins_i, std::size_t bins_q, double i_lo, double i_hi, double q_lo, double q_hi);

  void add(double i, double q);
  void add_constellation(std::span<const IQSample> samples);

  std::size_t bins_i() const noexcept { return bins_i_; }
  std::size_t bins_q() const noexcept { return bins_q_; }
  double total() const noexcept { return total_; }
  std::span<const double> counts() const noexcept { return counts_; }

  /// counts / total, then epsilon added to every bin and renormalized.
  std::vector<double> normalized(double epsilon) const;

 private:
  std::size_t index(double v, double lo, double hi, std::size_t bins) const;

  std::size_t bins_i_, bins_q_;
  double i_lo_, i_hi_, q_lo_, q_hi_;
  std::vector<double> counts_;
  double total_ = 0.0;
};

/// Base-2 Jensen-Shannon divergence of two probability vectors on the
/// same support; 0 log 0 is taken as 0. Result lies in [0, 1].
double jsd_distributions(std::span<const double> p, std::span<const double> q);

/// Pools every (I, Q) pair of each set into a shared-range histogram and
/// returns the base-2 JSD of the normalized histograms.
double jsd(std::span<const IQSample> p_samples, std::span<const IQSample> q_samples,
           const HistogramConfig& config = {});

}  // namespace advsec
