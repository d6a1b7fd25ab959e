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
#include <cstddef>

namespace advsec {

inline constexpr std::size_t kIqRows = 2;
inline constexpr std::size_t kIqLength = 32;
inline constexpr std::size_t kIqValues = kIqRows * kIqLength;

/// One (2, 32) record: row 0 in-phase, row 1 quadrature.
struct IQSample {
  std::array<double, kIqValues> values{};

  double& in_phase(std::size_t t) { return values[t]; }
  double& quadrature(std::size_t t) { return values[kIqLength + t]; }
  double in_phase(std::size_t t) const { return values[t]; }
  double quadrature(std::size_t t) const { return values[kIqLength + t]; }

  bool operator==(const IQSample&) const = default;
};

/// Rounds every value to the nearest float32, the precision of the
/// on-disk dataset format.
IQSample quantize_f32(const IQSample& s);

}  // namespace advsec
