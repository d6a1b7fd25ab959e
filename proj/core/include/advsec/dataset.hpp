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
#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "advsec/iq.hpp"
#include "advsec/kde.hpp"
#include "advsec/rng.hpp"
#include "advsec/tensor.hpp"

namespace advsec {

enum class Device : std::uint8_t { Device1 = 0, Device2 = 1 };
enum class Authenticity : std::uint8_t { Legitimate = 0, Rogue = 1 };

/// Which label field a classifier reads.
enum class TaskId { Device, Authenticity };

struct LabeledSample {
  IQSample sample;
  Device device = Device::Device1;
  Authenticity authenticity = Authenticity::Legitimate;

  bool operator==(const LabeledSample&) const = default;
};

/// Per-transmitter impairments. An empty snr_db disables the noise.
struct DeviceProfile {
  double gain_db = 0.0;
  double phase_offset_rad = 0.0;
  double cfo_norm = 0.0;
  double iq_gain_imbalance = 1.0;
  std::optional<double> snr_db = 20.0;
};

DeviceProfile default_device_profile(Device d);

/// Index of the (device, authenticity) cell: device + 2 * authenticity.
constexpr std::size_t cell_index(Device d, Authenticity a) {
  return static_cast<std::size_t>(d) + 2 * static_cast<std::size_t>(a);
}

struct DatasetMeta {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::array<std::size_t, 4> cell_counts{};
};

struct Dataset {
  std::vector<LabeledSample> samples;
  DatasetMeta meta;

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }

  /// Recomputes meta.cell_counts from the samples.
  void recount();

  /// Equality of contents; provenance fields in meta are ignored.
  friend bool operator==(const Dataset& a, const Dataset& b) { return a.samples == b.samples; }
};

struct GeneratorConfig {
  std::array<DeviceProfile, 2> devices{default_device_profile(Device::Device1),
                                       default_device_profile(Device::Device2)};
  std::array<RogueTransform, 2> rogues{kRogue1Default, kRogue2Default};
  double kde_bandwidth = kDefaultKdeBandwidth;
  std::size_t n_total = 5000;
};

/// Canonical JSON text of a generator config; its SHA-256 prefix is the
/// dataset's config_hash.
std::string generator_config_json(const GeneratorConfig& cfg);

/// One linear up-chirp segment, phase pi * (t^2 / n - t), unit modulus.
std::vector<std::complex<double>> synth_chirp(std::size_t n_samples = kIqLength);

/// Gain, phase rotation with CFO ramp, Q-arm imbalance, then AWGN at
/// snr_db relative to the scaled chirp power.
IQSample apply_device_profile(std::span<const std::complex<double>> chirp, const DeviceProfile& profile,
                              Rng& rng);

/// n_total / 4 legitimate records per device.
Dataset generate_legitimate(const GeneratorConfig& cfg, std::uint64_t seed);

/// Appends one rogue cell per device, each drawn from a KDE fitted on
/// that device's legitimate records and passed through its rogue
/// transform. Cell size equals the legitimate cell size.
Dataset spoof_rogues(const Dataset& legitimate, const GeneratorConfig& cfg, std::uint64_t seed);

/// generate_legitimate followed by spoof_rogues. Balanced cells, values
/// rounded to float32 so the dataset survives save/load unchanged.
Dataset generate_dataset(const GeneratorConfig& cfg, std::uint64_t seed);

/// Stratified seeded split: every (device, authenticity) cell contributes
/// round(train_fraction * cell size) records to the first part.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed);

/// Dataset file:
///   "LORAIQ01", version u32 LE (=1), reserved u32, count u64 LE
///   per record: 64 float32 LE (I row, then Q row), device u8, authenticity u8
std::string encode_dataset(const Dataset& ds);
Dataset decode_dataset(std::string_view bytes);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

inline constexpr std::size_t kDatasetHeaderBytes = 24;
inline constexpr std::size_t kDatasetRecordBytes = kIqValues * 4 + 2;

/// Reads interleaved I,Q float32 LE pairs, 32 pairs per record, all with
/// the given labels.
Dataset convert_raw_f32(const std::filesystem::path& path, Device device, Authenticity authenticity);

/// Mean over every record and component of value^2.
double mean_signal_power(const Dataset& ds);

/// Largest absolute component value.
double max_abs_component(const Dataset& ds);

enum class Subset { All, LegitimateOnly, RogueOnly };
Dataset filter(const Dataset& ds, Subset subset);

/// (n, 2, 32) batch of the records.
Tensor to_tensor(const Dataset& ds);
Tensor to_tensor(std::span<const IQSample> samples);
std::vector<int> labels(const Dataset& ds, TaskId task);

int label_of(const LabeledSample& s, TaskId task);

}  // namespace advsec
