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

#include "advsec/dataset.hpp"

#include <cmath>
#include <numbers>

#include <json.hpp>

#include "advsec/digest.hpp"
#include "advsec/error.hpp"
#include "binary_io.hpp"

namespace advsec {
namespace {

constexpr std::string_view kDatasetMagic = "LORAIQ01";
constexpr std::uint32_t kDatasetVersion = 1;

std::uint64_t config_hash(const GeneratorConfig& cfg) { return sha256_u64(generator_config_json(cfg)); }

}  // namespace

DeviceProfile default_device_profile(Device d) {
  if (d == Device::Device1) return DeviceProfile{0.0, 0.0, 0.01, 1.02, 20.0};
  return DeviceProfile{-1.0, 0.2, -0.015, 0.98, 20.0};
}

void Dataset::recount() {
  meta.cell_counts = {};
  for (const LabeledSample& s : samples) ++meta.cell_counts[cell_index(s.device, s.authenticity)];
}

std::string generator_config_json(const GeneratorConfig& cfg) {
  using nlohmann::json;
  json j;
  j["n_total"] = cfg.n_total;
  j["kde_bandwidth"] = cfg.kde_bandwidth;
  j["devices"] = json::array();
  for (const DeviceProfile& p : cfg.devices) {
    j["devices"].push_back({{"gain_db", p.gain_db},
                            {"phase_offset_rad", p.phase_offset_rad},
                            {"cfo_norm", p.cfo_norm},
                            {"iq_gain_imbalance", p.iq_gain_imbalance},
                            {"snr_db", p.snr_db ? json(*p.snr_db) : json(nullptr)}});
  }
  j["rogues"] = json::array();
  for (const RogueTransform& r : cfg.rogues) {
    j["rogues"].push_back({{"gain_offset_db", r.gain_offset_db}, {"phase_max_rad", r.phase_max_rad}});
  }
  return j.dump();
}

std::vector<std::complex<double>> synth_chirp(std::size_t n_samples) {
  std::vector<std::complex<double>> out(n_samples);
  const double n = static_cast<double>(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double t = static_cast<double>(i);
    out[i] = std::polar(1.0, std::numbers::pi * (t * t / n - t));
  }
  return out;
}

IQSample apply_device_profile(std::span<const std::complex<double>> chirp, const DeviceProfile& profile,
                              Rng& rng) {
  if (chirp.size() != kIqLength) throw ConfigError("apply_device_profile: chirp must have 32 samples");
  if (!(profile.iq_gain_imbalance > 0.0)) throw ConfigError("IQ gain imbalance must be positive");
  const double gain = std::pow(10.0, profile.gain_db / 20.0);
  IQSample out;
  double power = 0.0;
  for (std::size_t t = 0; t < kIqLength; ++t) {
    const double phi = profile.phase_offset_rad + profile.cfo_norm * static_cast<double>(t);
    const double c = std::cos(phi);
    const double s = std::sin(phi);
    const double re = chirp[t].real();
    const double im = chirp[t].imag();
    out.in_phase(t) = gain * (re * c - im * s);
    out.quadrature(t) = gain * (re * s + im * c) * profile.iq_gain_imbalance;
    power += gain * gain * std::norm(chirp[t]);
  }
  if (profile.snr_db) {
    if (!std::isfinite(*profile.snr_db)) throw ConfigError("snr_db must be finite");
    power /= static_cast<double>(kIqLength);
    const double sigma = std::sqrt(power / std::pow(10.0, *profile.snr_db / 10.0) / 2.0);
    for (double& v : out.values) v += sigma * rng.normal();
  }
  return out;
}

Dataset generate_legitimate(const GeneratorConfig& cfg, std::uint64_t seed) {
  if (cfg.n_total == 0 || cfg.n_total % 4 != 0) {
    throw ConfigError("n_total must be a positive multiple of 4, got " + std::to_string(cfg.n_total));
  }
  const std::size_t per_cell = cfg.n_total / 4;
  const auto chirp = synth_chirp(kIqLength);
  Dataset ds;
  ds.samples.reserve(cfg.n_total);
  for (Device d : {Device::Device1, Device::Device2}) {
    Rng rng(derive_seed(seed, "legitimate", static_cast<std::uint64_t>(d)));
    for (std::size_t k = 0; k < per_cell; ++k) {
      ds.samples.push_back(
          {quantize_f32(apply_device_profile(chirp, cfg.devices[static_cast<std::size_t>(d)], rng)), d,
           Authenticity::Legitimate});
    }
  }
  ds.meta.seed = seed;
  ds.meta.config_hash = config_hash(cfg);
  ds.recount();
  return ds;
}

Dataset spoof_rogues(const Dataset& legitimate, const GeneratorConfig& cfg, std::uint64_t seed) {
  Dataset ds = legitimate;
  for (Device d : {Device::Device1, Device::Device2}) {
    std::vector<IQSample> observed;
    for (const LabeledSample& s : legitimate.samples) {
      if (s.device == d && s.authenticity == Authenticity::Legitimate) observed.push_back(s.sample);
    }
    if (observed.empty()) throw DataError("spoof_rogues: no legitimate records for a device");
    const KdeModel kde = kde_fit(observed, cfg.kde_bandwidth);
    Rng draw(derive_seed(seed, "kde", static_cast<std::uint64_t>(d)));
    Rng deviate(derive_seed(seed, "rogue", static_cast<std::uint64_t>(d)));
    for (std::size_t k = 0; k < observed.size(); ++k) {
      const std::vector<double> v = kde_sample(kde, draw);
      IQSample spoofed;
      std::copy(v.begin(), v.end(), spoofed.values.begin());
      ds.samples.push_back(
          {quantize_f32(rogue_transform(spoofed, cfg.rogues[static_cast<std::size_t>(d)], deviate)), d,
           Authenticity::Rogue});
    }
  }
  ds.meta.seed = legitimate.meta.seed;
  ds.recount();
  return ds;
}

Dataset generate_dataset(const GeneratorConfig& cfg, std::uint64_t seed) {
  return spoof_rogues(generate_legitimate(cfg, seed), cfg, seed);
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1)");
  }
  Rng rng(derive_seed(seed, "split"));
  std::array<std::vector<std::size_t>, 4> cells;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    cells[cell_index(ds.samples[i].device, ds.samples[i].authenticity)].push_back(i);
  }
  std::vector<std::size_t> train_idx, test_idx;
  for (auto& cell : cells) {
    rng.shuffle(std::span<std::size_t>(cell));
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(cell.size())));
    train_idx.insert(train_idx.end(), cell.begin(), cell.begin() + static_cast<std::ptrdiff_t>(n_train));
    test_idx.insert(test_idx.end(), cell.begin() + static_cast<std::ptrdiff_t>(n_train), cell.end());
  }
  rng.shuffle(std::span<std::size_t>(train_idx));
  rng.shuffle(std::span<std::size_t>(test_idx));
  auto gather = [&](const std::vector<std::size_t>& idx) {
    Dataset out;
    out.meta = ds.meta;
    out.samples.reserve(idx.size());
    for (std::size_t i : idx) out.samples.push_back(ds.samples[i]);
    out.recount();
    return out;
  };
  return {gather(train_idx), gather(test_idx)};
}

std::string encode_dataset(const Dataset& ds) {
  std::string out(kDatasetMagic);
  out.reserve(kDatasetHeaderBytes + ds.size() * kDatasetRecordBytes);
  detail::put_u32(out, kDatasetVersion);
  detail::put_u32(out, 0);
  detail::put_u64(out, ds.size());
  for (const LabeledSample& s : ds.samples) {
    for (double v : s.sample.values) detail::put_f32(out, static_cast<float>(v));
    detail::put_u8(out, static_cast<std::uint8_t>(s.device));
    detail::put_u8(out, static_cast<std::uint8_t>(s.authenticity));
  }
  return out;
}

Dataset decode_dataset(std::string_view bytes) {
  detail::Reader in(bytes, "dataset");
  if (in.take(kDatasetMagic.size(), "magic") != kDatasetMagic) throw FormatError("dataset: bad magic");
  const std::uint32_t version = in.u32("version");
  if (version != kDatasetVersion) throw FormatError("dataset: unsupported version " + std::to_string(version));
  in.u32("reserved");
  const std::uint64_t count = in.u64("count");
  if (in.remaining() != count * kDatasetRecordBytes) {
    throw FormatError("dataset: header declares " + std::to_string(count) + " records but payload holds " +
                      std::to_string(in.remaining()) + " bytes");
  }
  Dataset ds;
  ds.samples.resize(count);
  for (LabeledSample& s : ds.samples) {
    for (double& v : s.sample.values) v = static_cast<double>(in.f32("samples"));
    const std::uint8_t d = in.u8("device label");
    const std::uint8_t a = in.u8("authenticity label");
    if (d > 1 || a > 1) throw FormatError("dataset: label out of range");
    s.device = static_cast<Device>(d);
    s.authenticity = static_cast<Authenticity>(a);
  }
  ds.recount();
  return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  detail::write_file(path, encode_dataset(ds));
}

Dataset load_dataset(const std::filesystem::path& path) { return decode_dataset(detail::read_file(path)); }

Dataset convert_raw_f32(const std::filesystem::path& path, Device device, Authenticity authenticity) {
  const std::string bytes = detail::read_file(path);
  constexpr std::size_t record = kIqLength * 2 * sizeof(float);
  if (bytes.size() % record != 0) {
    throw FormatError("raw capture " + path.string() + " is not a whole number of 32-pair records");
  }
  detail::Reader in(bytes, "raw capture");
  Dataset ds;
  ds.samples.resize(bytes.size() / record);
  for (LabeledSample& s : ds.samples) {
    for (std::size_t t = 0; t < kIqLength; ++t) {
      s.sample.in_phase(t) = static_cast<double>(in.f32("I"));
      s.sample.quadrature(t) = static_cast<double>(in.f32("Q"));
    }
    s.device = device;
    s.authenticity = authenticity;
  }
  ds.recount();
  return ds;
}

double mean_signal_power(const Dataset& ds) {
  if (ds.empty()) throw DataError("mean_signal_power: empty dataset");
  double acc = 0.0;
  for (const LabeledSample& s : ds.samples) {
    for (double v : s.sample.values) acc += v * v;
  }
  return acc / static_cast<double>(ds.size() * kIqValues);
}

double max_abs_component(const Dataset& ds) {
  double m = 0.0;
  for (const LabeledSample& s : ds.samples) {
    for (double v : s.sample.values) m = std::max(m, std::abs(v));
  }
  return m;
}

Dataset filter(const Dataset& ds, Subset subset) {
  Dataset out;
  out.meta = ds.meta;
  for (const LabeledSample& s : ds.samples) {
    const bool keep = subset == Subset::All ||
                      (subset == Subset::LegitimateOnly && s.authenticity == Authenticity::Legitimate) ||
                      (subset == Subset::RogueOnly && s.authenticity == Authenticity::Rogue);
    if (keep) out.samples.push_back(s);
  }
  out.recount();
  return out;
}

Tensor to_tensor(std::span<const IQSample> samples) {
  Tensor t(Shape{samples.size(), kIqRows, kIqLength});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::copy(samples[i].values.begin(), samples[i].values.end(), t.row(i).begin());
  }
  return t;
}

Tensor to_tensor(const Dataset& ds) {
  Tensor t(Shape{ds.size(), kIqRows, kIqLength});
  for (std::size_t i = 0; i < ds.size(); ++i) {
    std::copy(ds.samples[i].sample.values.begin(), ds.samples[i].sample.values.end(), t.row(i).begin());
  }
  return t;
}

int label_of(const LabeledSample& s, TaskId task) {
  return task == TaskId::Device ? static_cast<int>(s.device) : static_cast<int>(s.authenticity);
}

std::vector<int> labels(const Dataset& ds, TaskId task) {
  std::vector<int> out;
  out.reserve(ds.size());
  for (const LabeledSample& s : ds.samples) out.push_back(label_of(s, task));
  return out;
}

}  // namespace advsec
