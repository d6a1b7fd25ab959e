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

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "advsec/network.hpp"

namespace advsec {

using CheckpointMeta = std::map<std::string, std::string>;

/// Checkpoint layout:
///   "LANN0001"                    8 bytes
///   header length                 u64 LE
///   JSON header                   {"input_shape", "seed", "layers", "meta"}
///   parameters                    f64 LE, layer order, weights then bias
std::string encode_network(const Network& net, const CheckpointMeta& meta = {});
Network decode_network(std::string_view bytes, CheckpointMeta* meta = nullptr);

void save_network(const Network& net, const std::filesystem::path& path, const CheckpointMeta& meta = {});
Network load_network(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);

}  // namespace advsec
