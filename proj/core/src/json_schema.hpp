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

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace advsec::detail {

/// Validator for the JSON Schema subset our configs use: type, enum,
/// properties, required, additionalProperties (boolean), items, minItems,
/// maxItems, minLength, minimum, maximum, exclusiveMinimum,
/// exclusiveMaximum, oneOf and local "#/$defs/..." references.
/// Returns one message per violation, each prefixed by a JSON pointer.
std::vector<std::string> validate_json(const nlohmann::json& instance, const nlohmann::json& schema);

/// The experiment-config schema compiled into the library.
const nlohmann::json& experiment_config_schema();
std::string_view experiment_config_schema_text();

}  // namespace advsec::detail
