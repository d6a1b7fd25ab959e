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

#include "json_schema.hpp"

#include <cmath>

#include "advsec/error.hpp"

namespace advsec::detail {
namespace {

using nlohmann::json;

bool has_type(const json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  if (type == "number") return v.is_number();
  if (type == "integer") {
    if (v.is_number_integer()) return true;
    return v.is_number_float() && std::floor(v.get<double>()) == v.get<double>();
  }
  throw ConfigError("schema: unsupported type '" + type + "'");
}

class Validator {
 public:
  explicit Validator(const json& root) : root_(root) {}

  void check(const json& v, const json& s, const std::string& at) {
    if (s.contains("$ref")) {
      check(v, resolve(s["$ref"].get<std::string>()), at);
      return;
    }
    if (s.contains("type")) {
      const json& t = s["type"];
      bool ok = false;
      if (t.is_string()) {
        ok = has_type(v, t.get<std::string>());
      } else {
        for (const json& alt : t) ok = ok || has_type(v, alt.get<std::string>());
      }
      if (!ok) {
        fail(at, "expected type " + t.dump() + ", got " + std::string(v.type_name()));
        return;
      }
    }
    if (s.contains("enum")) {
      bool found = false;
      for (const json& e : s["enum"]) found = found || e == v;
      if (!found) fail(at, "value " + v.dump() + " not in " + s["enum"].dump());
    }
    if (s.contains("oneOf")) {
      int matches = 0;
      for (const json& alt : s["oneOf"]) {
        Validator sub(root_);
        sub.check(v, alt, at);
        matches += sub.errors_.empty();
      }
      if (matches != 1) fail(at, "must match exactly one alternative, matched " + std::to_string(matches));
    }
    if (v.is_number()) check_number(v.get<double>(), s, at);
    if (v.is_string() && s.contains("minLength") && v.get<std::string>().size() < s["minLength"].get<std::size_t>()) {
      fail(at, "string shorter than " + s["minLength"].dump());
    }
    if (v.is_array()) check_array(v, s, at);
    if (v.is_object()) check_object(v, s, at);
  }

  std::vector<std::string> errors_;

 private:
  const json& resolve(const std::string& ref) {
    const std::string prefix = "#/$defs/";
    if (ref.rfind(prefix, 0) != 0) throw ConfigError("schema: unsupported $ref '" + ref + "'");
    return root_.at("$defs").at(ref.substr(prefix.size()));
  }

  void check_number(double x, const json& s, const std::string& at) {
    if (s.contains("minimum") && x < s["minimum"].get<double>()) fail(at, "below minimum " + s["minimum"].dump());
    if (s.contains("maximum") && x > s["maximum"].get<double>()) fail(at, "above maximum " + s["maximum"].dump());
    if (s.contains("exclusiveMinimum") && x <= s["exclusiveMinimum"].get<double>()) {
      fail(at, "must exceed " + s["exclusiveMinimum"].dump());
    }
    if (s.contains("exclusiveMaximum") && x >= s["exclusiveMaximum"].get<double>()) {
      fail(at, "must be below " + s["exclusiveMaximum"].dump());
    }
  }

  void check_array(const json& v, const json& s, const std::string& at) {
    if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>()) {
      fail(at, "needs at least " + s["minItems"].dump() + " items");
    }
    if (s.contains("maxItems") && v.size() > s["maxItems"].get<std::size_t>()) {
      fail(at, "allows at most " + s["maxItems"].dump() + " items");
    }
    if (s.contains("items")) {
      for (std::size_t i = 0; i < v.size(); ++i) check(v[i], s["items"], at + "/" + std::to_string(i));
    }
  }

  void check_object(const json& v, const json& s, const std::string& at) {
    if (s.contains("required")) {
      for (const json& key : s["required"]) {
        if (!v.contains(key.get<std::string>())) fail(at, "missing required key '" + key.get<std::string>() + "'");
      }
    }
    const json empty = json::object();
    const json& props = s.contains("properties") ? s["properties"] : empty;
    const bool closed = s.contains("additionalProperties") && s["additionalProperties"] == false;
    for (const auto& [key, value] : v.items()) {
      if (props.contains(key)) {
        check(value, props[key], at + "/" + key);
      } else if (closed) {
        fail(at, "unknown key '" + key + "'");
      }
    }
  }

  void fail(const std::string& at, const std::string& what) { errors_.push_back((at.empty() ? "/" : at) + ": " + what); }

  const json& root_;
};

}  // namespace

std::vector<std::string> validate_json(const nlohmann::json& instance, const nlohmann::json& schema) {
  Validator v(schema);
  v.check(instance, schema, "");
  return std::move(v.errors_);
}

const nlohmann::json& experiment_config_schema() {
  static const nlohmann::json schema = nlohmann::json::parse(experiment_config_schema_text());
  return schema;
}

}  // namespace advsec::detail
