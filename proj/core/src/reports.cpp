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

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "advsec/error.hpp"
#include "advsec/pipeline.hpp"

namespace advsec {
namespace {

using nlohmann::json;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

double parse_value(const std::string& s) { return s == "nan" ? std::nan("") : std::stod(s); }

StageStatus parse_status(const std::string& s) {
  for (StageStatus st : {StageStatus::Pending, StageStatus::Done, StageStatus::Skipped, StageStatus::Failed}) {
    if (status_name(st) == s) return st;
  }
  throw FormatError("manifest: unknown stage status '" + s + "'");
}

AccuracyRow row(std::string block, Arch arch, RunMode mode, Metrics m) {
  return AccuracyRow{std::move(block), arch, mode, m};
}

}  // namespace

std::string_view status_name(StageStatus status) {
  switch (status) {
    case StageStatus::Pending: return "pending";
    case StageStatus::Done: return "done";
    case StageStatus::Skipped: return "skipped";
    case StageStatus::Failed: return "failed";
  }
  return "?";
}

StageRecord* RunManifest::find(std::string_view stage) {
  for (StageRecord& s : stages) {
    if (s.name == stage) return &s;
  }
  return nullptr;
}

const StageRecord* RunManifest::find(std::string_view stage) const {
  return const_cast<RunManifest*>(this)->find(stage);
}

std::string manifest_json(const RunManifest& manifest) {
  json j;
  j["version"] = manifest.version;
  j["seed"] = manifest.seed;
  j["complete"] = manifest.complete;
  j["config"] = json::parse(manifest.config_json);
  j["stages"] = json::array();
  for (const StageRecord& s : manifest.stages) {
    json st{{"name", s.name}, {"status", status_name(s.status)}, {"inputs", s.inputs}, {"outputs", s.outputs}};
    if (!s.error.empty()) st["error"] = s.error;
    j["stages"].push_back(std::move(st));
  }
  return j.dump(2) + "\n";
}

RunManifest parse_manifest(std::string_view text) {
  try {
    const json j = json::parse(text);
    RunManifest m;
    m.version = j.at("version").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.complete = j.at("complete").get<bool>();
    m.config_json = j.at("config").dump();
    for (const json& st : j.at("stages")) {
      StageRecord s;
      s.name = st.at("name").get<std::string>();
      s.status = parse_status(st.at("status").get<std::string>());
      s.inputs = st.at("inputs").get<std::map<std::string, std::string>>();
      s.outputs = st.at("outputs").get<std::map<std::string, std::string>>();
      if (st.contains("error")) s.error = st["error"].get<std::string>();
      m.stages.push_back(std::move(s));
    }
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
}

std::string accuracy_csv(const std::vector<AccuracyRow>& rows) {
  std::string out(kAccuracyCsvHeader);
  out += '\n';
  for (const AccuracyRow& r : rows) {
    out += r.block + ',' + std::string(arch_name(r.arch)) + ',' + std::string(mode_name(r.mode)) + ',' +
           fmt(r.metrics.overall) + ',' + fmt(r.metrics.conditional[0]) + ',' + fmt(r.metrics.conditional[1]) + ',' +
           std::to_string(r.metrics.support[0]) + ',' + std::to_string(r.metrics.support[1]) + '\n';
  }
  return out;
}

std::vector<AccuracyRow> parse_accuracy_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kAccuracyCsvHeader) throw FormatError("accuracy csv: unexpected header");
  std::vector<AccuracyRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream fields(line);
    for (std::string cell; std::getline(fields, cell, ',');) f.push_back(cell);
    if (f.size() != 8) throw FormatError("accuracy csv: bad row '" + line + "'");
    try {
      AccuracyRow r;
      r.block = f[0];
      r.arch = parse_arch(f[1]);
      if (f[2] == "single") {
        r.mode = RunMode::Single;
      } else if (f[2] == "multitask") {
        r.mode = RunMode::MultiTask;
      } else {
        throw FormatError("bad mode");
      }
      r.metrics.overall = parse_value(f[3]);
      r.metrics.conditional = {parse_value(f[4]), parse_value(f[5])};
      r.metrics.support = {std::stoul(f[6]), std::stoul(f[7])};
      r.metrics.total = r.metrics.support[0] + r.metrics.support[1];
      rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw FormatError("accuracy csv: bad row '" + line + "': " + e.what());
    }
  }
  return rows;
}

std::vector<AccuracyRow> accuracy_rows(const SingleTaskModel& task1, const SingleTaskModel& task2,
                                       const Dataset& test) {
  const Arch a = task1.arch;
  return {row("task1_all", a, RunMode::Single, evaluate(task1, test)),
          row("task1_legitimate", a, RunMode::Single, evaluate_subset(task1, test, Subset::LegitimateOnly)),
          row("task1_rogue", a, RunMode::Single, evaluate_subset(task1, test, Subset::RogueOnly)),
          row("task2_all", a, RunMode::Single, evaluate(task2, test))};
}

std::vector<AccuracyRow> accuracy_rows(const MultiTaskModel& mtl, const Dataset& test) {
  const auto all = evaluate(mtl, test);
  const Arch a = mtl.arch;
  return {row("task1_all", a, RunMode::MultiTask, all[0]),
          row("task1_legitimate", a, RunMode::MultiTask, evaluate_subset(mtl, test, Subset::LegitimateOnly)[0]),
          row("task1_rogue", a, RunMode::MultiTask, evaluate_subset(mtl, test, Subset::RogueOnly)[0]),
          row("task2_all", a, RunMode::MultiTask, all[1])};
}

}  // namespace advsec
