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

// advsec: command-line driver for the experiment pipeline.
//
// Exit status: 0 success, 1 usage or configuration error, 2 runtime error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "advsec/dataset.hpp"
#include "advsec/error.hpp"
#include "advsec/parallel.hpp"
#include "advsec/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct CommonOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config, "Experiment config (JSON); defaults apply when omitted");
  cmd->add_option("--seed", opts.seed, "Override the config seed");
  cmd->add_option("--out", opts.out, "Override the output directory");
}

advsec::ExperimentConfig resolve(const CommonOptions& opts) {
  advsec::ExperimentConfig cfg =
      opts.config.empty() ? advsec::default_experiment_config() : advsec::load_experiment_config(opts.config);
  if (opts.seed) cfg.seed = *opts.seed;
  if (!opts.out.empty()) cfg.output_dir = opts.out;
  return cfg;
}

void print_manifest_summary(const advsec::ExperimentConfig& cfg) {
  std::cout << "outputs in " << cfg.output_dir.string() << " (manifest " << advsec::kManifestFile << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  advsec::tune_allocator_for_training();

  CLI::App app{"Adversarial attacks and defenses for RF fingerprinting classifiers"};
  app.set_version_flag("--version", std::string(advsec::library_version()));
  app.require_subcommand(1);

  CommonOptions common;
  std::vector<CLI::App*> stage_cmds;
  const std::vector<std::pair<std::string, std::string>> stages{
      {"spoof", "Add KDE-spoofed rogue samples"},
      {"train", "Train the classifiers"},
      {"defend", "Adversarially train and score the defense"},
      {"report", "Write accuracy.csv from saved models"},
  };
  for (const auto& [name, help] : stages) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common(cmd, common);
    stage_cmds.push_back(cmd);
  }

  // gen-data doubles as the converter for external captures.
  CLI::App* gen = app.add_subcommand("gen-data", "Generate the legitimate-device dataset, or convert a raw capture");
  add_common(gen, common);
  stage_cmds.push_back(gen);
  std::string raw_path;
  std::string raw_device = "1";
  std::string raw_auth = "legitimate";
  std::string raw_output;
  bool raw_append = false;
  CLI::Option* raw_opt =
      gen->add_option("--from-raw-f32", raw_path, "Convert interleaved I,Q float32 LE pairs (32 per record)")
          ->check(CLI::ExistingFile);
  gen->add_option("--device", raw_device, "Device label for converted records")
      ->check(CLI::IsMember({"1", "2"}))
      ->needs(raw_opt);
  gen->add_option("--authenticity", raw_auth, "Authenticity label for converted records")
      ->check(CLI::IsMember({"legitimate", "rogue"}))
      ->needs(raw_opt);
  gen->add_option("--dataset-out", raw_output, "Converted dataset file (default <out>/data/converted.iq)")
      ->needs(raw_opt);
  gen->add_flag("--append", raw_append, "Append to an existing dataset file instead of replacing it")->needs(raw_opt);

  CLI::App* attack = app.add_subcommand("attack", "Sweep the configured attacks, or run one attack family");
  add_common(attack, common);
  std::optional<double> psr;
  std::string scope;
  std::string kind = "untargeted";
  std::vector<int> targets;
  std::vector<double> gamma;
  attack->add_option("--psr", psr, "Single PSR in dB; appends rows instead of rewriting the sweep");
  attack->add_option("--scope", scope, "classifier1, classifier2, hybrid or multitask")
      ->check(CLI::IsMember({"classifier1", "classifier2", "hybrid", "multitask"}));
  attack->add_option("--kind", kind, "untargeted or targeted")->check(CLI::IsMember({"untargeted", "targeted"}));
  attack->add_option("--targets", targets, "Target labels for task 1 and task 2")->expected(2);
  attack->add_option("--gamma", gamma, "Gradient weights for hybrid and multitask scopes")->expected(2);

  CLI::App* run = app.add_subcommand("run", "Run every stage in order");
  add_common(run, common);

  CLI::App* show = app.add_subcommand("config", "Print the resolved config as JSON");
  add_common(show, common);
  bool schema = false;
  show->add_flag("--schema", schema, "Print the config JSON schema instead");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const advsec::ExperimentConfig cfg = resolve(common);
    if (show->parsed()) {
      std::cout << (schema ? std::string(advsec::experiment_config_schema()) : advsec::experiment_config_json(cfg));
      return kExitOk;
    }
    if (gen->parsed() && !raw_path.empty()) {
      const std::filesystem::path dest =
          raw_output.empty() ? cfg.output_dir / "data" / "converted.iq" : std::filesystem::path(raw_output);
      advsec::Dataset ds = advsec::convert_raw_f32(
          raw_path, raw_device == "1" ? advsec::Device::Device1 : advsec::Device::Device2,
          raw_auth == "legitimate" ? advsec::Authenticity::Legitimate : advsec::Authenticity::Rogue);
      if (raw_append && std::filesystem::exists(dest)) {
        advsec::Dataset merged = advsec::load_dataset(dest);
        merged.samples.insert(merged.samples.end(), ds.samples.begin(), ds.samples.end());
        ds = std::move(merged);
      }
      ds.recount();
      if (dest.has_parent_path()) std::filesystem::create_directories(dest.parent_path());
      advsec::save_dataset(ds, dest);
      std::cout << "wrote " << ds.size() << " records to " << dest.string() << '\n';
      return kExitOk;
    }
    if (run->parsed()) {
      const advsec::RunManifest m = advsec::run_pipeline(cfg);
      print_manifest_summary(cfg);
      return m.complete ? kExitOk : kExitRuntime;
    }
    if (attack->parsed()) {
      const bool single = psr.has_value() || !scope.empty();
      if (!single) {
        advsec::run_stage(cfg, "attack");
        print_manifest_summary(cfg);
        return kExitOk;
      }
      if (!psr || scope.empty()) throw advsec::ConfigError("--psr and --scope must be given together");
      advsec::AttackPlan plan;
      plan.scope = advsec::parse_scope(scope);
      plan.kind = advsec::parse_kind(kind);
      if (!gamma.empty()) plan.gamma = {gamma[0], gamma[1]};
      plan.gamma.validate();
      if (!targets.empty()) plan.targets = advsec::AttackTargets{targets[0], targets[1]};
      if ((plan.kind == advsec::AttackKind::Targeted) != plan.targets.has_value()) {
        throw advsec::ConfigError("--targets is required for, and only for, --kind targeted");
      }
      const std::vector<double> grid{*psr};
      const advsec::AspCurve curve = advsec::run_single_attack(cfg, plan, grid);
      for (const advsec::AspRow& r : curve.rows) std::cout << advsec::asp_csv_row(r) << '\n';
      return kExitOk;
    }
    for (CLI::App* cmd : stage_cmds) {
      if (cmd->parsed()) {
        advsec::run_stage(cfg, cmd->get_name());
        print_manifest_summary(cfg);
        return kExitOk;
      }
    }
  } catch (const advsec::ConfigError& e) {
    std::cerr << "advsec: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const advsec::StageError& e) {
    std::cerr << "advsec: stage '" << e.stage() << "' failed: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "advsec: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}
