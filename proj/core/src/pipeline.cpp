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

#include "advsec/pipeline.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "advsec/digest.hpp"
#include "advsec/error.hpp"
#include "binary_io.hpp"
#include "json_schema.hpp"

namespace advsec {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- config

json weights_json(TaskWeights w) { return json::array({w.first, w.second}); }

TaskWeights weights_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

json device_json(const DeviceProfile& d) {
  return {{"gain_db", d.gain_db},
          {"phase_offset_rad", d.phase_offset_rad},
          {"cfo_norm", d.cfo_norm},
          {"iq_gain_imbalance", d.iq_gain_imbalance},
          {"snr_db", d.snr_db ? json(*d.snr_db) : json(nullptr)}};
}

void overlay_device(DeviceProfile& d, const json& j) {
  if (j.contains("gain_db")) d.gain_db = j["gain_db"].get<double>();
  if (j.contains("phase_offset_rad")) d.phase_offset_rad = j["phase_offset_rad"].get<double>();
  if (j.contains("cfo_norm")) d.cfo_norm = j["cfo_norm"].get<double>();
  if (j.contains("iq_gain_imbalance")) d.iq_gain_imbalance = j["iq_gain_imbalance"].get<double>();
  if (j.contains("snr_db")) {
    d.snr_db = j["snr_db"].is_null() ? std::nullopt : std::optional<double>(j["snr_db"].get<double>());
  }
}

json attack_json(const AttackPlan& a) {
  json j{{"kind", kind_name(a.kind)}, {"scope", scope_name(a.scope)}, {"gamma", weights_json(a.gamma)}};
  j["targets"] = a.targets ? json::array({a.targets->task1, a.targets->task2}) : json(nullptr);
  return j;
}

AttackPlan attack_from(const json& j) {
  AttackPlan a;
  a.scope = parse_scope(j.at("scope").get<std::string>());
  if (j.contains("kind")) a.kind = parse_kind(j["kind"].get<std::string>());
  if (j.contains("gamma")) a.gamma = weights_from(j["gamma"]);
  if (j.contains("targets") && !j["targets"].is_null()) {
    a.targets = AttackTargets{j["targets"][0].get<int>(), j["targets"][1].get<int>()};
  }
  return a;
}

RunMode parse_mode(const std::string& s) {
  if (s == "single") return RunMode::Single;
  if (s == "multitask") return RunMode::MultiTask;
  if (s == "both") return RunMode::Both;
  throw ConfigError("unknown mode '" + s + "'");
}

void check_cross_fields(const ExperimentConfig& cfg) {
  std::vector<std::string> problems;
  auto guard = [&](const std::string& where, auto&& fn) {
    try {
      fn();
    } catch (const ConfigError& e) {
      problems.push_back(where + ": " + e.what());
    }
  };
  guard("/dataset/n_total", [&] {
    if (!cfg.dataset.path && cfg.dataset.generator.n_total % 4 != 0) {
      throw ConfigError("must be a multiple of 4 (four equal cells)");
    }
  });
  guard("/train/task_weights", [&] { cfg.train.weights.validate(); });
  for (std::size_t i = 0; i < cfg.attacks.size(); ++i) {
    const AttackPlan& a = cfg.attacks[i];
    guard("/attacks/" + std::to_string(i), [&] {
      a.gamma.validate();
      if ((a.kind == AttackKind::Targeted) != a.targets.has_value()) {
        throw ConfigError("targets must be given exactly when kind is targeted");
      }
      if (a.scope == AttackScope::MultiTask && !cfg.wants_multitask()) {
        throw ConfigError("multitask scope needs mode multitask or both");
      }
    });
  }
  for (std::size_t i = 0; i < cfg.defense.scopes.size(); ++i) {
    const AttackScope s = cfg.defense.scopes[i];
    guard("/defense/scopes/" + std::to_string(i), [&] {
      if (s == AttackScope::MultiTask && !cfg.wants_multitask()) {
        throw ConfigError("multitask scope needs mode multitask or both");
      }
      if (s != AttackScope::MultiTask && !cfg.wants_single()) {
        throw ConfigError("single-task scopes need mode single or both");
      }
    });
  }
  if (!problems.empty()) {
    std::string msg = "invalid experiment config:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
}

// ---------------------------------------------------------------- stages

struct Layout {
  fs::path out;

  fs::path legitimate() const { return out / "data" / "legitimate.iq"; }
  fs::path dataset() const { return out / "data" / "dataset.iq"; }
  fs::path single(TaskId t, bool robust) const {
    return out / "models" / ((robust ? "robust_" : "") + std::string(task_name(t)) + ".lann");
  }
  fs::path multitask(bool robust) const { return out / "models" / (robust ? "robust_mtl.json" : "mtl.json"); }
  fs::path training() const { return out / "training.csv"; }
  fs::path manifest() const { return out / kManifestFile; }
  fs::path accuracy() const { return out / kAccuracyFile; }
  fs::path asp() const { return out / kAspFile; }
  fs::path defense() const { return out / kDefenseFile; }

  std::string rel(const fs::path& p) const { return p.lexically_relative(out).generic_string(); }
};

void record(std::map<std::string, std::string>& into, const Layout& at, const fs::path& file) {
  into[at.rel(file)] = sha256_file(file);
}

/// A multi-task checkpoint is a manifest plus three blocks; all are hashed.
void record_multitask(std::map<std::string, std::string>& into, const Layout& at, const fs::path& manifest) {
  record(into, at, manifest);
  for (const char* block : {"shared", "head1", "head2"}) {
    record(into, at, manifest.parent_path() / (manifest.stem().string() + "." + block + ".lann"));
  }
}

std::uint64_t data_seed(const ExperimentConfig& cfg) { return derive_seed(cfg.seed, "data"); }

constexpr std::uint64_t kTask1Slot = 1;
constexpr std::uint64_t kTask2Slot = 2;
constexpr std::uint64_t kMultiTaskSlot = 3;

std::uint64_t init_seed(const ExperimentConfig& cfg, std::uint64_t slot) { return derive_seed(cfg.seed, "init", slot); }

TrainConfig train_config(const ExperimentConfig& cfg, std::string_view purpose, std::uint64_t slot) {
  TrainConfig t = cfg.train;
  t.seed = derive_seed(cfg.seed, purpose, slot);
  return t;
}

Dataset load_input_dataset(const ExperimentConfig& cfg, const Layout& at, StageRecord& rec) {
  if (cfg.dataset.path) {
    rec.inputs[cfg.dataset.path->generic_string()] = sha256_file(*cfg.dataset.path);
    return load_dataset(*cfg.dataset.path);
  }
  record(rec.inputs, at, at.dataset());
  return load_dataset(at.dataset());
}

struct Splits {
  Dataset all;
  Dataset train;
  Dataset test;
  double clamp_bound = 0.0;
};

Splits load_splits(const ExperimentConfig& cfg, const Layout& at, StageRecord& rec) {
  Splits s;
  s.all = load_input_dataset(cfg, at, rec);
  auto [train, test] = split(s.all, cfg.dataset.train_fraction, derive_seed(cfg.seed, "split"));
  s.train = std::move(train);
  s.test = std::move(test);
  s.clamp_bound = max_abs_component(s.all);
  return s;
}

struct Models {
  std::optional<SingleTaskModel> task1;
  std::optional<SingleTaskModel> task2;
  std::optional<MultiTaskModel> mtl;
};

Models load_models(const ExperimentConfig& cfg, const Layout& at, StageRecord& rec, bool robust) {
  Models m;
  if (cfg.wants_single()) {
    for (TaskId t : {TaskId::Device, TaskId::Authenticity}) {
      const fs::path p = at.single(t, robust);
      record(rec.inputs, at, p);
      (t == TaskId::Device ? m.task1 : m.task2) = load_single(p);
    }
  }
  if (cfg.wants_multitask()) {
    record_multitask(rec.inputs, at, at.multitask(robust));
    m.mtl = load_multitask(at.multitask(robust));
  }
  return m;
}

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

AttackSpec spec_for(const AttackPlan& plan, double clamp_bound) {
  AttackSpec spec;
  spec.kind = plan.kind;
  spec.scope = plan.scope;
  spec.gamma = plan.gamma;
  spec.targets = plan.targets;
  spec.clamp_bound = clamp_bound;
  return spec;
}

AspCurve evaluate_plan(const ExperimentConfig& cfg, const Models& m, const Splits& s, const AttackPlan& plan,
                       std::span<const double> grid, bool include_baseline) {
  const AttackSpec spec = spec_for(plan, s.clamp_bound);
  AspOptions opts;
  opts.include_baseline = include_baseline;
  opts.seed = derive_seed(cfg.seed, "gaussian");
  if (plan.scope != AttackScope::MultiTask && m.task1 && m.task2) {
    return evaluate_asp(*m.task1, *m.task2, s.test, spec, grid, opts);
  }
  if (!m.mtl) throw ConfigError("attack scope '" + std::string(scope_name(plan.scope)) + "' has no model to attack");
  return evaluate_asp(*m.mtl, s.test, spec, grid, opts);
}

void stage_gen_data(const ExperimentConfig& cfg, const Layout& at, StageRecord& rec) {
  if (cfg.dataset.path) {
    rec.status = StageStatus::Skipped;
    rec.inputs[cfg.dataset.path->generic_string()] = sha256_file(*cfg.dataset.path);
    return;
  }
  save_dataset(generate_legitimate(cfg.dataset.generator, data_seed(cfg)), at.legitimate());
  record(rec.outputs, at, at.legitimate());
  rec.status = StageStatus::Done;
}

void stage_spoof(const ExperimentConfig& cfg, const Layout& at, StageRecord& rec) {
  if (cfg.dataset.path) {
    rec.status = StageStatus::Skipped;
    rec.inputs[cfg.dataset.path->generic_string()] = sha256_file(*cfg.dataset.path);
    return;
  }
  record(rec.inputs, at, at.legitimate());
  const Dataset legit = load_dataset(at.legitimate());
  save_dataset(spoof_rogues(legit, cfg.dataset.generator, data_seed(cfg)), at.dataset());
  record(rec.outputs, at, at.dataset());
  rec.status = StageStatus::Done;
}

void stage_train(const ExperimentConfig& cfg, const Layout& at, StageRecord& rec) {
  const Splits s = load_splits(cfg, at, rec);
  std::string history = "model,epoch,loss,validation_score\n";
  auto log_single = [&](const std::string& name, const TrainHistory& h) {
    for (const EpochRecord& e : h.epochs) {
      history += name + ',' + std::to_string(e.epoch) + ',' + fmt_g(e.train_loss) + ',' + fmt_g(e.validation_score) + '\n';
    }
  };
  if (cfg.wants_single()) {
    for (auto [task, slot] : {std::pair{TaskId::Device, kTask1Slot}, std::pair{TaskId::Authenticity, kTask2Slot}}) {
      SingleTaskModel model = build_single(cfg.arch, task, init_seed(cfg, slot));
      log_single(std::string(task_name(task)), train_single(model, s.train, train_config(cfg, "train", slot)));
      save_single(model, at.single(task, false));
      record(rec.outputs, at, at.single(task, false));
    }
  }
  if (cfg.wants_multitask()) {
    MultiTaskModel model = build_multitask(cfg.arch, init_seed(cfg, kMultiTaskSlot), cfg.train.weights);
    const MultiTaskHistory h = train_multitask(model, s.train, train_config(cfg, "train", kMultiTaskSlot));
    for (const MultiTaskEpochRecord& e : h.epochs) {
      history += "multitask," + std::to_string(e.epoch) + ',' + fmt_g(e.joint) + ',' + fmt_g(e.validation_score) + '\n';
    }
    save_multitask(model, at.multitask(false));
    record_multitask(rec.outputs, at, at.multitask(false));
  }
  detail::write_file(at.training(), history);
  record(rec.outputs, at, at.training());
  rec.status = StageStatus::Done;
}

void stage_attack(const ExperimentConfig& cfg, const Layout& at, StageRecord& rec) {
  const Splits s = load_splits(cfg, at, rec);
  const Models m = load_models(cfg, at, rec, false);
  AspCurve all;
  for (const AttackPlan& plan : cfg.attacks) {
    const AspCurve c = evaluate_plan(cfg, m, s, plan, cfg.psr_grid, cfg.gaussian_baseline);
    all.rows.insert(all.rows.end(), c.rows.begin(), c.rows.end());
  }
  detail::write_file(at.asp(), asp_csv(all));
  record(rec.outputs, at, at.asp());
  rec.status = StageStatus::Done;
}

void stage_defend(const ExperimentConfig& cfg, const Layout& at, StageRecord& rec) {
  if (!cfg.defense.enabled) {
    rec.status = StageStatus::Skipped;
    return;
  }
  const Splits s = load_splits(cfg, at, rec);
  const Models base = load_models(cfg, at, rec, false);

  DefenseConfig dc;
  dc.attack.psr_db = cfg.defense.psr_db;
  dc.attack.clamp_bound = s.clamp_bound;
  dc.ratio = cfg.defense.ratio;
  dc.mean_power = mean_signal_power(s.train);

  AspOptions opts;
  opts.seed = derive_seed(cfg.seed, "gaussian");
  DefenseReport report;
  auto add = [&](const DefenseReport& r) { report.rows.insert(report.rows.end(), r.rows.begin(), r.rows.end()); };
  auto spec_of = [&](AttackScope scope) {
    AttackSpec spec = dc.attack;
    spec.scope = scope;
    return spec;
  };

  if (cfg.wants_single()) {
    std::optional<SingleTaskModel> robust[2];
    for (auto [task, slot] : {std::pair{TaskId::Device, kTask1Slot}, std::pair{TaskId::Authenticity, kTask2Slot}}) {
      SingleTaskModel model = build_single(cfg.arch, task, init_seed(cfg, slot));
      dc.train = train_config(cfg, "defend", slot);
      adversarial_training(model, s.train, dc);
      save_single(model, at.single(task, true));
      record(rec.outputs, at, at.single(task, true));
      robust[slot - 1] = std::move(model);
    }
    for (AttackScope scope : cfg.defense.scopes) {
      if (scope == AttackScope::MultiTask) continue;
      add(evaluate_defense(*robust[0], *robust[1], *base.task1, *base.task2, s.test, spec_of(scope), opts));
    }
  }
  if (cfg.wants_multitask()) {
    MultiTaskModel model = build_multitask(cfg.arch, init_seed(cfg, kMultiTaskSlot), cfg.train.weights);
    dc.train = train_config(cfg, "defend", kMultiTaskSlot);
    adversarial_training(model, s.train, dc);
    save_multitask(model, at.multitask(true));
    record_multitask(rec.outputs, at, at.multitask(true));
    for (AttackScope scope : cfg.defense.scopes) {
      if (scope == AttackScope::MultiTask) add(evaluate_defense(model, *base.mtl, s.test, spec_of(scope), opts));
    }
  }
  detail::write_file(at.defense(), defense_csv(report));
  record(rec.outputs, at, at.defense());
  rec.status = StageStatus::Done;
}

void stage_report(const ExperimentConfig& cfg, const Layout& at, StageRecord& rec) {
  const Splits s = load_splits(cfg, at, rec);
  const Models m = load_models(cfg, at, rec, false);
  std::vector<AccuracyRow> rows;
  if (m.task1) rows = accuracy_rows(*m.task1, *m.task2, s.test);
  if (m.mtl) {
    const auto more = accuracy_rows(*m.mtl, s.test);
    rows.insert(rows.end(), more.begin(), more.end());
  }
  detail::write_file(at.accuracy(), accuracy_csv(rows));
  record(rec.outputs, at, at.accuracy());
  rec.status = StageStatus::Done;
}

using StageFn = void (*)(const ExperimentConfig&, const Layout&, StageRecord&);

StageFn stage_fn(std::string_view name) {
  if (name == "gen-data") return stage_gen_data;
  if (name == "spoof") return stage_spoof;
  if (name == "train") return stage_train;
  if (name == "attack") return stage_attack;
  if (name == "defend") return stage_defend;
  if (name == "report") return stage_report;
  throw ConfigError("unknown stage '" + std::string(name) + "'");
}

std::string canonical_config(const ExperimentConfig& cfg) { return json::parse(experiment_config_json(cfg)).dump(); }

RunManifest fresh_manifest(const ExperimentConfig& cfg) {
  RunManifest m;
  m.version = std::string(library_version());
  m.seed = cfg.seed;
  m.config_json = canonical_config(cfg);
  for (const std::string& name : stage_names()) m.stages.push_back(StageRecord{name, StageStatus::Pending, {}, {}, {}});
  return m;
}

/// The manifest on disk when it belongs to this config, else a fresh one.
RunManifest open_manifest(const ExperimentConfig& cfg, const Layout& at) {
  if (fs::exists(at.manifest())) {
    try {
      RunManifest m = parse_manifest(detail::read_file(at.manifest()));
      if (m.config_json == canonical_config(cfg) && m.stages.size() == stage_names().size()) return m;
    } catch (const FormatError&) {
      // unreadable manifests are replaced
    }
  }
  return fresh_manifest(cfg);
}

void save_manifest(const Layout& at, RunManifest& m) {
  m.complete = true;
  for (const StageRecord& s : m.stages) {
    m.complete = m.complete && (s.status == StageStatus::Done || s.status == StageStatus::Skipped);
  }
  detail::write_file(at.manifest(), manifest_json(m));
}

void execute(const ExperimentConfig& cfg, const Layout& at, RunManifest& m, std::string_view stage) {
  const StageFn fn = stage_fn(stage);
  StageRecord& rec = *m.find(stage);
  rec = StageRecord{std::string(stage), StageStatus::Pending, {}, {}, {}};
  try {
    fn(cfg, at, rec);
  } catch (const std::exception& e) {
    rec.status = StageStatus::Failed;
    rec.error = e.what();
    save_manifest(at, m);
    throw StageError(std::string(stage), e.what());
  }
  save_manifest(at, m);
}

}  // namespace

std::string_view library_version() { return ADVSEC_VERSION; }

std::string_view mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::Single: return "single";
    case RunMode::MultiTask: return "multitask";
    case RunMode::Both: return "both";
  }
  return "?";
}

ExperimentConfig default_experiment_config() {
  ExperimentConfig cfg;
  cfg.attacks = {
      {AttackKind::Untargeted, AttackScope::Classifier1, {}, std::nullopt},
      {AttackKind::Untargeted, AttackScope::Classifier2, {}, std::nullopt},
      {AttackKind::Untargeted, AttackScope::Hybrid, {}, std::nullopt},
      {AttackKind::Targeted, AttackScope::Hybrid, {}, AttackTargets{0, 0}},
      {AttackKind::Untargeted, AttackScope::MultiTask, {}, std::nullopt},
      {AttackKind::Targeted, AttackScope::MultiTask, {}, AttackTargets{0, 0}},
  };
  return cfg;
}

ExperimentConfig parse_experiment_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  const std::vector<std::string> errors = detail::validate_json(j, detail::experiment_config_schema());
  if (!errors.empty()) {
    std::string msg = "config does not match the schema:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }

  ExperimentConfig cfg = default_experiment_config();
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    if (d.contains("path") && !d["path"].is_null()) cfg.dataset.path = d["path"].get<std::string>();
    if (d.contains("n_total")) cfg.dataset.generator.n_total = d["n_total"].get<std::size_t>();
    if (d.contains("train_fraction")) cfg.dataset.train_fraction = d["train_fraction"].get<double>();
    if (d.contains("kde_bandwidth")) cfg.dataset.generator.kde_bandwidth = d["kde_bandwidth"].get<double>();
    if (d.contains("devices")) {
      for (std::size_t k = 0; k < 2; ++k) overlay_device(cfg.dataset.generator.devices[k], d["devices"][k]);
    }
    if (d.contains("rogues")) {
      for (std::size_t k = 0; k < 2; ++k) {
        const json& r = d["rogues"][k];
        RogueTransform& t = cfg.dataset.generator.rogues[k];
        if (r.contains("gain_offset_db")) t.gain_offset_db = r["gain_offset_db"].get<double>();
        if (r.contains("phase_max_rad")) t.phase_max_rad = r["phase_max_rad"].get<double>();
      }
    }
  }
  if (j.contains("model")) {
    if (j["model"].contains("arch")) cfg.arch = parse_arch(j["model"]["arch"].get<std::string>());
    if (j["model"].contains("mode")) cfg.mode = parse_mode(j["model"]["mode"].get<std::string>());
  }
  if (j.contains("train")) {
    const json& t = j["train"];
    if (t.contains("epochs")) cfg.train.epochs = t["epochs"].get<std::size_t>();
    if (t.contains("batch_size")) cfg.train.batch_size = t["batch_size"].get<std::size_t>();
    if (t.contains("learning_rate")) cfg.train.adam.learning_rate = t["learning_rate"].get<double>();
    if (t.contains("beta1")) cfg.train.adam.beta1 = t["beta1"].get<double>();
    if (t.contains("beta2")) cfg.train.adam.beta2 = t["beta2"].get<double>();
    if (t.contains("adam_epsilon")) cfg.train.adam.epsilon = t["adam_epsilon"].get<double>();
    if (t.contains("validation_fraction")) cfg.train.validation_fraction = t["validation_fraction"].get<double>();
    if (t.contains("task_weights")) cfg.train.weights = weights_from(t["task_weights"]);
  }
  if (j.contains("attacks")) {
    cfg.attacks.clear();
    for (const json& a : j["attacks"]) cfg.attacks.push_back(attack_from(a));
  }
  if (j.contains("psr_grid")) cfg.psr_grid = j["psr_grid"].get<std::vector<double>>();
  if (j.contains("gaussian_baseline")) cfg.gaussian_baseline = j["gaussian_baseline"].get<bool>();
  if (j.contains("defense")) {
    const json& d = j["defense"];
    if (d.contains("enabled")) cfg.defense.enabled = d["enabled"].get<bool>();
    if (d.contains("psr_db")) cfg.defense.psr_db = d["psr_db"].get<double>();
    if (d.contains("ratio")) cfg.defense.ratio = d["ratio"].get<double>();
    if (d.contains("scopes")) {
      cfg.defense.scopes.clear();
      for (const json& s : d["scopes"]) cfg.defense.scopes.push_back(parse_scope(s.get<std::string>()));
    }
  }
  if (!j.contains("defense") || !j["defense"].contains("scopes")) {
    // Default scopes follow the chosen mode.
    std::erase_if(cfg.defense.scopes, [&](AttackScope s) {
      return s == AttackScope::MultiTask ? !cfg.wants_multitask() : !cfg.wants_single();
    });
  }
  if (!j.contains("attacks")) {
    std::erase_if(cfg.attacks, [&](const AttackPlan& a) {
      return a.scope == AttackScope::MultiTask ? !cfg.wants_multitask() : !cfg.wants_single();
    });
  }
  check_cross_fields(cfg);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = detail::read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("cannot read config file " + path.string() + ": " + e.what());
  }
  try {
    return parse_experiment_config(text);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string experiment_config_json(const ExperimentConfig& cfg) {
  const GeneratorConfig& g = cfg.dataset.generator;
  json j;
  j["seed"] = cfg.seed;
  j["output_dir"] = cfg.output_dir.generic_string();
  j["dataset"] = {
      {"path", cfg.dataset.path ? json(cfg.dataset.path->generic_string()) : json(nullptr)},
      {"n_total", g.n_total},
      {"train_fraction", cfg.dataset.train_fraction},
      {"kde_bandwidth", g.kde_bandwidth},
      {"devices", json::array({device_json(g.devices[0]), device_json(g.devices[1])})},
      {"rogues", json::array({json{{"gain_offset_db", g.rogues[0].gain_offset_db},
                                   {"phase_max_rad", g.rogues[0].phase_max_rad}},
                              json{{"gain_offset_db", g.rogues[1].gain_offset_db},
                                   {"phase_max_rad", g.rogues[1].phase_max_rad}}})},
  };
  j["model"] = {{"arch", arch_name(cfg.arch)}, {"mode", mode_name(cfg.mode)}};
  j["train"] = {{"epochs", cfg.train.epochs},
                {"batch_size", cfg.train.batch_size},
                {"learning_rate", cfg.train.adam.learning_rate},
                {"beta1", cfg.train.adam.beta1},
                {"beta2", cfg.train.adam.beta2},
                {"adam_epsilon", cfg.train.adam.epsilon},
                {"validation_fraction", cfg.train.validation_fraction},
                {"task_weights", weights_json(cfg.train.weights)}};
  j["attacks"] = json::array();
  for (const AttackPlan& a : cfg.attacks) j["attacks"].push_back(attack_json(a));
  j["psr_grid"] = cfg.psr_grid;
  j["gaussian_baseline"] = cfg.gaussian_baseline;
  json scopes = json::array();
  for (AttackScope s : cfg.defense.scopes) scopes.push_back(scope_name(s));
  j["defense"] = {{"enabled", cfg.defense.enabled},
                  {"psr_db", cfg.defense.psr_db},
                  {"ratio", cfg.defense.ratio},
                  {"scopes", scopes}};
  return j.dump(2) + "\n";
}

std::string_view experiment_config_schema() { return detail::experiment_config_schema_text(); }

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"gen-data", "spoof", "train", "attack", "defend", "report"};
  return names;
}

void run_stage(const ExperimentConfig& cfg, std::string_view stage) {
  const Layout at{cfg.output_dir};
  stage_fn(stage);  // reject unknown names before touching the manifest
  RunManifest m = open_manifest(cfg, at);
  execute(cfg, at, m, stage);
}

RunManifest run_pipeline(const ExperimentConfig& cfg) {
  const Layout at{cfg.output_dir};
  RunManifest m = fresh_manifest(cfg);
  save_manifest(at, m);
  for (const std::string& stage : stage_names()) execute(cfg, at, m, stage);
  return m;
}

AspCurve run_single_attack(const ExperimentConfig& cfg, const AttackPlan& plan, std::span<const double> psr_grid) {
  const Layout at{cfg.output_dir};
  RunManifest m = open_manifest(cfg, at);
  StageRecord& rec = *m.find("attack");
  AspCurve curve;
  try {
    const Splits s = load_splits(cfg, at, rec);
    const Models models = load_models(cfg, at, rec, false);
    curve = evaluate_plan(cfg, models, s, plan, psr_grid, false);
    append_asp_csv(at.asp(), curve);
  } catch (const std::exception& e) {
    rec.status = StageStatus::Failed;
    rec.error = e.what();
    save_manifest(at, m);
    throw StageError("attack", e.what());
  }
  record(rec.outputs, at, at.asp());
  rec.status = StageStatus::Done;
  rec.error.clear();
  save_manifest(at, m);
  return curve;
}

}  // namespace advsec
