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


#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "advsec/attacks.hpp"
#include "advsec/error.hpp"
#include "test_support.hpp"

namespace advsec {
namespace {

constexpr std::size_t kIn = kIqValues;

// One softmax-linear layer, z = W^T x + b with W of shape (64, 2).
Network linear_model(std::uint64_t seed) {
  Network net = Network::with_zero_parameters({DenseSpec{2, Activation::SoftMax}}, {2, 32}, 0);
  Rng r(seed);
  for (double& v : net.parameters()[0].data()) v = r.uniform(-1.0, 1.0);
  net.parameters()[1] = Tensor({2}, std::vector<double>{0.1, -0.2});
  return net;
}

// Hand gradient of -log p_y for the linear model: W (p - onehot(y)).
std::vector<double> linear_gradient(const Network& net, std::span<const double> x, int y) {
  const Tensor& w = net.parameters()[0];
  const Tensor& b = net.parameters()[1];
  double z[2] = {b[0], b[1]};
  for (std::size_t i = 0; i < kIn; ++i) {
    z[0] += w[2 * i] * x[i];
    z[1] += w[2 * i + 1] * x[i];
  }
  const double m = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - m), e1 = std::exp(z[1] - m);
  const double d[2] = {e0 / (e0 + e1) - (y == 0), e1 / (e0 + e1) - (y == 1)};
  std::vector<double> g(kIn);
  for (std::size_t i = 0; i < kIn; ++i) g[i] = w[2 * i] * d[0] + w[2 * i + 1] * d[1];
  return g;
}

double sgn(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

Tensor batch(std::size_t n, std::uint64_t seed) {
  Tensor t({n, 2, 32});
  Rng r(seed);
  for (double& v : t.data()) v = 0.8 * r.normal();
  return t;
}

void expect_sign_set(const Tensor& delta, double eps) {
  for (double v : delta.data()) EXPECT_TRUE(v == eps || v == -eps || v == 0.0) << v;
}

TEST(Psr, EpsilonValues) {
  EXPECT_DOUBLE_EQ(psr_to_epsilon(0.0, 1.0), 1.0);
  EXPECT_NEAR(psr_to_epsilon(-3.0, 1.0), 0.70794578438413791, 1e-15);
  EXPECT_NEAR(psr_to_epsilon(-10.0, 4.0), 0.63245553203367587, 1e-15);
  EXPECT_THROW(psr_to_epsilon(0.0, 0.0), ConfigError);
  EXPECT_THROW(psr_to_epsilon(0.0, -1.0), ConfigError);
}

TEST(Psr, DefaultGrid) {
  const auto g = default_psr_grid();
  ASSERT_EQ(g.size(), 21u);
  EXPECT_EQ(g.front(), -20.0);
  EXPECT_EQ(g.back(), 0.0);
}

TEST(ScaledSign, ZeroStaysZero) {
  const Tensor g({4}, std::vector<double>{-3.0, 0.0, 1e-300, -0.0});
  const Tensor d = scaled_sign(g, 0.5);
  EXPECT_EQ(d[0], -0.5);
  EXPECT_EQ(d[1], 0.0);
  EXPECT_EQ(d[2], 0.5);
  EXPECT_EQ(d[3], 0.0);
}

TEST(Fgsm, UntargetedMatchesHandGradient) {
  const Network net = linear_model(1);
  const Tensor x = batch(3, 2);
  const std::vector<int> y{0, 1, 1};
  const double eps = 0.25;
  const Perturbation p = fgsm_untargeted(net, x, y, eps);
  EXPECT_EQ(p.epsilon, eps);
  for (std::size_t n = 0; n < 3; ++n) {
    const auto g = linear_gradient(net, x.row(n), y[n]);
    for (std::size_t i = 0; i < kIn; ++i) EXPECT_EQ(p.delta.row(n)[i], eps * sgn(g[i]));
  }
}

TEST(Fgsm, TargetedMatchesHandGradient) {
  const Network net = linear_model(3);
  const Tensor x = batch(2, 4);
  const std::vector<int> target{1, 1};
  const Perturbation p = fgsm_targeted(net, x, target, 0.1);
  for (std::size_t n = 0; n < 2; ++n) {
    const auto g = linear_gradient(net, x.row(n), 1);
    for (std::size_t i = 0; i < kIn; ++i) EXPECT_EQ(p.delta.row(n)[i], -0.1 * sgn(g[i]));
  }
}

TEST(Fgsm, HybridMatchesHandWeightedGradient) {
  const Network m1 = linear_model(5), m2 = linear_model(6);
  const Tensor x = batch(2, 7);
  const std::vector<int> y1{0, 1}, y2{1, 1};
  const TaskWeights gamma{0.3, 0.7};
  const Perturbation p = fgsm_hybrid(m1, m2, x, y1, y2, gamma, 0.2);
  for (std::size_t n = 0; n < 2; ++n) {
    const auto g1 = linear_gradient(m1, x.row(n), y1[n]);
    const auto g2 = linear_gradient(m2, x.row(n), y2[n]);
    for (std::size_t i = 0; i < kIn; ++i) {
      EXPECT_EQ(p.delta.row(n)[i], 0.2 * sgn(0.3 * g1[i] + 0.7 * g2[i]));
    }
  }
}

TEST(Fgsm, ZeroEpsilonGivesZeroPerturbation) {
  const MultiTaskModel mtl = build_multitask(Arch::FNN, 8);
  const Network net = build_single(Arch::CNN, TaskId::Device, 8).net;
  const Tensor x = batch(4, 9);
  const std::vector<int> y{0, 1, 0, 1};
  for (const Perturbation& p :
       {fgsm_untargeted(net, x, y, 0.0), fgsm_targeted(net, x, y, 0.0), fgsm_hybrid(net, net, x, y, y, {}, 0.0),
        fgsm_multitask_untargeted(mtl, x, y, y, {}, 0.0), fgsm_multitask_targeted(mtl, x, y, y, {}, 0.0)}) {
    for (double v : p.delta.data()) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(apply_and_clamp(x, p.delta, 10.0), x);
  }
  EXPECT_THROW(fgsm_untargeted(net, x, y, -1.0), ConfigError);
}

TEST(Fgsm, ComponentsAreSignsTimesEpsilon) {
  const Network net = build_single(Arch::CNN, TaskId::Device, 10).net;
  const MultiTaskModel mtl = build_multitask(Arch::CNN, 10);
  const Tensor x = batch(5, 11);
  const std::vector<int> y{0, 1, 0, 1, 1};
  expect_sign_set(fgsm_untargeted(net, x, y, 0.3).delta, 0.3);
  expect_sign_set(fgsm_multitask_untargeted(mtl, x, y, y, {}, 0.3).delta, 0.3);
}

TEST(Fgsm, TargetedIsNegatedUntargetedAtTarget) {
  const Network net = build_single(Arch::FNN, TaskId::Device, 12).net;
  const Network net2 = build_single(Arch::FNN, TaskId::Authenticity, 13).net;
  const MultiTaskModel mtl = build_multitask(Arch::FNN, 12);
  const Tensor x = batch(6, 13);
  const std::vector<int> t1(6, 0), t2(6, 1);
  Tensor neg = fgsm_untargeted(net, x, t1, 0.4).delta;
  neg *= -1.0;
  EXPECT_EQ(fgsm_targeted(net, x, t1, 0.4).delta, neg);

  Tensor neg_h = fgsm_hybrid(net, net2, x, t1, t2, {0.5, 0.5}, 0.4).delta;
  neg_h *= -1.0;
  EXPECT_EQ(fgsm_hybrid_targeted(net, net2, x, t1, t2, {0.5, 0.5}, 0.4).delta, neg_h);

  Tensor neg_m = fgsm_multitask_untargeted(mtl, x, t1, t2, {0.5, 0.5}, 0.4).delta;
  neg_m *= -1.0;
  EXPECT_EQ(fgsm_multitask_targeted(mtl, x, t1, t2, {0.5, 0.5}, 0.4).delta, neg_m);
}

TEST(Fgsm, HybridDegeneratesToSingleModel) {
  const Network m1 = build_single(Arch::CNN, TaskId::Device, 14).net;
  const Network m2 = build_single(Arch::CNN, TaskId::Authenticity, 15).net;
  const Tensor x = batch(4, 16);
  const std::vector<int> y1{0, 1, 1, 0}, y2{1, 1, 0, 0};
  EXPECT_EQ(fgsm_hybrid(m1, m2, x, y1, y2, {1.0, 0.0}, 0.3).delta, fgsm_untargeted(m1, x, y1, 0.3).delta);
  EXPECT_EQ(fgsm_hybrid(m1, m2, x, y1, y2, {0.0, 1.0}, 0.3).delta, fgsm_untargeted(m2, x, y2, 0.3).delta);
  // Same model and labels on both sides: any gamma collapses to one gradient.
  EXPECT_EQ(fgsm_hybrid(m1, m1, x, y1, y1, {0.3, 0.7}, 0.3).delta, fgsm_untargeted(m1, x, y1, 0.3).delta);
}

// Head `task` of a multi-task model as one standalone network.
Network standalone_head(const MultiTaskModel& mtl, TaskId task) {
  Network net = Network::with_zero_parameters(architecture_layers(mtl.arch), {2, 32}, 0);
  std::vector<Tensor> params = mtl.shared.parameters();
  for (const Tensor& t : mtl.head(task).parameters()) params.push_back(t);
  net.parameters() = params;
  return net;
}

TEST(Fgsm, MultiTaskDegeneratesToOneHead) {
  for (Arch a : {Arch::FNN, Arch::CNN}) {
    const MultiTaskModel mtl = build_multitask(a, 17);
    const Tensor x = batch(4, 18);
    const std::vector<int> y1{0, 1, 1, 0}, y2{1, 1, 0, 0};
    EXPECT_EQ(fgsm_multitask_untargeted(mtl, x, y1, y2, {1.0, 0.0}, 0.2).delta,
              fgsm_untargeted(standalone_head(mtl, TaskId::Device), x, y1, 0.2).delta);
    EXPECT_EQ(fgsm_multitask_untargeted(mtl, x, y1, y2, {0.0, 1.0}, 0.2).delta,
              fgsm_untargeted(standalone_head(mtl, TaskId::Authenticity), x, y2, 0.2).delta);
  }
}

TEST(Fgsm, LabelCountMustMatchBatch) {
  const Network net = linear_model(1);
  EXPECT_THROW(fgsm_untargeted(net, batch(3, 1), std::vector<int>{0, 1}, 0.1), ConfigError);
}

TEST(Gaussian, PowerMatchesEpsilonSquared) {
  Rng rng(19);
  const double eps = 0.3;
  const Perturbation p = gaussian_baseline({1563, 2, 32}, eps, rng);  // 100032 draws
  double power = 0.0;
  for (double v : p.delta.data()) power += v * v;
  power /= static_cast<double>(p.delta.size());
  EXPECT_NEAR(power / (eps * eps), 1.0, 0.02);
  Rng a(20), b(20), c(20);
  EXPECT_EQ(gaussian_baseline({2, 2, 32}, eps, a).delta, gaussian_baseline({2, 2, 32}, eps, b).delta);
  const Perturbation silent = gaussian_baseline({2, 2, 32}, 0.0, c);
  for (double v : silent.delta.data()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(gaussian_baseline({1}, -0.1, c), ConfigError);
}

TEST(Clamp, Cases) {
  const Tensor x({4}, std::vector<double>{0.2, 1.0, -1.0, 0.5});
  const Tensor d({4}, std::vector<double>{0.1, 0.1, -0.1, -0.1});
  const Tensor y = apply_and_clamp(x, d, 1.0);
  EXPECT_EQ(y[0], 0.2 + 0.1);
  EXPECT_EQ(y[1], 1.0);
  EXPECT_EQ(y[2], -1.0);
  EXPECT_EQ(y[3], 0.5 - 0.1);
  EXPECT_EQ(apply_and_clamp(x, Tensor({4}, 0.0), 1.0), x);
  EXPECT_EQ(apply_and_clamp(x, d, std::numeric_limits<double>::infinity())[1], 1.1);
  EXPECT_THROW(apply_and_clamp(x, d, 0.0), ConfigError);
  EXPECT_THROW(apply_and_clamp(x, Tensor({3}), 1.0), ConfigError);
}

TEST(Success, Conventions) {
  const std::vector<int> truth{0, 0, 1, 1};
  EXPECT_EQ(attack_success(std::vector<int>{1, 0, 0, 1}, truth, AttackKind::Untargeted, 0), 0.5);
  // Targeted at 1: only the two class-0 samples are eligible.
  EXPECT_EQ(attack_success(std::vector<int>{1, 0, 1, 1}, truth, AttackKind::Targeted, 1), 0.5);
  EXPECT_THROW(attack_success(std::vector<int>{1, 1}, std::vector<int>{1, 1}, AttackKind::Targeted, 1), DataError);
}

TEST(Spec, Validation) {
  AttackSpec s;
  EXPECT_NO_THROW(s.validate());
  s.kind = AttackKind::Targeted;
  EXPECT_THROW(s.validate(), ConfigError);
  s.targets = AttackTargets{0, 2};
  EXPECT_THROW(s.validate(), ConfigError);
  s.targets = AttackTargets{0, 0};
  EXPECT_NO_THROW(s.validate());
  s.clamp_bound = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
  EXPECT_EQ(parse_scope("hybrid"), AttackScope::Hybrid);
  EXPECT_EQ(parse_kind(kind_name(AttackKind::Targeted)), AttackKind::Targeted);
  EXPECT_THROW(parse_scope("all"), ConfigError);
}

// Trained models on a small split, shared by the ASP tests.
struct Trained {
  Dataset test;
  SingleTaskModel c1, c2;
  MultiTaskModel mtl;
};

const Trained& trained() {
  static const Trained t = [] {
    GeneratorConfig g;
    g.n_total = 800;
    auto [train, test] = split(generate_dataset(g, 31), 0.8, 32);
    TrainConfig cfg;
    cfg.epochs = 12;
    cfg.batch_size = 32;
    cfg.seed = 33;
    Trained out{test, build_single(Arch::FNN, TaskId::Device, 34), build_single(Arch::FNN, TaskId::Authenticity, 35),
                build_multitask(Arch::FNN, 36)};
    train_single(out.c1, train, cfg);
    train_single(out.c2, train, cfg);
    train_multitask(out.mtl, train, cfg);
    return out;
  }();
  return t;
}

TEST(Asp, ZeroEpsilonEqualsCleanError) {
  const Trained& t = trained();
  const Tensor x = to_tensor(t.test);
  const std::vector<int> y = labels(t.test, TaskId::Device);
  const Perturbation p = fgsm_untargeted(t.c1.net, x, y, 0.0);
  const Tensor x_adv = apply_and_clamp(x, p.delta, max_abs_component(t.test));
  EXPECT_EQ(x_adv, x);
  EXPECT_EQ(attack_success(predict(t.c1.net, x_adv), y, AttackKind::Untargeted, 0),
            1.0 - evaluate(t.c1, t.test).overall);

  AttackSpec spec;
  const std::vector<double> negligible{-300.0};
  const AspCurve c = evaluate_asp(t.c1, t.c2, t.test, spec, negligible, {false, 0, std::nullopt});
  ASSERT_EQ(c.rows.size(), 2u);
  EXPECT_DOUBLE_EQ(c.rows[0].asp, 1.0 - evaluate(t.c1, t.test).overall);
  EXPECT_DOUBLE_EQ(c.rows[1].asp, 1.0 - evaluate(t.c2, t.test).overall);
}

TEST(Asp, RowLayoutAndRange) {
  const Trained& t = trained();
  AttackSpec spec;
  spec.scope = AttackScope::Hybrid;
  const std::vector<double> grid{-10.0, 0.0};
  const AspCurve c = evaluate_asp(t.c1, t.c2, t.test, spec, grid, {true, 5, std::nullopt});
  ASSERT_EQ(c.rows.size(), 8u);
  const std::array<bool, 4> baseline{false, false, true, true};
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_EQ(c.rows[i].psr_db, grid[i / 4]);
    EXPECT_EQ(c.rows[i].baseline, baseline[i % 4]);
    EXPECT_EQ(c.rows[i].task, i % 2 ? TaskId::Authenticity : TaskId::Device);
    EXPECT_EQ(c.rows[i].scope, AttackScope::Hybrid);
    EXPECT_GE(c.rows[i].asp, 0.0);
    EXPECT_LE(c.rows[i].asp, 1.0);
  }
  // Same seed, same curve.
  const AspCurve again = evaluate_asp(t.c1, t.c2, t.test, spec, grid, {true, 5, std::nullopt});
  EXPECT_EQ(again.rows, c.rows);
}

TEST(Asp, MatchedAttackBeatsNoiseAndGrowsWithBudget) {
  const Trained& t = trained();
  AttackSpec spec;
  const std::vector<double> grid{-20.0, -3.0, 0.0};
  const AspCurve c = evaluate_asp(t.c1, t.c2, t.test, spec, grid, {true, 1, std::nullopt});
  const auto asp = [&](double psr, bool baseline) {
    for (const AspRow& r : c.rows) {
      if (r.psr_db == psr && r.baseline == baseline && r.task == TaskId::Device) return r.asp;
    }
    return -1.0;
  };
  EXPECT_GE(asp(0.0, false), asp(-20.0, false));
  EXPECT_GT(asp(-3.0, false), asp(-3.0, true));
}

TEST(Asp, TargetedAndMultiTaskScopes) {
  const Trained& t = trained();
  AttackSpec spec;
  spec.kind = AttackKind::Targeted;
  spec.scope = AttackScope::MultiTask;
  spec.targets = AttackTargets{0, 0};
  const std::vector<double> grid{-3.0};
  const AspCurve c = evaluate_asp(t.mtl, t.test, spec, grid, {false, 0, std::nullopt});
  ASSERT_EQ(c.rows.size(), 2u);
  EXPECT_EQ(c.rows[0].kind, AttackKind::Targeted);
  EXPECT_THROW(evaluate_asp(t.c1, t.c2, t.test, spec, grid), ConfigError);
  AttackSpec swapped;
  EXPECT_THROW(evaluate_asp(t.c2, t.c1, t.test, swapped, grid), ConfigError);
  EXPECT_THROW(evaluate_asp(t.c1, t.c2, Dataset{}, swapped, grid), DataError);
}

TEST(AspCsv, RoundTripAndAppend) {
  AspCurve c;
  c.rows.push_back({-3.0, AttackScope::Hybrid, AttackKind::Untargeted, TaskId::Device, 0.875, false});
  c.rows.push_back({-20.0, AttackScope::MultiTask, AttackKind::Targeted, TaskId::Authenticity, 0.125, true});
  const std::string text = asp_csv(c);
  EXPECT_EQ(text.substr(0, text.find('\n')), kAspCsvHeader);
  EXPECT_EQ(asp_csv_row(c.rows[0]), "-3,hybrid,untargeted,task1,0.875000,fgsm");
  EXPECT_EQ(parse_asp_csv(text), c.rows);

  testing::TempDir dir;
  append_asp_csv(dir / "a.csv", c);
  append_asp_csv(dir / "a.csv", c);
  const std::string both = testing::read_file(dir / "a.csv");
  EXPECT_EQ(parse_asp_csv(both).size(), 4u);
  EXPECT_EQ(both.find(kAspCsvHeader), 0u);
  EXPECT_EQ(both.find(kAspCsvHeader, 1), std::string::npos);

  EXPECT_THROW(parse_asp_csv("nope\n"), FormatError);
  EXPECT_THROW(parse_asp_csv(std::string(kAspCsvHeader) + "\n-3,hybrid,untargeted,task1,1.5,fgsm\n"), FormatError);
  EXPECT_THROW(parse_asp_csv(std::string(kAspCsvHeader) + "\n-3,hybrid\n"), FormatError);
}

}  // namespace
}  // namespace advsec
