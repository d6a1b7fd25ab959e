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
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "advsec/classifiers.hpp"
#include "advsec/error.hpp"
#include "advsec/network.hpp"

namespace advsec {
namespace {

Tensor random_batch(Shape shape, std::uint64_t seed, double scale = 1.0) {
  Tensor t(std::move(shape));
  Rng r(seed);
  for (double& v : t.data()) v = scale * r.normal();
  return t;
}

// Naive reference for one Full-padded cross-correlation layer on a
// (h, w, c) input; kernel laid out (kh, kw, c, f).
std::vector<double> conv_reference(const Tensor& x, std::size_t h, std::size_t w, std::size_t c, const Tensor& k,
                                   const Tensor& b, std::size_t kh, std::size_t kw, std::size_t f) {
  const long ph = static_cast<long>(kh) - 1, pw = static_cast<long>(kw) - 1;
  const std::size_t oh = h + kh - 1, ow = w + kw - 1;
  std::vector<double> out(oh * ow * f);
  for (std::size_t oy = 0; oy < oh; ++oy)
    for (std::size_t ox = 0; ox < ow; ++ox)
      for (std::size_t fi = 0; fi < f; ++fi) {
        double s = b[fi];
        for (std::size_t ky = 0; ky < kh; ++ky)
          for (std::size_t kx = 0; kx < kw; ++kx) {
            const long iy = static_cast<long>(oy + ky) - ph, ix = static_cast<long>(ox + kx) - pw;
            if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(w)) continue;
            for (std::size_t ci = 0; ci < c; ++ci) {
              s += k[((ky * kw + kx) * c + ci) * f + fi] * x[(iy * w + ix) * c + ci];
            }
          }
        out[(oy * ow + ox) * f + fi] = std::max(s, 0.0);
      }
  return out;
}

TEST(ParameterCount, SingleTaskArchitectures) {
  EXPECT_EQ(count_parameters(build_single(Arch::FNN, TaskId::Device, 1).net), 6522u);
  EXPECT_EQ(count_parameters(build_single(Arch::CNN, TaskId::Device, 1).net), 70074u);
}

TEST(ParameterCount, MultiTaskArchitectures) {
  EXPECT_EQ(build_multitask(Arch::FNN, 1).parameter_count(), 8884u);
  EXPECT_EQ(build_multitask(Arch::CNN, 1).parameter_count(), 140020u);
}

TEST(ParameterCount, MultiTaskIsTrunkPlusTwoHeads) {
  // The multi-task model shares the first layer, so it adds one extra
  // copy of everything after it.
  for (Arch a : {Arch::FNN, Arch::CNN}) {
    const MultiTaskModel m = build_multitask(a, 3);
    const std::size_t single = count_parameters(build_single(a, TaskId::Device, 3).net);
    EXPECT_EQ(m.parameter_count(), single + count_parameters(m.head2));
  }
}

TEST(Network, CnnShapes) {
  const Network net = build_single(Arch::CNN, TaskId::Device, 1).net;
  const ForwardTrace tr = net.forward_trace(random_batch({3, 2, 32}, 1));
  EXPECT_EQ(tr.activations[1].shape(), (Shape{3, 2, 34, 32}));
  EXPECT_EQ(tr.activations[2].shape(), (Shape{3, 2176}));
  EXPECT_EQ(tr.output().shape(), (Shape{3, 2}));
}

TEST(Network, DenseForwardMatchesHandComputation) {
  Network net = Network::with_zero_parameters({DenseSpec{2, Activation::ReLU}}, {3}, 0);
  // W is (in, out).
  net.parameters()[0] = Tensor({3, 2}, std::vector<double>{1, -1, 2, 0.5, -3, 1});
  net.parameters()[1] = Tensor({2}, std::vector<double>{0.25, -10});
  const Tensor y = net.forward(Tensor({1, 3}, std::vector<double>{1, 2, 3}));
  // unit 0: 1 + 4 - 9 + 0.25 = -3.75 -> 0; unit 1: -1 + 1 + 3 - 10 = -7 -> 0
  EXPECT_EQ(y[0], 0.0);
  EXPECT_EQ(y[1], 0.0);
  const Tensor y2 = net.forward(Tensor({1, 3}, std::vector<double>{2, 1, 0}));
  EXPECT_DOUBLE_EQ(y2[0], 2 + 2 + 0.25);
  EXPECT_EQ(y2[1], 0.0);
}

TEST(Network, ConvForwardMatchesNaiveReference) {
  for (std::size_t kh : {1u, 2u}) {
    Conv2DSpec spec{4, kh, 3, Activation::ReLU, Padding::Full};
    const Network net = Network::init({spec}, {2, 5, 3}, 11);
    const Tensor x = random_batch({1, 2, 5, 3}, 12);
    const Tensor y = net.forward(x);
    const auto ref = conv_reference(x, 2, 5, 3, net.parameters()[0], net.parameters()[1], kh, 3, 4);
    ASSERT_EQ(y.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-12) << i;
  }
}

TEST(Network, ValidPaddingShrinks) {
  const Network net = Network::init({Conv2DSpec{2, 1, 3, Activation::ReLU, Padding::Valid}}, {2, 32}, 1);
  EXPECT_EQ(net.output_shape(), (Shape{2, 30, 2}));
  EXPECT_THROW(Network::init({Conv2DSpec{2, 3, 3, Activation::ReLU, Padding::Valid}}, {2, 32}, 1), ConfigError);
}

TEST(Network, SoftmaxRowsAreProbabilities) {
  const Network net = build_single(Arch::FNN, TaskId::Device, 5).net;
  const Tensor p = net.forward(random_batch({16, 2, 32}, 6, 10.0));
  for (std::size_t r = 0; r < 16; ++r) {
    EXPECT_NEAR(p.row(r)[0] + p.row(r)[1], 1.0, 1e-12);
    EXPECT_GE(p.row(r)[0], 0.0);
  }
}

TEST(Network, SoftmaxIsStableForLargeLogits) {
  Network net = Network::with_zero_parameters({DenseSpec{2, Activation::SoftMax}}, {1}, 0);
  net.parameters()[0] = Tensor({1, 2}, std::vector<double>{1000, -1000});
  const Tensor p = net.forward(Tensor({1, 1}, std::vector<double>{1}));
  EXPECT_EQ(p[0], 1.0);
  EXPECT_EQ(p[1], 0.0);
}

TEST(Network, DropoutTrainScalesSurvivorsEvalIsIdentity) {
  const Network net = Network::init({DropoutSpec{0.25}}, {4000}, 0);
  const Tensor x({1, 4000}, 1.0);
  EXPECT_EQ(net.forward(x), x);
  Rng rng(9);
  const Tensor y = net.forward(x, Mode::Train, &rng);
  std::size_t kept = 0;
  for (double v : y.data()) {
    if (v != 0.0) {
      EXPECT_DOUBLE_EQ(v, 1.0 / 0.75);
      ++kept;
    }
  }
  // Binomial(4000, 0.75): sd about 27.
  EXPECT_NEAR(static_cast<double>(kept), 3000.0, 150.0);
  EXPECT_THROW(net.forward(x, Mode::Train, nullptr), ConfigError);
}

TEST(Network, RejectsInvalidStacks) {
  EXPECT_THROW(Network::init({DenseSpec{2, Activation::SoftMax}, DenseSpec{2, Activation::ReLU}}, {4}, 0),
               ConfigError);
  EXPECT_THROW(Network::init({DenseSpec{0, Activation::ReLU}}, {4}, 0), ConfigError);
  EXPECT_THROW(Network::init({DropoutSpec{1.0}}, {4}, 0), ConfigError);
  EXPECT_THROW(Network::init({DenseSpec{2, Activation::ReLU}}, {}, 0), ConfigError);
}

TEST(Network, RejectsBadBatches) {
  const Network net = build_single(Arch::FNN, TaskId::Device, 1).net;
  EXPECT_THROW(net.forward(Tensor({1, 2, 31})), ConfigError);
  Tensor x({1, 2, 32}, 0.0);
  x[5] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(net.forward(x), NumericError);
}

TEST(Network, InitIsSeededAndGlorotBounded) {
  const Network a = build_single(Arch::FNN, TaskId::Device, 42).net;
  const Network b = build_single(Arch::FNN, TaskId::Device, 42).net;
  const Network c = build_single(Arch::FNN, TaskId::Device, 43).net;
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == c);
  // First dense layer: fan_in 64, fan_out 64.
  const double limit = std::sqrt(6.0 / 128.0);
  for (double v : a.parameters()[0].data()) EXPECT_LE(std::abs(v), limit);
  for (double v : a.parameters()[1].data()) EXPECT_EQ(v, 0.0);
}

TEST(Loss, CrossEntropyAndGradient) {
  const Tensor p({2, 2}, std::vector<double>{0.25, 0.75, 0.9, 0.1});
  const std::vector<int> y{1, 1};
  EXPECT_NEAR(cross_entropy(p, y), -(std::log(0.75) + std::log(0.1)) / 2.0, 1e-15);
  const Tensor g = softmax_cross_entropy_grad(p, y, 0.5);
  EXPECT_EQ(g, Tensor({2, 2}, std::vector<double>{0.125, -0.125, 0.45, -0.45}));
  // Clamped at 1e-12 rather than returning infinity.
  const Tensor zero({1, 2}, std::vector<double>{1.0, 0.0});
  EXPECT_NEAR(cross_entropy(zero, std::vector<int>{1}), -std::log(1e-12), 1e-9);
}

TEST(Loss, ArgmaxTiesGoToLowerIndex) {
  const Tensor p({3, 2}, std::vector<double>{0.5, 0.5, 0.2, 0.8, 0.6, 0.4});
  EXPECT_EQ(argmax_rows(p), (std::vector<int>{0, 1, 0}));
}

TEST(StackRows, PacksAndChecksShapes) {
  std::vector<Tensor> rows{Tensor({2}, std::vector<double>{1, 2}), Tensor({2}, std::vector<double>{3, 4})};
  EXPECT_EQ(stack_rows(rows), Tensor({2, 2}, std::vector<double>{1, 2, 3, 4}));
  rows.emplace_back(Shape{3});
  EXPECT_THROW(stack_rows(rows), ConfigError);
}

}  // namespace
}  // namespace advsec
