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


// Microbenchmarks for the hot paths: network forward/backward, FGSM and
// KDE sampling.

#include <benchmark/benchmark.h>

#include <vector>

#include "advsec/attacks.hpp"
#include "advsec/classifiers.hpp"
#include "advsec/kde.hpp"
#include "advsec/rng.hpp"

namespace {

using namespace advsec;

Tensor random_batch(std::size_t n, std::uint64_t seed) {
  Tensor x({n, 2, 32});
  Rng r(seed);
  for (double& v : x.data()) v = 0.5 * r.normal();
  return x;
}

std::vector<int> alternating_labels(std::size_t n) {
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % 2);
  return y;
}

void BM_Forward(benchmark::State& state, Arch arch) {
  const Network net = build_single(arch, TaskId::Device, 1).net;
  const Tensor x = random_batch(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ForwardBackward(benchmark::State& state, Arch arch) {
  const Network net = build_single(arch, TaskId::Device, 1).net;
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const Tensor x = random_batch(n, 2);
  const std::vector<int> y = alternating_labels(n);
  for (auto _ : state) {
    const ForwardTrace tr = net.forward_trace(x);
    benchmark::DoNotOptimize(net.backward(tr, softmax_cross_entropy_grad(tr.output(), y, 1.0 / n)));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Fgsm(benchmark::State& state, Arch arch) {
  const Network net = build_single(arch, TaskId::Device, 1).net;
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const Tensor x = random_batch(n, 3);
  const std::vector<int> y = alternating_labels(n);
  for (auto _ : state) benchmark::DoNotOptimize(fgsm_untargeted(net, x, y, 0.1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_MultiTaskFgsm(benchmark::State& state) {
  const MultiTaskModel mtl = build_multitask(Arch::CNN, 1);
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const Tensor x = random_batch(n, 3);
  const std::vector<int> y = alternating_labels(n);
  for (auto _ : state) benchmark::DoNotOptimize(fgsm_multitask_untargeted(mtl, x, y, y, {}, 0.1));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_KdeSample(benchmark::State& state) {
  std::vector<IQSample> obs(static_cast<std::size_t>(state.range(0)));
  Rng r(4);
  for (IQSample& s : obs) {
    for (double& v : s.values) v = r.normal();
  }
  const KdeModel kde = kde_fit(obs);
  for (auto _ : state) benchmark::DoNotOptimize(kde_sample(kde, r));
}

BENCHMARK_CAPTURE(BM_Forward, fnn, Arch::FNN)->Arg(64)->Arg(1000);
BENCHMARK_CAPTURE(BM_Forward, cnn, Arch::CNN)->Arg(64)->Arg(1000);
BENCHMARK_CAPTURE(BM_ForwardBackward, fnn, Arch::FNN)->Arg(64);
BENCHMARK_CAPTURE(BM_ForwardBackward, cnn, Arch::CNN)->Arg(64);
BENCHMARK_CAPTURE(BM_Fgsm, fnn, Arch::FNN)->Arg(1000);
BENCHMARK_CAPTURE(BM_Fgsm, cnn, Arch::CNN)->Arg(1000);
BENCHMARK(BM_MultiTaskFgsm)->Arg(1000);
BENCHMARK(BM_KdeSample)->Arg(1250);

}  // namespace

BENCHMARK_MAIN();
