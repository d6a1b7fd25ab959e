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

#include "advsec/adam.hpp"

#include <cmath>

#include "advsec/error.hpp"

namespace advsec {

AdamState AdamState::for_parameters(std::span<const Tensor> params, AdamHyper hyper) {
  AdamState s;
  s.hyper = hyper;
  for (const Tensor& p : params) {
    s.first_moment.emplace_back(p.shape());
    s.second_moment.emplace_back(p.shape());
  }
  return s;
}

void adam_step(std::span<Tensor> params, std::span<const Tensor> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw ConfigError("adam_step: parameter, gradient and state lists differ in length");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].shape() != grads[k].shape() || params[k].shape() != state.first_moment[k].shape()) {
      throw ConfigError("adam_step: gradient shape does not match parameter " + std::to_string(k));
    }
  }
  const AdamHyper& h = state.hyper;
  const std::size_t t = state.step + 1;
  const double correction1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
  const double correction2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    double* p = params[k].raw();
    const double* g = grads[k].raw();
    double* m = state.first_moment[k].raw();
    double* v = state.second_moment[k].raw();
    for (std::size_t i = 0; i < params[k].size(); ++i) {
      m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g[i];
      v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon);
    }
  }
  state.step = t;
}

}  // namespace advsec
