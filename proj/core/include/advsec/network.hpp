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

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "advsec/rng.hpp"
#include "advsec/tensor.hpp"

namespace advsec {

enum class Activation { None, ReLU, SoftMax };

/// Full pads k-1 zeros on both sides of each spatial axis (output n+k-1);
/// Valid pads nothing (output n-k+1).
enum class Padding { Valid, Full };

struct DenseSpec {
  std::size_t units = 0;
  Activation activation = Activation::ReLU;

  bool operator==(const DenseSpec&) const = default;
};

/// 2-D cross-correlation over (height, width, channels) inputs, channels
/// last. A rank-2 input (height, width) is treated as one channel.
struct Conv2DSpec {
  std::size_t filters = 0;
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 3;
  Activation activation = Activation::ReLU;
  Padding padding = Padding::Full;

  bool operator==(const Conv2DSpec&) const = default;
};

struct FlattenSpec {
  bool operator==(const FlattenSpec&) const = default;
};

struct DropoutSpec {
  double rate = 0.0;

  bool operator==(const DropoutSpec&) const = default;
};

using LayerSpec = std::variant<DenseSpec, Conv2DSpec, FlattenSpec, DropoutSpec>;

enum class Mode { Train, Eval };

/// Activations recorded by a forward pass, consumed by backward().
/// activations[0] is the input batch, activations[l + 1] the output of
/// layer l. For a softmax layer the recorded output is the probability.
struct ForwardTrace {
  std::vector<Tensor> activations;
  std::vector<Tensor> dropout_masks;  // empty tensor for non-dropout layers
  Mode mode = Mode::Eval;

  const Tensor& output() const { return activations.back(); }
};

struct Gradients {
  std::vector<Tensor> parameters;  // parallel to Network::parameters()
  Tensor input;                    // shaped like the input batch
};

struct BackwardOptions {
  bool parameters = true;
  bool input = true;
};

/// Sequential network over a fixed per-sample input shape. Batches carry a
/// leading batch axis on top of input_shape().
class Network {
 public:
  Network() = default;

  /// Builds the layer stack and draws Glorot-uniform weights (zero biases)
  /// from Rng(seed), in layer order, weights before biases.
  static Network init(std::vector<LayerSpec> specs, Shape input_shape, std::uint64_t seed);

  /// Builds the layer stack with zero parameters; used when loading.
  static Network with_zero_parameters(std::vector<LayerSpec> specs, Shape input_shape,
                                      std::uint64_t seed);

  const std::vector<LayerSpec>& specs() const noexcept { return specs_; }
  const Shape& input_shape() const noexcept { return input_shape_; }
  const Shape& output_shape() const;
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t layer_count() const noexcept { return specs_.size(); }

  std::vector<Tensor>& parameters() noexcept { return parameters_; }
  const std::vector<Tensor>& parameters() const noexcept { return parameters_; }

  /// Output probabilities (or raw activations when the last layer is not a
  /// softmax). Eval mode ignores rng; Train mode requires it for dropout.
  Tensor forward(const Tensor& batch, Mode mode = Mode::Eval, Rng* rng = nullptr) const;
  ForwardTrace forward_trace(const Tensor& batch, Mode mode = Mode::Eval, Rng* rng = nullptr) const;

  /// Reverse-mode pass. grad_output is dL/d(output), except when the final
  /// activation is softmax: then it is dL/d(logits), which for
  /// cross-entropy is simply p - y (see softmax_cross_entropy_grad).
  Gradients backward(const ForwardTrace& trace, const Tensor& grad_output,
                     BackwardOptions options = {}) const;

  bool ends_with_softmax() const;

  friend bool operator==(const Network& a, const Network& b);

 private:
  struct Layer {
    Shape in;
    Shape out;
    std::optional<std::size_t> weight_index;  // bias at weight_index + 1
  };

  std::vector<LayerSpec> specs_;
  std::vector<Layer> layers_;
  std::vector<Tensor> parameters_;
  Shape input_shape_;
  std::uint64_t seed_ = 0;
};

std::size_t count_parameters(const Network& net);

/// Packs per-sample inputs (each of input_shape) into one batch tensor.
Tensor stack_rows(std::span<const Tensor> rows);

/// Mean over the batch of -log p(true class), p clamped below at 1e-12.
double cross_entropy(const Tensor& probs, std::span<const int> labels);

/// (p - onehot(y)) * scale, row by row. With scale = 1 / batch this is the
/// gradient of the mean cross-entropy with respect to the logits.
Tensor softmax_cross_entropy_grad(const Tensor& probs, std::span<const int> labels, double scale);

/// Per-sample gradient of the cross-entropy with respect to the input, in
/// Eval mode (dropout off). Row i is d(-log p_i[y_i]) / d x_i.
Tensor input_gradient(const Network& net, const Tensor& batch, std::span<const int> labels);

/// Argmax per row; ties resolve to the lower class index.
std::vector<int> argmax_rows(const Tensor& probs);

}  // namespace advsec
