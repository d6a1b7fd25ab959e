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

#include "advsec/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "advsec/error.hpp"

namespace advsec {
namespace {

// Hot kernels get an AVX2 clone where the toolchain supports ifunc
// dispatch. FMA stays disabled, so both clones round identically.
#if defined(__GNUC__) && !defined(__clang__) && defined(__x86_64__) && defined(__linux__)
#define ADVSEC_KERNEL __attribute__((target_clones("avx2", "default")))
#else
#define ADVSEC_KERNEL
#endif

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

struct ConvGeometry {
  std::size_t h, w, c;     // input
  std::size_t oh, ow, f;   // output
  std::size_t kh, kw;
  std::size_t pad_h, pad_w;
};

ConvGeometry conv_geometry(const Shape& in, const Conv2DSpec& spec) {
  if (in.size() != 2 && in.size() != 3) {
    throw ConfigError("Conv2D expects (height, width[, channels]) input, got " + shape_string(in));
  }
  ConvGeometry g{};
  g.h = in[0];
  g.w = in[1];
  g.c = in.size() == 3 ? in[2] : 1;
  g.kh = spec.kernel_h;
  g.kw = spec.kernel_w;
  g.f = spec.filters;
  if (spec.padding == Padding::Full) {
    g.pad_h = g.kh - 1;
    g.pad_w = g.kw - 1;
    g.oh = g.h + g.kh - 1;
    g.ow = g.w + g.kw - 1;
  } else {
    if (g.kh > g.h || g.kw > g.w) {
      throw ConfigError("Conv2D kernel larger than input " + shape_string(in) + " with valid padding");
    }
    g.pad_h = g.pad_w = 0;
    g.oh = g.h - g.kh + 1;
    g.ow = g.w - g.kw + 1;
  }
  return g;
}

Activation activation_of(const LayerSpec& spec) {
  if (const auto* d = std::get_if<DenseSpec>(&spec)) return d->activation;
  if (const auto* c = std::get_if<Conv2DSpec>(&spec)) return c->activation;
  return Activation::None;
}

void apply_activation(Tensor& t, Activation act) {
  switch (act) {
    case Activation::None:
      return;
    case Activation::ReLU:
      for (double& v : t.data()) v = v > 0.0 ? v : 0.0;
      return;
    case Activation::SoftMax: {
      const std::size_t rows = t.dim(0);
      for (std::size_t r = 0; r < rows; ++r) {
        auto row = t.row(r);
        const double m = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double& v : row) {
          v = std::exp(v - m);
          sum += v;
        }
        for (double& v : row) v /= sum;
      }
      return;
    }
  }
}

ADVSEC_KERNEL void dense_forward(const Tensor& in, const Tensor& w, const Tensor& b, Tensor& out) {
  const std::size_t batch = in.dim(0);
  const std::size_t n_in = w.dim(0);
  const std::size_t n_out = w.dim(1);
  const double* x = in.raw();
  const double* wp = w.raw();
  double* y = out.raw();
  for (std::size_t r = 0; r < batch; ++r) {
    double* yr = y + r * n_out;
    std::copy(b.raw(), b.raw() + n_out, yr);
    const double* xr = x + r * n_in;
    for (std::size_t i = 0; i < n_in; ++i) {
      const double xi = xr[i];
      if (xi == 0.0) continue;
      const double* wr = wp + i * n_out;
      for (std::size_t j = 0; j < n_out; ++j) yr[j] += xi * wr[j];
    }
  }
}

ADVSEC_KERNEL void dense_backward(const Tensor& in, const Tensor& w, const Tensor& g, Tensor* dw, Tensor* db,
                    Tensor* din) {
  const std::size_t batch = in.dim(0);
  const std::size_t n_in = w.dim(0);
  const std::size_t n_out = w.dim(1);
  const double* x = in.raw();
  const double* gp = g.raw();
  if (dw != nullptr) {
    double* dwp = dw->raw();
    double* dbp = db->raw();
    for (std::size_t r = 0; r < batch; ++r) {
      const double* gr = gp + r * n_out;
      const double* xr = x + r * n_in;
      for (std::size_t j = 0; j < n_out; ++j) dbp[j] += gr[j];
      for (std::size_t i = 0; i < n_in; ++i) {
        const double xi = xr[i];
        if (xi == 0.0) continue;
        double* dwr = dwp + i * n_out;
        for (std::size_t j = 0; j < n_out; ++j) dwr[j] += xi * gr[j];
      }
    }
  }
  if (din != nullptr) {
    // Transposed copy keeps the inner loop contiguous; each dx[i] is still
    // summed over j in ascending order.
    std::vector<double> wt(n_in * n_out);
    const double* wp = w.raw();
    for (std::size_t i = 0; i < n_in; ++i) {
      for (std::size_t j = 0; j < n_out; ++j) wt[j * n_in + i] = wp[i * n_out + j];
    }
    double* dx = din->raw();
    std::fill(dx, dx + batch * n_in, 0.0);
    for (std::size_t r = 0; r < batch; ++r) {
      const double* gr = gp + r * n_out;
      double* dxr = dx + r * n_in;
      for (std::size_t j = 0; j < n_out; ++j) {
        const double gj = gr[j];
        const double* wc = wt.data() + j * n_in;
        for (std::size_t i = 0; i < n_in; ++i) dxr[i] += wc[i] * gj;
      }
    }
  }
}

ADVSEC_KERNEL void conv_forward(const Tensor& in, const Tensor& w, const Tensor& b, const ConvGeometry& g,
                  Tensor& out) {
  const std::size_t batch = in.dim(0);
  const double* x = in.raw();
  const double* wp = w.raw();
  double* y = out.raw();
  const std::size_t in_stride = g.h * g.w * g.c;
  const std::size_t out_stride = g.oh * g.ow * g.f;
  for (std::size_t r = 0; r < batch; ++r) {
    const double* xr = x + r * in_stride;
    for (std::size_t oy = 0; oy < g.oh; ++oy) {
      for (std::size_t ox = 0; ox < g.ow; ++ox) {
        double* yo = y + r * out_stride + (oy * g.ow + ox) * g.f;
        std::copy(b.raw(), b.raw() + g.f, yo);
        for (std::size_t dy = 0; dy < g.kh; ++dy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + dy) - static_cast<std::ptrdiff_t>(g.pad_h);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          for (std::size_t dx = 0; dx < g.kw; ++dx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + dx) - static_cast<std::ptrdiff_t>(g.pad_w);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
            const double* xi = xr + (static_cast<std::size_t>(iy) * g.w + static_cast<std::size_t>(ix)) * g.c;
            for (std::size_t c = 0; c < g.c; ++c) {
              const double v = xi[c];
              const double* wr = wp + ((dy * g.kw + dx) * g.c + c) * g.f;
              for (std::size_t f = 0; f < g.f; ++f) yo[f] += v * wr[f];
            }
          }
        }
      }
    }
  }
}

ADVSEC_KERNEL void conv_backward(const Tensor& in, const Tensor& w, const Tensor& grad, const ConvGeometry& g,
                   Tensor* dw, Tensor* db, Tensor* din) {
  const std::size_t batch = in.dim(0);
  const double* x = in.raw();
  const double* wp = w.raw();
  const double* gp = grad.raw();
  const std::size_t in_stride = g.h * g.w * g.c;
  const std::size_t out_stride = g.oh * g.ow * g.f;
  for (std::size_t r = 0; r < batch; ++r) {
    const double* xr = x + r * in_stride;
    double* dxr = din != nullptr ? din->raw() + r * in_stride : nullptr;
    for (std::size_t oy = 0; oy < g.oh; ++oy) {
      for (std::size_t ox = 0; ox < g.ow; ++ox) {
        const double* go = gp + r * out_stride + (oy * g.ow + ox) * g.f;
        if (db != nullptr) {
          double* dbp = db->raw();
          for (std::size_t f = 0; f < g.f; ++f) dbp[f] += go[f];
        }
        for (std::size_t dy = 0; dy < g.kh; ++dy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy + dy) - static_cast<std::ptrdiff_t>(g.pad_h);
          if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
          for (std::size_t dx = 0; dx < g.kw; ++dx) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox + dx) - static_cast<std::ptrdiff_t>(g.pad_w);
            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
            const std::size_t in_off = (static_cast<std::size_t>(iy) * g.w + static_cast<std::size_t>(ix)) * g.c;
            for (std::size_t c = 0; c < g.c; ++c) {
              const std::size_t w_off = ((dy * g.kw + dx) * g.c + c) * g.f;
              if (dw != nullptr) {
                const double v = xr[in_off + c];
                double* dwr = dw->raw() + w_off;
                for (std::size_t f = 0; f < g.f; ++f) dwr[f] += v * go[f];
              }
              if (dxr != nullptr) {
                const double* wr = wp + w_off;
                double acc = 0.0;
                for (std::size_t f = 0; f < g.f; ++f) acc += wr[f] * go[f];
                dxr[in_off + c] += acc;
              }
            }
          }
        }
      }
    }
  }
}

Shape with_batch(std::size_t batch, const Shape& s) {
  Shape out{batch};
  out.insert(out.end(), s.begin(), s.end());
  return out;
}

}  // namespace

Network Network::with_zero_parameters(std::vector<LayerSpec> specs, Shape input_shape,
                                      std::uint64_t seed) {
  Network net;
  net.specs_ = std::move(specs);
  net.input_shape_ = std::move(input_shape);
  net.seed_ = seed;
  if (net.input_shape_.empty() || shape_size(net.input_shape_) == 0) {
    throw ConfigError("network input shape must be non-empty");
  }
  Shape cur = net.input_shape_;
  for (std::size_t l = 0; l < net.specs_.size(); ++l) {
    Layer layer;
    layer.in = cur;
    const bool last = l + 1 == net.specs_.size();
    if (activation_of(net.specs_[l]) == Activation::SoftMax && !last) {
      throw ConfigError("softmax is only allowed as the final activation (layer " +
                        std::to_string(l) + ")");
    }
    std::visit(Overloaded{
                   [&](const DenseSpec& d) {
                     if (d.units == 0) throw ConfigError("Dense layer needs at least one unit");
                     layer.out = {d.units};
                     layer.weight_index = net.parameters_.size();
                     net.parameters_.emplace_back(Shape{shape_size(cur), d.units});
                     net.parameters_.emplace_back(Shape{d.units});
                   },
                   [&](const Conv2DSpec& c) {
                     if (c.filters == 0) throw ConfigError("Conv2D needs at least one filter");
                     if (c.kernel_h == 0 || c.kernel_w == 0) throw ConfigError("Conv2D kernel must be non-empty");
                     const ConvGeometry g = conv_geometry(cur, c);
                     layer.out = {g.oh, g.ow, g.f};
                     layer.weight_index = net.parameters_.size();
                     net.parameters_.emplace_back(Shape{g.kh, g.kw, g.c, g.f});
                     net.parameters_.emplace_back(Shape{g.f});
                   },
                   [&](const FlattenSpec&) { layer.out = {shape_size(cur)}; },
                   [&](const DropoutSpec& d) {
                     if (!(d.rate >= 0.0 && d.rate < 1.0)) {
                       throw ConfigError("dropout rate must lie in [0, 1)");
                     }
                     layer.out = cur;
                   },
               },
               net.specs_[l]);
    cur = layer.out;
    net.layers_.push_back(std::move(layer));
  }
  return net;
}

Network Network::init(std::vector<LayerSpec> specs, Shape input_shape, std::uint64_t seed) {
  Network net = with_zero_parameters(std::move(specs), std::move(input_shape), seed);
  Rng rng(seed);
  for (std::size_t l = 0; l < net.layers_.size(); ++l) {
    const Layer& layer = net.layers_[l];
    if (!layer.weight_index) continue;
    Tensor& w = net.parameters_[*layer.weight_index];
    double fan_in, fan_out;
    if (w.rank() == 2) {
      fan_in = static_cast<double>(w.dim(0));
      fan_out = static_cast<double>(w.dim(1));
    } else {
      const double receptive = static_cast<double>(w.dim(0) * w.dim(1));
      fan_in = receptive * static_cast<double>(w.dim(2));
      fan_out = receptive * static_cast<double>(w.dim(3));
    }
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : w.data()) v = rng.uniform(-limit, limit);
  }
  return net;
}

const Shape& Network::output_shape() const {
  return layers_.empty() ? input_shape_ : layers_.back().out;
}

bool Network::ends_with_softmax() const {
  return !specs_.empty() && activation_of(specs_.back()) == Activation::SoftMax;
}

Tensor Network::forward(const Tensor& batch, Mode mode, Rng* rng) const {
  return std::move(forward_trace(batch, mode, rng).activations.back());
}

ForwardTrace Network::forward_trace(const Tensor& batch, Mode mode, Rng* rng) const {
  if (batch.rank() != input_shape_.size() + 1 ||
      !std::equal(input_shape_.begin(), input_shape_.end(), batch.shape().begin() + 1)) {
    throw ConfigError("batch shape " + shape_string(batch.shape()) + " does not match network input " +
                      shape_string(input_shape_));
  }
  if (!batch.all_finite()) throw NumericError("non-finite value in network input");
  if (mode == Mode::Train && rng == nullptr) {
    for (const auto& s : specs_) {
      if (std::holds_alternative<DropoutSpec>(s)) throw ConfigError("Train mode requires an Rng for dropout");
    }
  }
  const std::size_t n = batch.dim(0);
  ForwardTrace trace;
  trace.mode = mode;
  trace.activations.reserve(layers_.size() + 1);
  trace.dropout_masks.resize(layers_.size());
  trace.activations.push_back(batch);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    const Tensor& in = trace.activations.back();
    Tensor out(with_batch(n, layer.out));
    std::visit(Overloaded{
                   [&](const DenseSpec& d) {
                     dense_forward(in, parameters_[*layer.weight_index], parameters_[*layer.weight_index + 1],
                                   out);
                     apply_activation(out, d.activation);
                   },
                   [&](const Conv2DSpec& c) {
                     conv_forward(in, parameters_[*layer.weight_index], parameters_[*layer.weight_index + 1],
                                  conv_geometry(layer.in, c), out);
                     apply_activation(out, c.activation);
                   },
                   [&](const FlattenSpec&) { std::copy(in.raw(), in.raw() + in.size(), out.raw()); },
                   [&](const DropoutSpec& d) {
                     if (mode == Mode::Eval || d.rate == 0.0) {
                       std::copy(in.raw(), in.raw() + in.size(), out.raw());
                       return;
                     }
                     Tensor mask(out.shape());
                     const double keep_scale = 1.0 / (1.0 - d.rate);
                     for (std::size_t i = 0; i < mask.size(); ++i) {
                       mask[i] = rng->uniform() >= d.rate ? keep_scale : 0.0;
                       out[i] = in[i] * mask[i];
                     }
                     trace.dropout_masks[l] = std::move(mask);
                   },
               },
               specs_[l]);
    trace.activations.push_back(std::move(out));
  }
  return trace;
}

Gradients Network::backward(const ForwardTrace& trace, const Tensor& grad_output,
                            BackwardOptions options) const {
  if (trace.activations.size() != layers_.size() + 1) {
    throw ConfigError("trace does not belong to this network");
  }
  if (grad_output.shape() != trace.output().shape()) {
    throw ConfigError("grad_output shape " + shape_string(grad_output.shape()) +
                      " does not match output " + shape_string(trace.output().shape()));
  }
  const std::size_t n = grad_output.dim(0);
  Gradients grads;
  if (options.parameters) {
    grads.parameters.reserve(parameters_.size());
    for (const Tensor& p : parameters_) grads.parameters.emplace_back(p.shape());
  }
  Tensor g = grad_output;
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const Layer& layer = layers_[li];
    const Tensor& in = trace.activations[li];
    const Tensor& out = trace.activations[li + 1];
    const bool need_din = li > 0 || options.input;
    Tensor din;
    std::visit(Overloaded{
                   [&](const DenseSpec& d) {
                     if (d.activation == Activation::ReLU) {
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         if (!(out[i] > 0.0)) g[i] = 0.0;
                       }
                     }
                     Tensor* dw = options.parameters ? &grads.parameters[*layer.weight_index] : nullptr;
                     Tensor* db = options.parameters ? &grads.parameters[*layer.weight_index + 1] : nullptr;
                     if (need_din) din = Tensor(with_batch(n, layer.in));
                     dense_backward(in, parameters_[*layer.weight_index], g, dw, db,
                                    need_din ? &din : nullptr);
                   },
                   [&](const Conv2DSpec& c) {
                     if (c.activation == Activation::ReLU) {
                       for (std::size_t i = 0; i < g.size(); ++i) {
                         if (!(out[i] > 0.0)) g[i] = 0.0;
                       }
                     }
                     Tensor* dw = options.parameters ? &grads.parameters[*layer.weight_index] : nullptr;
                     Tensor* db = options.parameters ? &grads.parameters[*layer.weight_index + 1] : nullptr;
                     if (need_din) din = Tensor(with_batch(n, layer.in));
                     conv_backward(in, parameters_[*layer.weight_index], g, conv_geometry(layer.in, c), dw, db,
                                   need_din ? &din : nullptr);
                   },
                   [&](const FlattenSpec&) {
                     din = std::move(g);
                     din.reshape(with_batch(n, layer.in));
                   },
                   [&](const DropoutSpec&) {
                     din = std::move(g);
                     const Tensor& mask = trace.dropout_masks[li];
                     if (trace.mode == Mode::Train && !mask.empty()) {
                       for (std::size_t i = 0; i < din.size(); ++i) din[i] *= mask[i];
                     }
                   },
               },
               specs_[li]);
    if (!need_din) break;
    g = std::move(din);
  }
  if (options.input) {
    if (layers_.empty()) g.reshape(trace.activations.front().shape());
    grads.input = std::move(g);
  }
  return grads;
}

bool operator==(const Network& a, const Network& b) {
  return a.specs_ == b.specs_ && a.input_shape_ == b.input_shape_ && a.seed_ == b.seed_ &&
         a.parameters_ == b.parameters_;
}

std::size_t count_parameters(const Network& net) {
  std::size_t total = 0;
  for (const Tensor& p : net.parameters()) total += p.size();
  return total;
}

Tensor stack_rows(std::span<const Tensor> rows) {
  if (rows.empty()) throw ConfigError("stack_rows: no rows");
  const Shape& s = rows.front().shape();
  std::vector<double> data;
  data.reserve(rows.size() * rows.front().size());
  for (const Tensor& r : rows) {
    if (r.shape() != s) throw ConfigError("stack_rows: inconsistent row shapes");
    data.insert(data.end(), r.data().begin(), r.data().end());
  }
  return Tensor(with_batch(rows.size(), s), std::move(data));
}

double cross_entropy(const Tensor& probs, std::span<const int> labels) {
  const std::size_t n = probs.dim(0);
  if (labels.size() != n) throw ConfigError("cross_entropy: label count mismatch");
  if (n == 0) return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double p = probs.row(r)[static_cast<std::size_t>(labels[r])];
    total -= std::log(std::max(p, 1e-12));
  }
  return total / static_cast<double>(n);
}

Tensor softmax_cross_entropy_grad(const Tensor& probs, std::span<const int> labels, double scale) {
  const std::size_t n = probs.dim(0);
  if (labels.size() != n) throw ConfigError("softmax_cross_entropy_grad: label count mismatch");
  Tensor g = probs;
  for (std::size_t r = 0; r < n; ++r) {
    auto row = g.row(r);
    row[static_cast<std::size_t>(labels[r])] -= 1.0;
    for (double& v : row) v *= scale;
  }
  return g;
}

Tensor input_gradient(const Network& net, const Tensor& batch, std::span<const int> labels) {
  if (!net.ends_with_softmax()) throw ConfigError("input_gradient needs a softmax output layer");
  const ForwardTrace trace = net.forward_trace(batch, Mode::Eval);
  const Tensor dz = softmax_cross_entropy_grad(trace.output(), labels, 1.0);
  return std::move(net.backward(trace, dz, {.parameters = false, .input = true}).input);
}

std::vector<int> argmax_rows(const Tensor& probs) {
  std::vector<int> out(probs.dim(0));
  for (std::size_t r = 0; r < out.size(); ++r) {
    auto row = probs.row(r);
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j) {
      if (row[j] > row[best]) best = j;
    }
    out[r] = static_cast<int>(best);
  }
  return out;
}

}  // namespace advsec
