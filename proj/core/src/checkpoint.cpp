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

#include "advsec/checkpoint.hpp"

#include <json.hpp>

#include "advsec/error.hpp"
#include "binary_io.hpp"

namespace advsec {
namespace {

using nlohmann::json;

constexpr std::string_view kMagic = "LANN0001";

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::None: return "none";
    case Activation::ReLU: return "relu";
    case Activation::SoftMax: return "softmax";
  }
  return "none";
}

Activation parse_activation(const std::string& s) {
  if (s == "none") return Activation::None;
  if (s == "relu") return Activation::ReLU;
  if (s == "softmax") return Activation::SoftMax;
  throw FormatError("checkpoint: unknown activation '" + s + "'");
}

json layer_to_json(const LayerSpec& spec) {
  if (const auto* d = std::get_if<DenseSpec>(&spec)) {
    return {{"kind", "dense"}, {"units", d->units}, {"activation", activation_name(d->activation)}};
  }
  if (const auto* c = std::get_if<Conv2DSpec>(&spec)) {
    return {{"kind", "conv2d"},
            {"filters", c->filters},
            {"kernel", {c->kernel_h, c->kernel_w}},
            {"activation", activation_name(c->activation)},
            {"padding", c->padding == Padding::Full ? "full" : "valid"}};
  }
  if (std::holds_alternative<FlattenSpec>(spec)) return {{"kind", "flatten"}};
  return {{"kind", "dropout"}, {"rate", std::get<DropoutSpec>(spec).rate}};
}

LayerSpec layer_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "dense") {
    return DenseSpec{j.at("units").get<std::size_t>(), parse_activation(j.at("activation"))};
  }
  if (kind == "conv2d") {
    const std::string padding = j.at("padding").get<std::string>();
    if (padding != "full" && padding != "valid") throw FormatError("checkpoint: unknown padding " + padding);
    return Conv2DSpec{j.at("filters").get<std::size_t>(), j.at("kernel").at(0).get<std::size_t>(),
                      j.at("kernel").at(1).get<std::size_t>(), parse_activation(j.at("activation")),
                      padding == "full" ? Padding::Full : Padding::Valid};
  }
  if (kind == "flatten") return FlattenSpec{};
  if (kind == "dropout") return DropoutSpec{j.at("rate").get<double>()};
  throw FormatError("checkpoint: unknown layer kind '" + kind + "'");
}

}  // namespace

std::string encode_network(const Network& net, const CheckpointMeta& meta) {
  json header;
  header["input_shape"] = net.input_shape();
  header["seed"] = net.seed();
  header["layers"] = json::array();
  for (const LayerSpec& s : net.specs()) header["layers"].push_back(layer_to_json(s));
  header["meta"] = json::object();
  for (const auto& [k, v] : meta) header["meta"][k] = v;
  const std::string text = header.dump();

  std::string out(kMagic);
  detail::put_u64(out, text.size());
  out += text;
  for (const Tensor& p : net.parameters()) {
    for (double v : p.data()) detail::put_f64(out, v);
  }
  return out;
}

Network decode_network(std::string_view bytes, CheckpointMeta* meta) {
  detail::Reader in(bytes, "checkpoint");
  if (in.take(kMagic.size(), "magic") != kMagic) throw FormatError("checkpoint: bad magic");
  const std::uint64_t header_len = in.u64("header length");
  if (header_len > in.remaining()) throw FormatError("checkpoint: truncated header");
  const std::string_view text = in.take(header_len, "header");
  Network net;
  try {
    const json header = json::parse(text);
    std::vector<LayerSpec> specs;
    for (const json& l : header.at("layers")) specs.push_back(layer_from_json(l));
    net = Network::with_zero_parameters(std::move(specs), header.at("input_shape").get<Shape>(),
                                        header.at("seed").get<std::uint64_t>());
    if (meta != nullptr) {
      meta->clear();
      for (const auto& [k, v] : header.at("meta").items()) (*meta)[k] = v.get<std::string>();
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: malformed header: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: inconsistent layer header: ") + e.what());
  }
  std::size_t expected = count_parameters(net);
  if (in.remaining() != expected * sizeof(double)) {
    throw FormatError("checkpoint: parameter block holds " + std::to_string(in.remaining() / sizeof(double)) +
                      " values, header implies " + std::to_string(expected));
  }
  for (Tensor& p : net.parameters()) {
    for (double& v : p.data()) v = in.f64("parameters");
  }
  return net;
}

void save_network(const Network& net, const std::filesystem::path& path, const CheckpointMeta& meta) {
  detail::write_file(path, encode_network(net, meta));
}

Network load_network(const std::filesystem::path& path, CheckpointMeta* meta) {
  return decode_network(detail::read_file(path), meta);
}

}  // namespace advsec
