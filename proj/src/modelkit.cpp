/**
 * Copyright 2026 The mammopatch Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "mammo/modelkit.hpp"

#include <algorithm>

#include "mammo/backbone.hpp"
#include "mammo/error.hpp"
#include "mammo/rng.hpp"

namespace mammo {

std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::DepthwiseConv2d: return "depthwise_conv2d";
    case LayerKind::MaxPool2d: return "maxpool2d";
    case LayerKind::GlobalAvgPool: return "global_avg_pool";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
    case LayerKind::ChannelReplicate: return "channel_replicate";
    case LayerKind::Residual: return "residual";
  }
  throw SpecError("unknown layer kind");
}

std::string_view to_string(Padding p) { return p == Padding::Valid ? "valid" : "same"; }

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::None: return "none";
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
  }
  throw SpecError("unknown activation");
}

std::string_view to_string(Backbone b) {
  switch (b) {
    case Backbone::Vgg16: return "vgg16";
    case Backbone::Resnet50: return "resnet50";
    case Backbone::Mobilenet: return "mobilenet";
  }
  throw ConfigError("unknown backbone");
}

Backbone parse_backbone(std::string_view s) {
  for (auto b : {Backbone::Vgg16, Backbone::Resnet50, Backbone::Mobilenet}) {
    if (to_string(b) == s) return b;
  }
  throw ConfigError("unknown backbone '" + std::string(s) +
                    "' (expected vgg16, resnet50 or mobilenet)");
}

bool LayerSpec::operator==(const LayerSpec& o) const {
  if (name != o.name || kind != o.kind || units != o.units || kernel != o.kernel ||
      stride != o.stride || padding != o.padding || activation != o.activation ||
      body != o.body) {
    return false;
  }
  if (!projection || !o.projection) return !projection && !o.projection;
  return *projection == *o.projection;
}

LayerSpec conv2d(std::string name, int filters, int k, Activation act, Padding pad, int stride) {
  LayerSpec l;
  l.name = std::move(name);
  l.kind = LayerKind::Conv2d;
  l.units = filters;
  l.kernel = {k, k};
  l.stride = {stride, stride};
  l.padding = pad;
  l.activation = act;
  return l;
}

LayerSpec depthwise_conv2d(std::string name, int k, int stride, Activation act) {
  LayerSpec l;
  l.name = std::move(name);
  l.kind = LayerKind::DepthwiseConv2d;
  l.kernel = {k, k};
  l.stride = {stride, stride};
  l.padding = Padding::Same;
  l.activation = act;
  return l;
}

LayerSpec maxpool2d(std::string name, int k, int stride, Padding pad) {
  LayerSpec l;
  l.name = std::move(name);
  l.kind = LayerKind::MaxPool2d;
  l.kernel = {k, k};
  l.stride = {stride, stride};
  l.padding = pad;
  return l;
}

LayerSpec global_avg_pool(std::string name) {
  LayerSpec l;
  l.name = std::move(name);
  l.kind = LayerKind::GlobalAvgPool;
  return l;
}

LayerSpec flatten(std::string name) {
  LayerSpec l;
  l.name = std::move(name);
  l.kind = LayerKind::Flatten;
  return l;
}

LayerSpec dense(std::string name, int units, Activation act) {
  LayerSpec l;
  l.name = std::move(name);
  l.kind = LayerKind::Dense;
  l.units = units;
  l.activation = act;
  return l;
}

LayerSpec channel_replicate(std::string name, int channels) {
  LayerSpec l;
  l.name = std::move(name);
  l.kind = LayerKind::ChannelReplicate;
  l.units = channels;
  return l;
}

LayerSpec residual(std::string name, std::vector<LayerSpec> body,
                   std::optional<LayerSpec> projection) {
  LayerSpec l;
  l.name = std::move(name);
  l.kind = LayerKind::Residual;
  l.activation = Activation::Relu;
  l.body = std::move(body);
  if (projection) l.projection = std::make_shared<LayerSpec>(std::move(*projection));
  return l;
}

std::string format_shape(const TensorShape& s) {
  if (s.flat) return "(None, " + std::to_string(s.channels) + ")";
  return "(None, " + std::to_string(s.height) + ", " + std::to_string(s.width) + ", " +
         std::to_string(s.channels) + ")";
}

namespace {

int windowed_extent(const LayerSpec& l, int in, int k, int s, const char* axis) {
  if (k < 1 || s < 1) {
    throw SpecError("layer '" + l.name + "': kernel and stride must be positive");
  }
  if (l.padding == Padding::Same) return (in + s - 1) / s;
  if (in < k) {
    throw SpecError("layer '" + l.name + "': " + axis + " extent " + std::to_string(in) +
                    " smaller than window " + std::to_string(k));
  }
  if ((in - k) % s != 0) {
    throw SpecError("layer '" + l.name + "': " + axis + " extent " + std::to_string(in) +
                    " does not tile evenly with window " + std::to_string(k) + " stride " +
                    std::to_string(s));
  }
  return (in - k) / s + 1;
}

void require_spatial(const LayerSpec& l, const TensorShape& in) {
  if (in.flat) throw SpecError("layer '" + l.name + "' needs a spatial input, got a vector");
}

}  // namespace

TensorShape infer_output(const LayerSpec& l, const TensorShape& in) {
  switch (l.kind) {
    case LayerKind::Conv2d:
    case LayerKind::DepthwiseConv2d:
    case LayerKind::MaxPool2d: {
      require_spatial(l, in);
      if (l.kind == LayerKind::Conv2d && l.units < 1) {
        throw SpecError("layer '" + l.name + "': conv filters must be positive");
      }
      TensorShape out;
      out.height = windowed_extent(l, in.height, l.kernel[0], l.stride[0], "height");
      out.width = windowed_extent(l, in.width, l.kernel[1], l.stride[1], "width");
      out.channels = l.kind == LayerKind::Conv2d ? l.units : in.channels;
      return out;
    }
    case LayerKind::GlobalAvgPool:
      require_spatial(l, in);
      return {1, 1, in.channels, false};
    case LayerKind::Flatten:
      require_spatial(l, in);
      return {1, 1, static_cast<int>(in.size()), true};
    case LayerKind::Dense:
      if (!in.flat) {
        throw SpecError("layer '" + l.name + "': dense layer needs a flattened input");
      }
      if (l.units < 1) throw SpecError("layer '" + l.name + "': dense units must be positive");
      return {1, 1, l.units, true};
    case LayerKind::ChannelReplicate:
      require_spatial(l, in);
      if (in.channels != 1 || l.units < 1) {
        throw SpecError("layer '" + l.name + "': replicate expects one input channel");
      }
      return {in.height, in.width, l.units, false};
    case LayerKind::Residual: {
      require_spatial(l, in);
      if (l.body.empty()) throw SpecError("residual block '" + l.name + "' has an empty body");
      TensorShape body = in;
      for (const auto& inner : l.body) body = infer_output(inner, body);
      const TensorShape shortcut = l.projection ? infer_output(*l.projection, in) : in;
      if (body != shortcut) {
        throw SpecError("residual block '" + l.name + "': body output " + format_shape(body) +
                        " does not match shortcut " + format_shape(shortcut));
      }
      return body;
    }
  }
  throw SpecError("layer '" + l.name + "' has an unknown kind");
}

std::int64_t layer_params(const LayerSpec& l, const TensorShape& in) {
  const std::int64_t kk = static_cast<std::int64_t>(l.kernel[0]) * l.kernel[1];
  switch (l.kind) {
    case LayerKind::Conv2d: return kk * in.channels * l.units + l.units;
    case LayerKind::DepthwiseConv2d: return kk * in.channels + in.channels;
    case LayerKind::Dense: return static_cast<std::int64_t>(in.channels) * l.units + l.units;
    case LayerKind::Residual: {
      std::int64_t total = 0;
      TensorShape shape = in;
      for (const auto& inner : l.body) {
        total += layer_params(inner, shape);
        shape = infer_output(inner, shape);
      }
      if (l.projection) total += layer_params(*l.projection, in);
      return total;
    }
    default: return 0;
  }
}

ParamCount param_count(const ModelSpec& spec) {
  ParamCount out;
  TensorShape shape = spec.input_shape;
  for (const auto& l : spec.layers) {
    LayerSummary s;
    s.name = l.name;
    s.kind = l.kind;
    s.output = infer_output(l, shape);
    s.params = layer_params(l, shape);
    out.total += s.params;
    out.layers.push_back(std::move(s));
    shape = out.layers.back().output;
  }
  return out;
}

namespace {

void check_activations(const LayerSpec& l, bool is_last) {
  if (l.activation == Activation::Sigmoid && !is_last) {
    throw SpecError("layer '" + l.name + "': sigmoid is reserved for the output layer");
  }
  for (const auto& inner : l.body) check_activations(inner, false);
  if (l.projection) check_activations(*l.projection, false);
}

}  // namespace

void validate_spec(const ModelSpec& spec) {
  if (spec.input_shape.flat || spec.input_shape.height < 1 || spec.input_shape.width < 1 ||
      spec.input_shape.channels != 1) {
    throw SpecError("model '" + spec.name + "': input must be a single-channel image");
  }
  if (spec.layers.empty()) throw SpecError("model '" + spec.name + "' has no layers");
  param_count(spec);  // shape inference
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    check_activations(spec.layers[i], i + 1 == spec.layers.size());
  }
  const auto& last = spec.layers.back();
  if (last.kind != LayerKind::Dense || last.units != 1 || last.activation != Activation::Sigmoid) {
    throw SpecError("model '" + spec.name + "' must end in a 1-unit sigmoid dense layer");
  }
  if (spec.backbone) {
    if (spec.layers.size() < 3) throw SpecError("transfer model '" + spec.name + "' is too short");
    const auto& hidden = spec.layers[spec.layers.size() - 2];
    if (hidden.kind != LayerKind::Dense || hidden.units != 32 ||
        hidden.activation != Activation::Relu) {
      throw SpecError("transfer model '" + spec.name +
                      "' head must be dense-32 relu followed by dense-1 sigmoid");
    }
  }
  if (spec.pretrained && !spec.backbone) {
    throw SpecError("model '" + spec.name + "' is marked pretrained but has no backbone");
  }
}

ModelSpec build_baseline() {
  ModelSpec spec;
  spec.name = "Simple model";
  spec.layers = {
      conv2d("conv2d_1", 32, 3),
      conv2d("conv2d_2", 64, 3),
      maxpool2d("max_pooling2d", 2, 2),
      flatten("flatten"),
      dense("dense_1", 32, Activation::Relu),
      dense("dense_2", 1, Activation::Sigmoid),
  };
  return spec;
}

std::string transfer_model_name(Backbone backbone, bool pretrained) {
  std::string base;
  switch (backbone) {
    case Backbone::Vgg16: base = "MVGG16"; break;
    case Backbone::Resnet50: base = "ResNet50"; break;
    case Backbone::Mobilenet: base = "Mobile Net"; break;
  }
  return pretrained ? base + "+ImageNet" : base;
}

ModelSpec build_transfer(Backbone backbone, bool pretrained) {
  return build_transfer(backbone, pretrained, default_backbones());
}

ModelSpec build_transfer(Backbone backbone, bool pretrained, const BackboneRegistry& registry) {
  const BackboneProvider& provider = registry.get(backbone);
  if (pretrained && !provider.has_pretrained_weights()) {
    throw ConfigError("pretrained weights for backbone '" + std::string(to_string(backbone)) +
                      "' are not available; register a weight file for it");
  }
  ModelSpec spec;
  spec.name = transfer_model_name(backbone, pretrained);
  spec.backbone = backbone;
  spec.pretrained = pretrained;
  spec.layers.push_back(channel_replicate("input_rgb", 3));
  for (auto& l : provider.feature_layers()) spec.layers.push_back(std::move(l));
  if (backbone != Backbone::Vgg16) spec.layers.push_back(global_avg_pool("avg_pool"));
  spec.layers.push_back(flatten("flatten"));
  spec.layers.push_back(dense("fc_1", 32, Activation::Relu));
  spec.layers.push_back(dense("predictions", 1, Activation::Sigmoid));
  validate_spec(spec);
  return spec;
}

nlohmann::ordered_json to_json(const LayerSpec& l) {
  nlohmann::ordered_json j;
  j["name"] = l.name;
  j["kind"] = to_string(l.kind);
  j["units"] = l.units;
  j["kernel"] = l.kernel;
  j["stride"] = l.stride;
  j["padding"] = to_string(l.padding);
  j["activation"] = to_string(l.activation);
  if (l.kind == LayerKind::Residual) {
    j["body"] = nlohmann::ordered_json::array();
    for (const auto& inner : l.body) j["body"].push_back(to_json(inner));
    j["projection"] = l.projection ? to_json(*l.projection) : nlohmann::ordered_json();
  }
  return j;
}

namespace {

template <class Enum, std::size_t N>
Enum parse_enum(const std::string& s, const std::array<Enum, N>& values, const char* what) {
  for (auto v : values) {
    if (to_string(v) == s) return v;
  }
  throw SpecError(std::string("unknown ") + what + " '" + s + "'");
}

}  // namespace

LayerSpec layer_from_json(const nlohmann::json& j) {
  try {
    LayerSpec l;
    l.name = j.at("name").get<std::string>();
    l.kind = parse_enum(j.at("kind").get<std::string>(),
                        std::array{LayerKind::Conv2d, LayerKind::DepthwiseConv2d,
                                   LayerKind::MaxPool2d, LayerKind::GlobalAvgPool,
                                   LayerKind::Flatten, LayerKind::Dense,
                                   LayerKind::ChannelReplicate, LayerKind::Residual},
                        "layer kind");
    l.units = j.value("units", 0);
    l.kernel = j.value("kernel", std::array<int, 2>{1, 1});
    l.stride = j.value("stride", std::array<int, 2>{1, 1});
    l.padding = parse_enum(j.value("padding", std::string("valid")),
                           std::array{Padding::Valid, Padding::Same}, "padding");
    l.activation = parse_enum(j.value("activation", std::string("none")),
                              std::array{Activation::None, Activation::Relu, Activation::Sigmoid},
                              "activation");
    if (j.contains("body")) {
      for (const auto& inner : j.at("body")) l.body.push_back(layer_from_json(inner));
    }
    if (j.contains("projection") && !j.at("projection").is_null()) {
      l.projection = std::make_shared<LayerSpec>(layer_from_json(j.at("projection")));
    }
    return l;
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("malformed layer spec: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const ModelSpec& spec) {
  nlohmann::ordered_json j;
  j["name"] = spec.name;
  j["input_shape"] = {spec.input_shape.height, spec.input_shape.width, spec.input_shape.channels};
  j["backbone"] = spec.backbone ? nlohmann::ordered_json(to_string(*spec.backbone))
                                : nlohmann::ordered_json();
  j["pretrained"] = spec.pretrained;
  j["layers"] = nlohmann::ordered_json::array();
  for (const auto& l : spec.layers) j["layers"].push_back(to_json(l));
  return j;
}

ModelSpec spec_from_json(const nlohmann::json& j) {
  ModelSpec spec;
  try {
    spec.name = j.at("name").get<std::string>();
    const auto shape = j.at("input_shape").get<std::array<int, 3>>();
    spec.input_shape = {shape[0], shape[1], shape[2], false};
    if (!j.at("backbone").is_null()) {
      spec.backbone = parse_backbone(j.at("backbone").get<std::string>());
    }
    spec.pretrained = j.at("pretrained").get<bool>();
    for (const auto& l : j.at("layers")) spec.layers.push_back(layer_from_json(l));
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("malformed model spec: ") + e.what());
  } catch (const ConfigError& e) {
    throw SpecError(e.what());
  }
  validate_spec(spec);
  return spec;
}

std::uint64_t spec_hash(const ModelSpec& spec) {
  const std::string text = to_json(spec).dump();
  return fnv1a(text.data(), text.size());
}

}  // namespace mammo
