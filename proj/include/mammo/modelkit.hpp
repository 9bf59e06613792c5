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

#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace mammo {

class BackboneRegistry;

enum class LayerKind {
  Conv2d,
  DepthwiseConv2d,
  MaxPool2d,
  GlobalAvgPool,
  Flatten,
  Dense,
  ChannelReplicate,  // copies a 1-channel input to `units` channels
  Residual,          // relu(body(x) + shortcut(x)); shortcut is identity or `projection`
};
enum class Padding { Valid, Same };
enum class Activation { None, Relu, Sigmoid };
enum class Backbone { Vgg16, Resnet50, Mobilenet };

std::string_view to_string(LayerKind k);
std::string_view to_string(Padding p);
std::string_view to_string(Activation a);
std::string_view to_string(Backbone b);
Backbone parse_backbone(std::string_view s);  // ConfigError on unknown names

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::Dense;
  int units = 0;                   // filters for conv, units for dense, channels for replicate
  std::array<int, 2> kernel{1, 1};  // also the pool window
  std::array<int, 2> stride{1, 1};
  Padding padding = Padding::Valid;
  Activation activation = Activation::None;
  std::vector<LayerSpec> body;               // Residual only
  std::shared_ptr<LayerSpec> projection;     // Residual only, optional

  bool operator==(const LayerSpec& other) const;
};

LayerSpec conv2d(std::string name, int filters, int k, Activation act = Activation::Relu,
                 Padding pad = Padding::Valid, int stride = 1);
LayerSpec depthwise_conv2d(std::string name, int k, int stride, Activation act = Activation::Relu);
LayerSpec maxpool2d(std::string name, int k, int stride, Padding pad = Padding::Valid);
LayerSpec global_avg_pool(std::string name);
LayerSpec flatten(std::string name);
LayerSpec dense(std::string name, int units, Activation act);
LayerSpec channel_replicate(std::string name, int channels);
LayerSpec residual(std::string name, std::vector<LayerSpec> body,
                   std::optional<LayerSpec> projection = std::nullopt);

struct TensorShape {
  int height = 0;
  int width = 0;
  int channels = 0;
  bool flat = false;  // after flatten/dense: a vector of `channels` features

  std::int64_t size() const {
    return static_cast<std::int64_t>(height) * width * channels;
  }
  bool operator==(const TensorShape&) const = default;
};

// Keras-style rendering: "(None, 254, 254, 32)" or "(None, 32)".
std::string format_shape(const TensorShape& s);

struct ModelSpec {
  std::string name;
  TensorShape input_shape{256, 256, 1, false};
  std::vector<LayerSpec> layers;
  std::optional<Backbone> backbone;
  bool pretrained = false;

  bool operator==(const ModelSpec&) const = default;
};

struct LayerSummary {
  std::string name;
  LayerKind kind = LayerKind::Dense;
  TensorShape output;
  std::int64_t params = 0;
};

struct ParamCount {
  std::vector<LayerSummary> layers;
  std::int64_t total = 0;
};

// Shape of one layer's output. Throws SpecError when the layer cannot be
// applied (non-integral pooled/strided size, kernel larger than input,
// flatten after flatten, ...).
TensorShape infer_output(const LayerSpec& layer, const TensorShape& input);
std::int64_t layer_params(const LayerSpec& layer, const TensorShape& input);

// conv: kh*kw*in*filters + filters; depthwise: kh*kw*in + in;
// dense: in*units + units; everything else 0.
ParamCount param_count(const ModelSpec& spec);

// Checks shape inference plus the head contract: the last layer is the only
// 1-unit sigmoid dense layer, and transfer models end in dense-32 relu,
// dense-1 sigmoid. Throws SpecError.
void validate_spec(const ModelSpec& spec);

// conv 32 -> conv 64 -> maxpool 2x2 -> flatten -> dense 32 -> dense 1.
ModelSpec build_baseline();

// Replicates the grayscale patch to three channels, runs the backbone's
// feature stack, then flatten (after a global pool for resnet/mobilenet)
// and the modified head: dense-32 relu, dense-1 sigmoid. The wide
// classifier of the original networks is not included. Throws ConfigError
// when pretrained weights are requested but the registered provider has
// none.
ModelSpec build_transfer(Backbone backbone, bool pretrained);
ModelSpec build_transfer(Backbone backbone, bool pretrained, const BackboneRegistry& registry);

// Display names matching the usual comparison table: "Simple model",
// "MVGG16", "MVGG16+ImageNet", "ResNet50", "Mobile Net", ...
std::string transfer_model_name(Backbone backbone, bool pretrained);

nlohmann::ordered_json to_json(const LayerSpec& layer);
LayerSpec layer_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);  // validates

// FNV-1a of the compact JSON form; embedded in checkpoints.
std::uint64_t spec_hash(const ModelSpec& spec);

}  // namespace mammo
