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

#include "mammo/backbone.hpp"

#include <algorithm>
#include <set>

#include "mammo/error.hpp"

namespace mammo {

namespace {

int scaled(int filters, int divisor) { return std::max(1, filters / divisor); }

}  // namespace

std::vector<LayerSpec> vgg16_features(int d) {
  struct Block {
    int filters;
    int convs;
  };
  constexpr Block blocks[] = {{64, 2}, {128, 2}, {256, 3}, {512, 3}, {512, 3}};
  std::vector<LayerSpec> layers;
  int b = 1;
  for (const auto& block : blocks) {
    const std::string prefix = "block" + std::to_string(b++);
    for (int i = 1; i <= block.convs; ++i) {
      layers.push_back(conv2d(prefix + "_conv" + std::to_string(i), scaled(block.filters, d), 3,
                              Activation::Relu, Padding::Same));
    }
    layers.push_back(maxpool2d(prefix + "_pool", 2, 2));
  }
  return layers;
}

std::vector<LayerSpec> resnet50_features(int d) {
  std::vector<LayerSpec> layers;
  layers.push_back(conv2d("conv1", scaled(64, d), 7, Activation::Relu, Padding::Same, 2));
  layers.push_back(maxpool2d("pool1", 3, 2, Padding::Same));
  struct Stage {
    int width;
    int blocks;
    int stride;
  };
  constexpr Stage stages[] = {{64, 3, 1}, {128, 4, 2}, {256, 6, 2}, {512, 3, 2}};
  int s = 2;
  for (const auto& stage : stages) {
    const int w = scaled(stage.width, d);
    const int out = scaled(4 * stage.width, d);
    for (int b = 1; b <= stage.blocks; ++b) {
      const std::string name = "conv" + std::to_string(s) + "_block" + std::to_string(b);
      const int stride = b == 1 ? stage.stride : 1;
      std::vector<LayerSpec> body = {
          conv2d("1_conv", w, 1, Activation::Relu, Padding::Same, stride),
          conv2d("2_conv", w, 3, Activation::Relu, Padding::Same),
          conv2d("3_conv", out, 1, Activation::None),
      };
      std::optional<LayerSpec> projection;
      if (b == 1) projection = conv2d("0_conv", out, 1, Activation::None, Padding::Same, stride);
      layers.push_back(residual(name, std::move(body), std::move(projection)));
    }
    ++s;
  }
  return layers;
}

std::vector<LayerSpec> mobilenet_features(int d) {
  std::vector<LayerSpec> layers;
  layers.push_back(conv2d("conv1", scaled(32, d), 3, Activation::Relu, Padding::Same, 2));
  constexpr std::pair<int, int> blocks[] = {{64, 1},  {128, 2}, {128, 1}, {256, 2}, {256, 1},
                                            {512, 2}, {512, 1}, {512, 1}, {512, 1}, {512, 1},
                                            {512, 1}, {1024, 2}, {1024, 1}};
  int i = 1;
  for (const auto& [filters, stride] : blocks) {
    const std::string n = std::to_string(i++);
    layers.push_back(depthwise_conv2d("conv_dw_" + n, 3, stride, Activation::Relu));
    layers.push_back(conv2d("conv_pw_" + n, scaled(filters, d), 1, Activation::Relu));
  }
  return layers;
}

StandardBackbone::StandardBackbone(Backbone kind, int width_divisor)
    : kind_(kind), width_divisor_(width_divisor) {
  if (width_divisor < 1) throw ConfigError("backbone width divisor must be >= 1");
}

std::vector<LayerSpec> StandardBackbone::feature_layers() const {
  switch (kind_) {
    case Backbone::Vgg16: return vgg16_features(width_divisor_);
    case Backbone::Resnet50: return resnet50_features(width_divisor_);
    case Backbone::Mobilenet: return mobilenet_features(width_divisor_);
  }
  throw ConfigError("unknown backbone");
}

const WeightMap& StandardBackbone::pretrained_weights() const {
  if (weights_.empty()) {
    throw ConfigError("no pretrained weights registered for backbone '" +
                      std::string(to_string(kind_)) + "'");
  }
  return weights_;
}

void StandardBackbone::set_weights(const WeightMap& weights) {
  std::set<std::string> names;
  for (const auto& l : feature_layers()) names.insert(l.name);
  WeightMap kept;
  for (const auto& [name, tensor] : weights) {
    if (names.contains(name.substr(0, name.find('/')))) kept.emplace(name, tensor);
  }
  if (kept.empty()) {
    throw ConfigError("weight set contains no parameters for backbone '" +
                      std::string(to_string(kind_)) + "'");
  }
  weights_ = std::move(kept);
}

void StandardBackbone::load_weights(const std::filesystem::path& checkpoint) {
  set_weights(load_checkpoint(checkpoint).weights);
}

BackboneRegistry::BackboneRegistry() {
  for (auto b : {Backbone::Vgg16, Backbone::Resnet50, Backbone::Mobilenet}) {
    providers_[b] = std::make_shared<StandardBackbone>(b);
  }
}

void BackboneRegistry::register_provider(std::shared_ptr<const BackboneProvider> provider) {
  if (!provider) throw ConfigError("null backbone provider");
  providers_[provider->kind()] = std::move(provider);
}

const BackboneProvider& BackboneRegistry::get(Backbone backbone) const {
  const auto it = providers_.find(backbone);
  if (it == providers_.end()) {
    throw ConfigError("no provider registered for backbone '" + std::string(to_string(backbone)) +
                      "'");
  }
  return *it->second;
}

const BackboneRegistry& default_backbones() {
  static const BackboneRegistry registry;
  return registry;
}

}  // namespace mammo
