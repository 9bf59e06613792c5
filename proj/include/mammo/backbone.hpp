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

#include <filesystem>
#include <map>
#include <memory>
#include <vector>

#include "mammo/checkpoint.hpp"
#include "mammo/modelkit.hpp"

namespace mammo {

// Supplies the feature-extractor stack of a transfer model and, optionally,
// weights learned on another data set for that stack.
class BackboneProvider {
 public:
  virtual ~BackboneProvider() = default;

  virtual Backbone kind() const = 0;
  virtual std::vector<LayerSpec> feature_layers() const = 0;
  virtual bool has_pretrained_weights() const = 0;
  // Throws ConfigError when has_pretrained_weights() is false.
  virtual const WeightMap& pretrained_weights() const = 0;
};

// Feature stacks of the three reference networks on a 3-channel input.
// `width_divisor` divides every filter count (minimum 1); 1 gives the
// published widths. Batch normalization is not modelled.
std::vector<LayerSpec> vgg16_features(int width_divisor = 1);
std::vector<LayerSpec> resnet50_features(int width_divisor = 1);
std::vector<LayerSpec> mobilenet_features(int width_divisor = 1);

class StandardBackbone final : public BackboneProvider {
 public:
  explicit StandardBackbone(Backbone kind, int width_divisor = 1);

  Backbone kind() const override { return kind_; }
  int width_divisor() const { return width_divisor_; }
  std::vector<LayerSpec> feature_layers() const override;
  bool has_pretrained_weights() const override { return !weights_.empty(); }
  const WeightMap& pretrained_weights() const override;

  // Keeps the tensors that belong to this backbone's feature layers.
  // Throws ConfigError when none do.
  void set_weights(const WeightMap& weights);
  void load_weights(const std::filesystem::path& checkpoint);

 private:
  Backbone kind_;
  int width_divisor_;
  WeightMap weights_;
};

class BackboneRegistry {
 public:
  // Full-width topologies without pretrained weights.
  BackboneRegistry();

  void register_provider(std::shared_ptr<const BackboneProvider> provider);
  const BackboneProvider& get(Backbone backbone) const;

 private:
  std::map<Backbone, std::shared_ptr<const BackboneProvider>> providers_;
};

const BackboneRegistry& default_backbones();

}  // namespace mammo
