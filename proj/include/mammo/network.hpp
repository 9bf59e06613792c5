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

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mammo/backbone.hpp"
#include "mammo/checkpoint.hpp"
#include "mammo/modelkit.hpp"
#include "mammo/tensor.hpp"

namespace mammo {

namespace nn {
class Layer;
}

struct Parameter {
  std::string name;
  std::vector<int> shape;
  std::vector<float> value;
  std::vector<float> grad;
};

// Executable form of a ModelSpec. Input tensors are N x H x W x 1. The
// final sigmoid is folded into the loss: forward() returns logits and
// predict() returns probabilities.
class Model {
 public:
  // Weights are He-uniform initialized from `seed`. For a pretrained spec
  // the backbone tensors are then copied from the registry's provider;
  // missing or mis-shaped tensors raise ConfigError.
  Model(ModelSpec spec, std::uint64_t seed);
  Model(ModelSpec spec, std::uint64_t seed, const BackboneRegistry& registry);
  ~Model();
  Model(Model&&) noexcept;
  Model& operator=(Model&&) noexcept;

  const ModelSpec& spec() const { return spec_; }

  // Keeps the activations needed by backward(); `x` must stay alive until
  // then.
  const std::vector<float>& forward(const Tensor& x);
  // Gradient of the loss with respect to the logits of the last forward().
  // Parameter gradients are accumulated.
  void backward(const std::vector<float>& dlogits);

  // Sigmoid probabilities, computed `chunk` samples at a time.
  std::vector<float> predict(const Tensor& x, int chunk = 32);

  std::vector<Parameter*> parameters();
  void zero_grad();

  WeightMap weights() const;
  // Every parameter must be present with a matching shape (ConfigError).
  void set_weights(const WeightMap& weights);

  Checkpoint to_checkpoint() const;
  static Model from_checkpoint(const Checkpoint& checkpoint);

 private:
  Model(ModelSpec spec, std::uint64_t seed, const BackboneRegistry* registry);

  ModelSpec spec_;
  std::vector<std::unique_ptr<nn::Layer>> layers_;
  std::vector<Tensor> acts_;  // acts_[i] is the output of layer i
  const Tensor* input_ = nullptr;
  Tensor grad_a_;
  Tensor grad_b_;
  std::vector<float> logits_;
};

// Adam with bias correction.
class Adam {
 public:
  explicit Adam(double learning_rate = 1e-3, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-7);
  void step(const std::vector<Parameter*>& params);

 private:
  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  std::int64_t t_ = 0;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
};

}  // namespace mammo
