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

#include "mammo/modelkit.hpp"
#include "mammo/network.hpp"
#include "mammo/tensor.hpp"

namespace mammo::nn {

// Resizes `t` to hold `n` samples of `shape`, reusing the buffer when the
// dimensions already match. Contents are unspecified afterwards.
void ensure(Tensor& t, int n, const TensorShape& shape);

class Layer {
 public:
  Layer(std::string name, TensorShape in, TensorShape out)
      : name_(std::move(name)), in_(in), out_(out) {}
  virtual ~Layer() = default;

  const std::string& name() const { return name_; }
  const TensorShape& in_shape() const { return in_; }
  const TensorShape& out_shape() const { return out_; }

  // Called before each forward pass; refreshes derived kernel data.
  virtual void prepare() {}
  // `y` is pre-sized by the caller and fully overwritten.
  virtual void forward(const Tensor& x, Tensor& y) = 0;
  // `dy` may be modified. `dx`, when non-null, is pre-sized and fully
  // overwritten. Parameter gradients are accumulated.
  virtual void backward(const Tensor& x, const Tensor& y, Tensor& dy, Tensor* dx) = 0;
  virtual void collect(std::vector<Parameter*>& out) { (void)out; }

 protected:
  void set_out_shape(const TensorShape& out) { out_ = out; }

 private:
  std::string name_;
  TensorShape in_;
  TensorShape out_;
};

// `prefix` is prepended to parameter names ("block/"). A sigmoid activation
// is left to the caller.
std::unique_ptr<Layer> make_layer(const LayerSpec& spec, const TensorShape& in,
                                  const std::string& prefix = "");

// Builds a layer sequence. With `fuse`, a 3x3 convolution followed by a
// 2x2/stride-2 max pool becomes one layer with identical outputs, so the
// result may hold fewer layers than `specs`.
std::vector<std::unique_ptr<Layer>> build_stack(const std::vector<LayerSpec>& specs,
                                                const TensorShape& in,
                                                const std::string& prefix = "",
                                                bool fuse = true);

// He-uniform kernel, zero bias; the stream is derived from the parameter name.
void init_parameter(Parameter& p, int fan_in, std::uint64_t seed);

}  // namespace mammo::nn
