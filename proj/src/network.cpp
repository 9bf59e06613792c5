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

#include "mammo/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mammo/error.hpp"
#include "nn/layers.hpp"

namespace mammo {

namespace {

int fan_in(const Parameter& p) {
  // conv [kh][kw][in][out], depthwise [kh][kw][c], dense [in][units]
  switch (p.shape.size()) {
    case 4: return p.shape[0] * p.shape[1] * p.shape[2];
    case 3: return p.shape[0] * p.shape[1];
    case 2: return p.shape[0];
    default: return 1;
  }
}

std::string top_level(const std::string& name) { return name.substr(0, name.find('/')); }

}  // namespace

Model::Model(ModelSpec spec, std::uint64_t seed) : Model(std::move(spec), seed, default_backbones()) {}

Model::Model(ModelSpec spec, std::uint64_t seed, const BackboneRegistry& registry)
    : Model(std::move(spec), seed, &registry) {}

Model::Model(ModelSpec spec, std::uint64_t seed, const BackboneRegistry* registry)
    : spec_(std::move(spec)) {
  validate_spec(spec_);
  layers_ = nn::build_stack(spec_.layers, spec_.input_shape);
  acts_.resize(layers_.size());
  for (Parameter* p : parameters()) nn::init_parameter(*p, fan_in(*p), seed);

  if (!spec_.pretrained || !registry) return;
  const BackboneProvider& provider = registry->get(*spec_.backbone);
  const WeightMap& source = provider.pretrained_weights();
  std::set<std::string> feature_names;
  for (const auto& l : provider.feature_layers()) feature_names.insert(l.name);
  for (Parameter* p : parameters()) {
    if (!feature_names.contains(top_level(p->name))) continue;
    const auto it = source.find(p->name);
    if (it == source.end()) {
      throw ConfigError("pretrained weights for '" + std::string(to_string(*spec_.backbone)) +
                        "' lack tensor '" + p->name + "'");
    }
    if (it->second.shape != p->shape) {
      throw ConfigError("pretrained tensor '" + p->name + "' has a mismatched shape");
    }
    p->value = it->second.values;
  }
}

Model::~Model() = default;
Model::Model(Model&&) noexcept = default;
Model& Model::operator=(Model&&) noexcept = default;

const std::vector<float>& Model::forward(const Tensor& x) {
  const TensorShape& in = spec_.input_shape;
  if (x.c != in.channels || x.h != in.height || x.w != in.width || x.n < 1) {
    throw InputError("model '" + spec_.name + "' expects N x " + std::to_string(in.channels) +
                     " x " + std::to_string(in.height) + " x " + std::to_string(in.width) +
                     " input");
  }
  input_ = &x;
  const Tensor* cur = &x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i]->prepare();
    nn::ensure(acts_[i], x.n, layers_[i]->out_shape());
    layers_[i]->forward(*cur, acts_[i]);
    cur = &acts_[i];
  }
  logits_.assign(cur->data.begin(), cur->data.end());
  return logits_;
}

void Model::backward(const std::vector<float>& dlogits) {
  if (!input_ || dlogits.size() != logits_.size()) {
    throw InputError("backward() needs one gradient per logit of the preceding forward()");
  }
  const int n = input_->n;
  nn::ensure(grad_a_, n, layers_.back()->out_shape());
  std::copy(dlogits.begin(), dlogits.end(), grad_a_.data.begin());
  Tensor* cur = &grad_a_;
  Tensor* other = &grad_b_;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const Tensor& in = i == 0 ? *input_ : acts_[i - 1];
    Tensor* dx = nullptr;
    if (i > 0) {
      nn::ensure(*other, n, layers_[i]->in_shape());
      dx = other;
    }
    layers_[i]->backward(in, acts_[i], *cur, dx);
    std::swap(cur, other);
  }
}

std::vector<float> Model::predict(const Tensor& x, int chunk) {
  if (chunk < 1) throw InputError("predict chunk must be >= 1");
  std::vector<float> out;
  out.reserve(x.n);
  Tensor batch;
  for (int start = 0; start < x.n; start += chunk) {
    const int m = std::min(chunk, x.n - start);
    if (batch.n != m) batch.resize(m, x.c, x.h, x.w);
    std::copy(x.sample(start), x.sample(start) + m * x.sample_size(), batch.data.begin());
    for (float z : forward(batch)) out.push_back(1.0f / (1.0f + std::exp(-z)));
  }
  input_ = nullptr;
  return out;
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) l->collect(out);
  return out;
}

void Model::zero_grad() {
  for (Parameter* p : parameters()) std::fill(p->grad.begin(), p->grad.end(), 0.0f);
}

WeightMap Model::weights() const {
  WeightMap out;
  for (Parameter* p : const_cast<Model*>(this)->parameters()) {
    out.emplace(p->name, WeightTensor{p->shape, p->value});
  }
  return out;
}

void Model::set_weights(const WeightMap& weights) {
  for (Parameter* p : parameters()) {
    const auto it = weights.find(p->name);
    if (it == weights.end()) throw ConfigError("weights lack tensor '" + p->name + "'");
    if (it->second.shape != p->shape || it->second.values.size() != p->value.size()) {
      throw ConfigError("tensor '" + p->name + "' has a mismatched shape");
    }
    p->value = it->second.values;
  }
}

Checkpoint Model::to_checkpoint() const { return Checkpoint{spec_, weights()}; }

Model Model::from_checkpoint(const Checkpoint& checkpoint) {
  Model model(checkpoint.spec, 0, nullptr);
  model.set_weights(checkpoint.weights);
  return model;
}

Adam::Adam(double learning_rate, double beta1, double beta2, double epsilon)
    : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
}

void Adam::step(const std::vector<Parameter*>& params) {
  if (m_.empty()) {
    for (const Parameter* p : params) {
      m_.emplace_back(p->value.size(), 0.0f);
      v_.emplace_back(p->value.size(), 0.0f);
    }
  }
  if (m_.size() != params.size()) throw InputError("Adam: parameter set changed between steps");
  ++t_;
  const double correction = std::sqrt(1.0 - std::pow(beta2_, static_cast<double>(t_))) /
                            (1.0 - std::pow(beta1_, static_cast<double>(t_)));
  const float lr_t = static_cast<float>(lr_ * correction);
  const float b1 = static_cast<float>(beta1_);
  const float b2 = static_cast<float>(beta2_);
  const float eps = static_cast<float>(eps_);
  for (std::size_t k = 0; k < params.size(); ++k) {
    float* w = params[k]->value.data();
    const float* g = params[k]->grad.data();
    float* m = m_[k].data();
    float* v = v_[k].data();
    const std::size_t n = params[k]->value.size();
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = b1 * m[i] + (1.0f - b1) * g[i];
      v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
      w[i] -= lr_t * m[i] / (std::sqrt(v[i]) + eps);
    }
  }
}

}  // namespace mammo
