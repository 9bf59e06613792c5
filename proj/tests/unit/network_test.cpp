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

#include <gtest/gtest.h>

#include <cmath>

#include "mammo/backbone.hpp"
#include "mammo/error.hpp"
#include "mammo/network.hpp"
#include "mammo/rng.hpp"

using namespace mammo;

namespace {

Tensor random_batch(int n, int rows, int cols, std::uint64_t seed) {
  Tensor t(n, 1, rows, cols);
  Rng rng(seed);
  for (auto& v : t.data) v = static_cast<float>(rng.uniform());
  return t;
}

ModelSpec tiny_spec() {
  ModelSpec s;
  s.name = "tiny";
  s.input_shape = {12, 12, 1, false};
  s.layers = {conv2d("c1", 8, 3), maxpool2d("p", 2, 2), flatten("f"),
              dense("d1", 6, Activation::Relu), dense("out", 1, Activation::Sigmoid)};
  return s;
}

TEST(ModelTest, SeededInitializationIsReproducible) {
  EXPECT_EQ(Model(tiny_spec(), 4).weights(), Model(tiny_spec(), 4).weights());
  EXPECT_NE(Model(tiny_spec(), 4).weights(), Model(tiny_spec(), 5).weights());
  for (const auto& [name, w] : Model(tiny_spec(), 4).weights()) {
    if (name.ends_with("/bias")) {
      for (float v : w.values) EXPECT_EQ(v, 0.0f) << name;
    }
  }
}

TEST(ModelTest, HeUniformBounds) {
  const WeightMap w = Model(tiny_spec(), 1).weights();
  const auto& k = w.at("c1/kernel");
  EXPECT_EQ(k.shape, (std::vector<int>{3, 3, 1, 8}));
  const double limit = std::sqrt(6.0 / 9.0);
  for (float v : k.values) EXPECT_LE(std::abs(v), limit);
}

TEST(ModelTest, PredictionsAreOrderPreservingProbabilities) {
  Model model(tiny_spec(), 2);
  const Tensor x = random_batch(5, 12, 12, 3);
  const auto all = model.predict(x, 2);
  ASSERT_EQ(all.size(), 5u);
  for (int i = 0; i < 5; ++i) {
    Tensor one(1, 1, 12, 12);
    std::copy(x.sample(i), x.sample(i) + x.sample_size(), one.sample(0));
    EXPECT_NEAR(model.predict(one)[0], all[i], 1e-6);
    EXPECT_GE(all[i], 0.0f);
    EXPECT_LE(all[i], 1.0f);
  }
}

TEST(ModelTest, ShapeMismatchIsAnInputError) {
  Model model(tiny_spec(), 2);
  EXPECT_THROW(model.forward(random_batch(2, 10, 12, 1)), InputError);
  model.forward(random_batch(2, 12, 12, 1));
  EXPECT_THROW(model.backward(std::vector<float>(3, 0.0f)), InputError);
}

TEST(ModelTest, SetWeightsChecksNamesAndShapes) {
  Model model(tiny_spec(), 2);
  WeightMap w = Model(tiny_spec(), 9).weights();
  model.set_weights(w);
  EXPECT_EQ(model.weights(), w);
  w.at("d1/kernel").shape = {6, 1};
  EXPECT_THROW(model.set_weights(w), ConfigError);
  w.erase("d1/kernel");
  EXPECT_THROW(model.set_weights(w), ConfigError);
}

TEST(ModelTest, TransferModelsRunAtReducedWidth) {
  for (Backbone b : {Backbone::Vgg16, Backbone::Resnet50, Backbone::Mobilenet}) {
    BackboneRegistry reg;
    reg.register_provider(std::make_shared<StandardBackbone>(b, 16));
    Model model(build_transfer(b, false, reg), 1, reg);
    const auto p = model.predict(random_batch(2, 256, 256, 7));
    ASSERT_EQ(p.size(), 2u);
    for (float v : p) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
}

TEST(AdamTest, MatchesClosedFormFirstSteps) {
  Parameter p{"w", {3}, {1.0f, -2.0f, 0.5f}, {0.3f, -0.1f, 0.0f}};
  Adam adam(0.01);
  adam.step({&p});
  // First step: m = 0.1 g, v = 0.001 g^2, lr_t = lr sqrt(0.001) / 0.1.
  const double lr = 0.01, eps = 1e-7;
  const double want0 =
      1.0 - lr * std::sqrt(0.001) / 0.1 * (0.1 * 0.3) / (std::sqrt(0.001) * 0.3 + eps);
  EXPECT_NEAR(p.value[0], want0, 1e-6);
  EXPECT_NEAR(p.value[1], -2.0 + lr, 1e-6);
  EXPECT_EQ(p.value[2], 0.5f);

  // Second step, same gradient, computed from the moment recurrences.
  const double g = 0.3;
  const double m = 0.9 * (0.1 * g) + 0.1 * g;
  const double v = 0.999 * (0.001 * g * g) + 0.001 * g * g;
  const double lr_t = lr * std::sqrt(1.0 - 0.999 * 0.999) / (1.0 - 0.9 * 0.9);
  const double before = p.value[0];
  adam.step({&p});
  EXPECT_NEAR(p.value[0], before - lr_t * m / (std::sqrt(v) + eps), 1e-6);
}

}  // namespace
