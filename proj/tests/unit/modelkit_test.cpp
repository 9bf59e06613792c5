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

#include <memory>

#include "mammo/backbone.hpp"
#include "mammo/error.hpp"
#include "mammo/modelkit.hpp"
#include "mammo/network.hpp"

using namespace mammo;

namespace {

TEST(BaselineTest, ShapesAndParametersMatchTheArchitectureTable) {
  const ParamCount pc = param_count(build_baseline());
  ASSERT_EQ(pc.layers.size(), 6u);
  const std::vector<TensorShape> shapes = {{254, 254, 32, false}, {252, 252, 64, false},
                                           {126, 126, 64, false}, {1, 1, 1016064, true},
                                           {1, 1, 32, true},      {1, 1, 1, true}};
  const std::vector<std::int64_t> params = {320, 18496, 0, 0, 32514080, 33};
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(pc.layers[i].output.height, shapes[i].height) << i;
    EXPECT_EQ(pc.layers[i].output.width, shapes[i].width) << i;
    EXPECT_EQ(pc.layers[i].output.channels, shapes[i].channels) << i;
    EXPECT_EQ(pc.layers[i].output.size(), shapes[i].size()) << i;
    EXPECT_EQ(pc.layers[i].params, params[i]) << i;
  }
  EXPECT_EQ(pc.total, 32532929);
  EXPECT_EQ(format_shape(pc.layers[0].output), "(None, 254, 254, 32)");
  EXPECT_EQ(format_shape(pc.layers[3].output), "(None, 1016064)");
}

TEST(BaselineTest, LayerKindsAndActivations) {
  const ModelSpec s = build_baseline();
  EXPECT_EQ(s.input_shape, (TensorShape{256, 256, 1, false}));
  EXPECT_EQ(s.layers[0].kind, LayerKind::Conv2d);
  EXPECT_EQ(s.layers[0].activation, Activation::Relu);
  EXPECT_EQ(s.layers[2].kind, LayerKind::MaxPool2d);
  EXPECT_EQ(s.layers[4].activation, Activation::Relu);
  EXPECT_EQ(s.layers[5].units, 1);
  EXPECT_EQ(s.layers[5].activation, Activation::Sigmoid);
  EXPECT_FALSE(s.backbone.has_value());
}

TEST(ParamCountTest, MatchesInstantiatedWeights) {
  for (const ModelSpec& spec : {build_baseline(), build_transfer(Backbone::Vgg16, false),
                                build_transfer(Backbone::Mobilenet, false)}) {
    const Model model(spec, 1);
    std::int64_t n = 0;
    for (const auto& [name, w] : model.weights()) n += static_cast<std::int64_t>(w.values.size());
    EXPECT_EQ(n, param_count(spec).total) << spec.name;
  }
}

TEST(ParamCountTest, RejectsNonIntegralPooling) {
  ModelSpec s = build_baseline();
  s.input_shape = {255, 255, 1, false};
  EXPECT_THROW(param_count(s), SpecError);
  EXPECT_THROW(infer_output(dense("d", 0, Activation::Relu), {1, 1, 4, true}), SpecError);
}

TEST(TransferTest, HeadIsDenseThirtyTwoThenOne) {
  for (Backbone b : {Backbone::Vgg16, Backbone::Resnet50, Backbone::Mobilenet}) {
    const ModelSpec s = build_transfer(b, false);
    ASSERT_GE(s.layers.size(), 3u);
    const auto& h1 = s.layers[s.layers.size() - 2];
    const auto& h2 = s.layers.back();
    EXPECT_EQ(h1.kind, LayerKind::Dense);
    EXPECT_EQ(h1.units, 32);
    EXPECT_EQ(h1.activation, Activation::Relu);
    EXPECT_EQ(h2.units, 1);
    EXPECT_EQ(h2.activation, Activation::Sigmoid);
    EXPECT_EQ(s.backbone, b);
    for (const auto& l : s.layers) {
      if (l.kind == LayerKind::Dense) EXPECT_LT(l.units, 4096) << "wide classifier kept";
    }
  }
}

TEST(TransferTest, HeadParameterArithmetic) {
  const ModelSpec s = build_transfer(Backbone::Vgg16, false);
  const ParamCount pc = param_count(s);
  const std::size_t n = pc.layers.size();
  const std::int64_t features = pc.layers[n - 3].output.size();
  EXPECT_EQ(pc.layers[n - 2].params + pc.layers[n - 1].params, 32 * (features + 1) + 33);
  EXPECT_EQ(features, 8 * 8 * 512);
}

TEST(TransferTest, HeadDoesNotDependOnBackbone) {
  const ModelSpec v = build_transfer(Backbone::Vgg16, false);
  const ModelSpec m = build_transfer(Backbone::Mobilenet, false);
  EXPECT_EQ(v.layers.back(), m.layers.back());
  EXPECT_EQ(v.layers[v.layers.size() - 2].units, m.layers[m.layers.size() - 2].units);
  EXPECT_NE(v.layers.size(), m.layers.size());
}

TEST(TransferTest, Names) {
  EXPECT_EQ(build_transfer(Backbone::Vgg16, false).name, "MVGG16");
  EXPECT_EQ(transfer_model_name(Backbone::Vgg16, true), "MVGG16+ImageNet");
  EXPECT_EQ(transfer_model_name(Backbone::Resnet50, false), "ResNet50");
  EXPECT_EQ(transfer_model_name(Backbone::Mobilenet, false), "Mobile Net");
  EXPECT_EQ(parse_backbone("vgg16"), Backbone::Vgg16);
  EXPECT_THROW(parse_backbone("alexnet"), ConfigError);
}

TEST(TransferTest, PretrainedWithoutWeightsIsAnError) {
  EXPECT_THROW(build_transfer(Backbone::Vgg16, true), ConfigError);
}

TEST(TransferTest, PretrainedWeightsComeFromTheProvider) {
  auto provider = std::make_shared<StandardBackbone>(Backbone::Vgg16, 16);
  BackboneRegistry reg;
  reg.register_provider(provider);
  const ModelSpec random_spec = build_transfer(Backbone::Vgg16, false, reg);
  const Model donor(random_spec, 99);
  provider->set_weights(donor.weights());

  const ModelSpec spec = build_transfer(Backbone::Vgg16, true, reg);
  EXPECT_EQ(spec.name, "MVGG16+ImageNet");
  // Topology is independent of the initialization.
  EXPECT_EQ(spec.layers, random_spec.layers);
  const Model model(spec, 5, reg);
  const WeightMap got = model.weights();
  const WeightMap& want = provider->pretrained_weights();
  ASSERT_FALSE(want.empty());
  for (const auto& [name, w] : want) EXPECT_EQ(got.at(name), w) << name;
  // The head is not part of the backbone and keeps its seeded values.
  const std::string head = spec.layers.back().name + "/kernel";
  EXPECT_FALSE(want.contains(head));
  EXPECT_NE(got.at(head), donor.weights().at(head));
}

TEST(SpecJsonTest, RoundTripAndHash) {
  for (const ModelSpec& s : {build_baseline(), build_transfer(Backbone::Resnet50, false),
                             build_transfer(Backbone::Mobilenet, false)}) {
    const ModelSpec back = spec_from_json(to_json(s));
    EXPECT_EQ(back, s);
    EXPECT_EQ(spec_hash(back), spec_hash(s));
  }
  EXPECT_NE(spec_hash(build_baseline()), spec_hash(build_transfer(Backbone::Vgg16, false)));
}

TEST(SpecJsonTest, ValidationCatchesBadHeads) {
  ModelSpec s = build_baseline();
  s.layers.back().activation = Activation::Relu;
  EXPECT_THROW(validate_spec(s), SpecError);
  s = build_baseline();
  s.layers.pop_back();
  EXPECT_THROW(validate_spec(s), SpecError);
}

}  // namespace
