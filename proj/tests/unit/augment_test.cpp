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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "mammo/augment.hpp"
#include "mammo/error.hpp"
#include "mammo/rng.hpp"

using namespace mammo;

namespace {

Image random_image(std::uint64_t seed, int rows = kPatchSize, int cols = kPatchSize) {
  Image im(rows, cols);
  Rng rng(seed);
  for (auto& v : im.pixels) v = static_cast<float>(rng.uniform());
  return im;
}

Image smooth_image() {
  Image im(kPatchSize, kPatchSize);
  const double k = 2.0 * std::numbers::pi / 64.0;
  for (int r = 0; r < im.rows; ++r) {
    for (int c = 0; c < im.cols; ++c) {
      im.at(r, c) = static_cast<float>(0.5 + 0.25 * std::sin(k * r) * std::cos(k * c));
    }
  }
  return im;
}

// Kolmogorov-Smirnov distance between a sample and U(lo, hi).
double ks_uniform(std::vector<double> x, double lo, double hi) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = std::clamp((x[i] - lo) / (hi - lo), 0.0, 1.0);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

void expect_in_range(const Image& im) {
  ASSERT_EQ(im.rows, kPatchSize);
  ASSERT_EQ(im.cols, kPatchSize);
  for (float v : im.pixels) {
    ASSERT_GE(v, 0.0f);
    ASSERT_LE(v, 1.0f);
  }
}

TEST(HflipTest, Involution) {
  const Image x = random_image(1);
  EXPECT_EQ(hflip(hflip(x)), x);
  const Image y = hflip(x);
  for (int r = 0; r < kPatchSize; r += 17) EXPECT_EQ(y.at(r, 255), x.at(r, 0));
}

TEST(HflipTest, HandWorkedThreeByThree) {
  Image x(3, 3);
  x.pixels = {0.1f, 0.2f, 0.3f, 0.4f, 0.5f, 0.6f, 0.7f, 0.8f, 0.9f};
  EXPECT_EQ(hflip(x).pixels,
            (std::vector<float>{0.3f, 0.2f, 0.1f, 0.6f, 0.5f, 0.4f, 0.9f, 0.8f, 0.7f}));
}

TEST(ShiftTest, ZeroShiftIsIdentity) {
  const Image x = random_image(2);
  EXPECT_EQ(shift(x, 0.0, 0.0), x);
}

TEST(ShiftTest, FifthOfWidthMovesFiftyOnePixels) {
  const Image y = shift(Image(kPatchSize, kPatchSize, 1.0f), 0.2, 0.0);
  for (int r = 0; r < kPatchSize; ++r) {
    for (int c = 0; c < kPatchSize; ++c) ASSERT_EQ(y.at(r, c), c < 51 ? 0.0f : 1.0f);
  }
}

TEST(ShiftTest, OppositeShiftRestoresInterior) {
  const Image x = random_image(3);
  const Image y = shift(shift(x, 0.1, -0.05), -0.1, 0.05);
  for (int r = 13; r < kPatchSize - 13; ++r) {
    for (int c = 26; c < kPatchSize - 26; ++c) ASSERT_EQ(y.at(r, c), x.at(r, c));
  }
}

TEST(ShiftTest, RejectsOutOfRange) {
  const Image x = random_image(4);
  EXPECT_THROW(shift(x, 0.25, 0.0), InputError);
  EXPECT_THROW(shift(x, 0.0, -0.21), InputError);
}

TEST(RotateTest, ZeroAngleIsIdentity) {
  const Image x = random_image(5);
  EXPECT_EQ(rotate(x, 0.0), x);
}

TEST(RotateTest, ConstantInteriorIsUnchanged) {
  const Image y = rotate(Image(kPatchSize, kPatchSize, 0.6f), 10.0);
  for (int r = 40; r < kPatchSize - 40; ++r) {
    for (int c = 40; c < kPatchSize - 40; ++c) ASSERT_NEAR(y.at(r, c), 0.6f, 1e-6);
  }
}

TEST(RotateTest, ForwardAndBackRestoresSmoothInterior) {
  const Image x = smooth_image();
  const Image y = rotate(rotate(x, 10.0), -10.0);
  const double center = (kPatchSize - 1) / 2.0;
  for (int r = 0; r < kPatchSize; ++r) {
    for (int c = 0; c < kPatchSize; ++c) {
      if (std::hypot(r - center, c - center) > 90.0) continue;
      ASSERT_NEAR(y.at(r, c), x.at(r, c), 0.05) << r << "," << c;
    }
  }
}

TEST(RotateTest, RejectsOutOfRange) {
  EXPECT_THROW(rotate(random_image(6), 25.0), InputError);
}

TEST(PolicyTest, Validation) {
  EXPECT_NO_THROW(validate_policy({}));
  EXPECT_THROW(validate_policy({true, 1.5, 20.0, 0}), ConfigError);
  EXPECT_THROW(validate_policy({true, 0.2, 190.0, 0}), ConfigError);
  EXPECT_THROW(validate_policy({true, -0.1, 20.0, 0}), ConfigError);
}

TEST(PolicyTest, ZeroPolicyIsIdentity) {
  const AugmentPolicy none{false, 0.0, 0.0, 9};
  const Image x = random_image(7);
  for (std::uint64_t i = 0; i < 5; ++i) EXPECT_EQ(random_augment(x, none, i), x);
}

TEST(PolicyTest, DeterministicPerDraw) {
  const AugmentPolicy p{true, 0.2, 20.0, 13};
  const Image x = random_image(8);
  EXPECT_EQ(random_augment(x, p, 42), random_augment(x, p, 42));
  const AugmentDraw a = sample_augment(p, 42);
  const AugmentDraw b = sample_augment(p, 42);
  EXPECT_EQ(a.dx, b.dx);
  EXPECT_EQ(a.degrees, b.degrees);
  EXPECT_EQ(random_augment(x, p, 42), apply_augment(x, a, p));
}

TEST(PolicyTest, ThousandDrawsAreUniformAndBounded) {
  const AugmentPolicy p{true, 0.2, 20.0, 21};
  std::vector<double> dx, dy, deg;
  int flips = 0;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    const AugmentDraw d = sample_augment(p, i);
    ASSERT_LE(std::abs(d.dx), 0.2);
    ASSERT_LE(std::abs(d.dy), 0.2);
    ASSERT_LE(std::abs(d.degrees), 20.0);
    dx.push_back(d.dx);
    dy.push_back(d.dy);
    deg.push_back(d.degrees);
    flips += d.flip;
  }
  EXPECT_LT(ks_uniform(dx, -0.2, 0.2), 0.06);
  EXPECT_LT(ks_uniform(dy, -0.2, 0.2), 0.06);
  EXPECT_LT(ks_uniform(deg, -20.0, 20.0), 0.06);
  EXPECT_NEAR(flips / 1000.0, 0.5, 0.06);
}

TEST(PolicyTest, OutputsKeepShapeAndRange) {
  const AugmentPolicy p{true, 0.2, 20.0, 5};
  const Image x = random_image(9);
  for (std::uint64_t i = 0; i < 20; ++i) expect_in_range(random_augment(x, p, i));
}

TEST(PolicyTest, RecordLabelIsUnchanged) {
  PatchRecord r = make_record("m", LesionType::Mass, PathologyTag::Benign, 3, random_image(10));
  const PatchRecord a = random_augment(r, AugmentPolicy{}, 3);
  EXPECT_EQ(a.label, r.label);
  EXPECT_EQ(a.id, r.id);
  EXPECT_EQ(a.birads, r.birads);
  EXPECT_NE(a.image, r.image);
}

}  // namespace
