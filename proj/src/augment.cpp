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

#include "mammo/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mammo/error.hpp"
#include "mammo/rng.hpp"

namespace mammo {

void validate_policy(const AugmentPolicy& p) {
  if (!(p.shift_fraction_max >= 0.0 && p.shift_fraction_max <= 1.0)) {
    throw ConfigError("shift_fraction_max must lie in [0, 1]");
  }
  if (!(p.rotate_degrees_max >= 0.0 && p.rotate_degrees_max <= 180.0)) {
    throw ConfigError("rotate_degrees_max must lie in [0, 180]");
  }
}

Image hflip(const Image& image) {
  Image out(image.rows, image.cols);
  for (int r = 0; r < image.rows; ++r) {
    for (int c = 0; c < image.cols; ++c) out.at(r, image.cols - 1 - c) = image.at(r, c);
  }
  return out;
}

Image shift(const Image& image, double dx_fraction, double dy_fraction, double max_fraction) {
  if (!(std::abs(dx_fraction) <= max_fraction) || !(std::abs(dy_fraction) <= max_fraction)) {
    throw InputError("shift fraction outside +/-" + std::to_string(max_fraction));
  }
  const long dx = std::lround(dx_fraction * image.cols);
  const long dy = std::lround(dy_fraction * image.rows);
  Image out(image.rows, image.cols);
  for (int r = 0; r < image.rows; ++r) {
    const long src_r = r - dy;
    if (src_r < 0 || src_r >= image.rows) continue;
    for (int c = 0; c < image.cols; ++c) {
      const long src_c = c - dx;
      if (src_c < 0 || src_c >= image.cols) continue;
      out.at(r, c) = image.at(static_cast<int>(src_r), static_cast<int>(src_c));
    }
  }
  return out;
}

Image rotate(const Image& image, double degrees, double max_degrees) {
  if (!(std::abs(degrees) <= max_degrees)) {
    throw InputError("rotation angle outside +/-" + std::to_string(max_degrees) + " degrees");
  }
  if (degrees == 0.0) return image;

  const double theta = degrees * std::numbers::pi / 180.0;
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double cr = (image.rows - 1) / 2.0;
  const double cc = (image.cols - 1) / 2.0;
  auto sample = [&](long r, long c) -> double {
    if (r < 0 || r >= image.rows || c < 0 || c >= image.cols) return 0.0;
    return image.at(static_cast<int>(r), static_cast<int>(c));
  };

  Image out(image.rows, image.cols);
  for (int r = 0; r < image.rows; ++r) {
    for (int c = 0; c < image.cols; ++c) {
      // Inverse map with y pointing down: a counter-clockwise turn on screen
      // is a clockwise turn in (col, row) coordinates.
      const double x = c - cc;
      const double y = r - cr;
      const double src_c = cos_t * x - sin_t * y + cc;
      const double src_r = sin_t * x + cos_t * y + cr;
      const double fr = std::floor(src_r);
      const double fc = std::floor(src_c);
      const double ar = src_r - fr;
      const double ac = src_c - fc;
      const long r0 = static_cast<long>(fr);
      const long c0 = static_cast<long>(fc);
      const double v = (1 - ar) * ((1 - ac) * sample(r0, c0) + ac * sample(r0, c0 + 1)) +
                       ar * ((1 - ac) * sample(r0 + 1, c0) + ac * sample(r0 + 1, c0 + 1));
      out.at(r, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return out;
}

AugmentDraw sample_augment(const AugmentPolicy& policy, std::uint64_t draw_index) {
  validate_policy(policy);
  Rng rng(mix_seed(policy.seed, draw_index));
  // Every variate is drawn even when its operator is disabled so the
  // sequence consumed per draw is fixed.
  AugmentDraw d;
  const bool coin = rng.uniform() < 0.5;
  d.flip = policy.hflip_enabled && coin;
  d.dx = rng.uniform(-policy.shift_fraction_max, policy.shift_fraction_max);
  d.dy = rng.uniform(-policy.shift_fraction_max, policy.shift_fraction_max);
  d.degrees = rng.uniform(-policy.rotate_degrees_max, policy.rotate_degrees_max);
  return d;
}

Image apply_augment(const Image& image, const AugmentDraw& draw, const AugmentPolicy& policy) {
  Image out = draw.flip ? hflip(image) : image;
  if (draw.dx != 0.0 || draw.dy != 0.0) {
    out = shift(out, draw.dx, draw.dy, policy.shift_fraction_max);
  }
  if (draw.degrees != 0.0) out = rotate(out, draw.degrees, policy.rotate_degrees_max);
  return out;
}

Image random_augment(const Image& image, const AugmentPolicy& policy, std::uint64_t draw_index) {
  return apply_augment(image, sample_augment(policy, draw_index), policy);
}

PatchRecord random_augment(const PatchRecord& record, const AugmentPolicy& policy,
                           std::uint64_t draw_index) {
  PatchRecord out = record;
  out.image = random_augment(record.image, policy, draw_index);
  return out;
}

}  // namespace mammo
