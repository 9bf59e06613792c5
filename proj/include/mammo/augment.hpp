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

#include "mammo/image.hpp"
#include "mammo/patchset.hpp"

namespace mammo {

struct AugmentPolicy {
  bool hflip_enabled = true;
  double shift_fraction_max = 0.2;  // per axis, fraction of the image dimension
  double rotate_degrees_max = 20.0;
  std::uint64_t seed = 0;
};

// Throws ConfigError unless 0 <= shift <= 1 and 0 <= rotation <= 180.
void validate_policy(const AugmentPolicy& policy);

// Mirrors columns: column j moves to column (cols - 1 - j).
Image hflip(const Image& image);

// Translates content right by round(dx * cols) and down by round(dy * rows)
// pixels; vacated pixels become 0. Throws InputError when |dx| or |dy|
// exceeds max_fraction.
Image shift(const Image& image, double dx_fraction, double dy_fraction,
            double max_fraction = 0.2);

// Rotates counter-clockwise (as displayed) about the image center with
// bilinear sampling. Samples outside the source read as 0 and the result is
// clipped to [0, 1]. Throws InputError when |degrees| exceeds max_degrees.
Image rotate(const Image& image, double degrees, double max_degrees = 20.0);

// One realization of the random policy.
struct AugmentDraw {
  bool flip = false;
  double dx = 0.0;
  double dy = 0.0;
  double degrees = 0.0;
};

// Pure function of (policy.seed, draw_index).
AugmentDraw sample_augment(const AugmentPolicy& policy, std::uint64_t draw_index);

// Applies flip, then shift, then rotation.
Image apply_augment(const Image& image, const AugmentDraw& draw, const AugmentPolicy& policy);

Image random_augment(const Image& image, const AugmentPolicy& policy, std::uint64_t draw_index);

// Same as random_augment on the record's image; metadata and label unchanged.
PatchRecord random_augment(const PatchRecord& record, const AugmentPolicy& policy,
                           std::uint64_t draw_index);

}  // namespace mammo
