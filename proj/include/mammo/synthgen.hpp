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
#include <filesystem>
#include <vector>

#include "mammo/patchset.hpp"

namespace mammo {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// Procedural recipe for one lesion class. Lesions are isotropic Gaussian
// bumps added on top of a low-frequency value-noise background.
struct ClassRecipe {
  LesionType lesion_type = LesionType::Normal;
  Range blob_count;      // integer bounds, inclusive
  Range blob_radius;     // Gaussian sigma in pixels
  Range blob_intensity;  // peak amplitude added to the background
  double background_level = 0.10;
  double background_noise_scale = 0.04;
};

// Few large soft bumps.
ClassRecipe default_mass_recipe();
// Many small bright speckles.
ClassRecipe default_calcification_recipe();
// Background texture only.
ClassRecipe default_normal_recipe();
ClassRecipe default_recipe(LesionType t);

// Throws InputError for negative/inverted ranges, non-positive radii, or a
// normal recipe with blobs.
void validate_recipe(const ClassRecipe& recipe);

struct Blob {
  double row = 0.0;
  double col = 0.0;
  double radius = 0.0;
  double intensity = 0.0;
};

struct SynthPatch {
  Image image;
  std::vector<Blob> blobs;
};

// Deterministic per (recipe, seed).
SynthPatch render_patch(const ClassRecipe& recipe, std::uint64_t seed);

PatchRecord generate_patch(const ClassRecipe& recipe, std::uint64_t seed);

struct ClassCounts {
  std::int64_t mass = 0;
  std::int64_t calcification = 0;
  std::int64_t normal = 0;

  std::int64_t total() const { return mass + calcification + normal; }
};

// Patch counts of the DDSM patch corpus: 2,354 mass, 2,152 calcification
// and 6,207 normal patches (10,713 total).
inline constexpr ClassCounts kDdsmCounts{2354, 2152, 6207};

struct PlannedPatch {
  std::string id;
  LesionType lesion_type = LesionType::Normal;
  PathologyTag pathology_tag = PathologyTag::None;
  std::optional<int> birads;
  std::uint64_t seed = 0;
};

// Metadata for every patch generate_dataset would render, without pixels.
std::vector<PlannedPatch> plan_dataset(const ClassCounts& counts, std::uint64_t seed);

// Metadata-only record for a planned patch (empty image).
PatchRecord to_record(const PlannedPatch& plan);

std::vector<PatchRecord> generate_dataset(const ClassCounts& counts, std::uint64_t seed);

// Renders the dataset one patch at a time into `dir/images/<id>.png` and
// writes `dir/manifest.csv`. Memory use stays at one patch.
std::filesystem::path write_dataset(const ClassCounts& counts, std::uint64_t seed,
                                    const std::filesystem::path& dir);

}  // namespace mammo
