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

#include "mammo/synthgen.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "mammo/error.hpp"
#include "mammo/rng.hpp"

namespace mammo {

ClassRecipe default_mass_recipe() {
  return {LesionType::Mass, {1, 2}, {16.0, 32.0}, {0.5, 0.8}, 0.10, 0.04};
}

ClassRecipe default_calcification_recipe() {
  return {LesionType::Calcification, {20, 40}, {2.0, 4.0}, {0.7, 1.0}, 0.10, 0.04};
}

ClassRecipe default_normal_recipe() {
  return {LesionType::Normal, {0, 0}, {1.0, 1.0}, {0.0, 0.0}, 0.10, 0.04};
}

ClassRecipe default_recipe(LesionType t) {
  switch (t) {
    case LesionType::Mass: return default_mass_recipe();
    case LesionType::Calcification: return default_calcification_recipe();
    case LesionType::Normal: return default_normal_recipe();
  }
  throw InputError("unrecognized lesion type");
}

void validate_recipe(const ClassRecipe& r) {
  auto ordered = [](const Range& x) { return x.lo <= x.hi; };
  if (!ordered(r.blob_count) || !ordered(r.blob_radius) || !ordered(r.blob_intensity)) {
    throw InputError("recipe ranges must satisfy lo <= hi");
  }
  if (r.blob_count.lo < 0) throw InputError("recipe blob count must be non-negative");
  if (r.blob_radius.lo <= 0) throw InputError("recipe blob radius must be positive");
  if (r.background_noise_scale < 0) throw InputError("recipe noise scale must be non-negative");
  if (r.lesion_type == LesionType::Normal && r.blob_count.hi > 0) {
    throw InputError("normal recipes cannot contain blobs");
  }
  if (r.lesion_type != LesionType::Normal && r.blob_count.lo < 1) {
    throw InputError("lesion recipes need at least one blob");
  }
}

namespace {

// Value noise: random lattice values blended with a smoothstep kernel.
void add_value_noise(Image& img, Rng& rng, int spacing, double amplitude) {
  const int cells = img.rows / spacing + 2;
  std::vector<double> lattice(static_cast<std::size_t>(cells) * cells);
  for (auto& v : lattice) v = rng.uniform(-1.0, 1.0);
  auto node = [&](int r, int c) { return lattice[static_cast<std::size_t>(r) * cells + c]; };
  auto smooth = [](double t) { return t * t * (3.0 - 2.0 * t); };
  for (int r = 0; r < img.rows; ++r) {
    const int gr = r / spacing;
    const double tr = smooth(static_cast<double>(r % spacing) / spacing);
    for (int c = 0; c < img.cols; ++c) {
      const int gc = c / spacing;
      const double tc = smooth(static_cast<double>(c % spacing) / spacing);
      const double top = node(gr, gc) * (1 - tc) + node(gr, gc + 1) * tc;
      const double bottom = node(gr + 1, gc) * (1 - tc) + node(gr + 1, gc + 1) * tc;
      img.at(r, c) += static_cast<float>(amplitude * (top * (1 - tr) + bottom * tr));
    }
  }
}

void add_blob(Image& img, const Blob& b) {
  const double reach = 4.0 * b.radius;
  const int r0 = std::max(0, static_cast<int>(std::floor(b.row - reach)));
  const int r1 = std::min(img.rows - 1, static_cast<int>(std::ceil(b.row + reach)));
  const int c0 = std::max(0, static_cast<int>(std::floor(b.col - reach)));
  const int c1 = std::min(img.cols - 1, static_cast<int>(std::ceil(b.col + reach)));
  const double inv = 1.0 / (2.0 * b.radius * b.radius);
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      const double d2 = (r - b.row) * (r - b.row) + (c - b.col) * (c - b.col);
      img.at(r, c) += static_cast<float>(b.intensity * std::exp(-d2 * inv));
    }
  }
}

// Pathology mix per lesion type, proportional to the DDSM patch counts
// (malignant, benign, benign without callback, unproven).
PathologyTag draw_pathology(LesionType t, Rng& rng) {
  if (t == LesionType::Normal) return PathologyTag::None;
  const std::array<double, 4> weights = t == LesionType::Mass
                                            ? std::array<double, 4>{1075, 1079, 179, 21}
                                            : std::array<double, 4>{797, 800, 539, 16};
  constexpr std::array<PathologyTag, 4> tags = {PathologyTag::Malignant, PathologyTag::Benign,
                                                PathologyTag::BenignWithoutCallback,
                                                PathologyTag::Unproven};
  double total = 0;
  for (double w : weights) total += w;
  double u = rng.uniform(0.0, total);
  for (int i = 0; i < 4; ++i) {
    if (u < weights[i]) return tags[i];
    u -= weights[i];
  }
  return tags.back();
}

}  // namespace

SynthPatch render_patch(const ClassRecipe& recipe, std::uint64_t seed) {
  validate_recipe(recipe);
  Rng rng(seed);
  SynthPatch out;
  out.image = Image(kPatchSize, kPatchSize, static_cast<float>(recipe.background_level));
  add_value_noise(out.image, rng, 32, recipe.background_noise_scale);
  add_value_noise(out.image, rng, 8, 0.5 * recipe.background_noise_scale);
  const double grain = 0.25 * recipe.background_noise_scale;
  for (auto& p : out.image.pixels) p += static_cast<float>(rng.uniform(-grain, grain));

  const int count = rng.between(static_cast<int>(recipe.blob_count.lo),
                                static_cast<int>(recipe.blob_count.hi));
  for (int i = 0; i < count; ++i) {
    Blob b;
    b.radius = rng.uniform(recipe.blob_radius.lo, recipe.blob_radius.hi);
    const double margin = std::min(2.0 * b.radius, 0.25 * kPatchSize);
    b.row = rng.uniform(margin, kPatchSize - 1 - margin);
    b.col = rng.uniform(margin, kPatchSize - 1 - margin);
    b.intensity = rng.uniform(recipe.blob_intensity.lo, recipe.blob_intensity.hi);
    add_blob(out.image, b);
    out.blobs.push_back(b);
  }
  for (auto& p : out.image.pixels) p = std::clamp(p, 0.0f, 1.0f);
  return out;
}

PatchRecord generate_patch(const ClassRecipe& recipe, std::uint64_t seed) {
  auto patch = render_patch(recipe, seed);
  Rng meta(mix_seed(seed, 1));
  const PathologyTag tag = draw_pathology(recipe.lesion_type, meta);
  return make_record("synthetic_" + std::to_string(seed), recipe.lesion_type, tag,
                     std::nullopt, std::move(patch.image));
}

std::vector<PlannedPatch> plan_dataset(const ClassCounts& counts, std::uint64_t seed) {
  if (counts.mass < 0 || counts.calcification < 0 || counts.normal < 0) {
    throw InputError("class counts must be non-negative");
  }
  std::vector<PlannedPatch> plan;
  plan.reserve(static_cast<std::size_t>(counts.total()));
  std::uint64_t index = 0;
  const std::array<std::pair<LesionType, std::int64_t>, 3> groups = {
      std::pair{LesionType::Mass, counts.mass},
      std::pair{LesionType::Calcification, counts.calcification},
      std::pair{LesionType::Normal, counts.normal}};
  for (const auto& [type, n] : groups) {
    for (std::int64_t i = 0; i < n; ++i, ++index) {
      Rng meta(mix_seed(seed, 2 * index + 1));
      PlannedPatch p;
      char id[64];
      std::snprintf(id, sizeof id, "%s_%06lld", std::string(to_string(type)).c_str(),
                    static_cast<long long>(i));
      p.id = id;
      p.lesion_type = type;
      p.pathology_tag = draw_pathology(type, meta);
      if (type != LesionType::Normal) p.birads = meta.between(1, 5);
      p.seed = mix_seed(seed, 2 * index);
      plan.push_back(std::move(p));
    }
  }
  return plan;
}

PatchRecord to_record(const PlannedPatch& plan) {
  return make_record(plan.id, plan.lesion_type, plan.pathology_tag, plan.birads);
}

std::vector<PatchRecord> generate_dataset(const ClassCounts& counts, std::uint64_t seed) {
  std::vector<PatchRecord> records;
  for (const auto& p : plan_dataset(counts, seed)) {
    PatchRecord r = to_record(p);
    r.image = render_patch(default_recipe(p.lesion_type), p.seed).image;
    records.push_back(std::move(r));
  }
  return records;
}

std::filesystem::path write_dataset(const ClassCounts& counts, std::uint64_t seed,
                                    const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  std::vector<PatchRecord> records;
  for (const auto& p : plan_dataset(counts, seed)) {
    PatchRecord r = to_record(p);
    r.image_path = std::filesystem::path("images") / (p.id + ".png");
    write_png(render_patch(default_recipe(p.lesion_type), p.seed).image, dir / r.image_path);
    records.push_back(std::move(r));
  }
  const auto manifest = dir / "manifest.csv";
  save_manifest(records, manifest);
  return manifest;
}

}  // namespace mammo
