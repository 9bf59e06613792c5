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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mammo/image.hpp"

namespace mammo {

enum class LesionType { Mass, Calcification, Normal };
enum class PathologyTag { Malignant, Benign, BenignWithoutCallback, Unproven, None };
enum class Label { Pathological, NonPathological };
enum class Split { Train, Validation, Test };

inline constexpr std::array kLesionTypes = {LesionType::Mass, LesionType::Calcification,
                                            LesionType::Normal};
inline constexpr std::array kPathologyTags = {PathologyTag::Malignant, PathologyTag::Benign,
                                              PathologyTag::BenignWithoutCallback,
                                              PathologyTag::Unproven, PathologyTag::None};

std::string_view to_string(LesionType t);
std::string_view to_string(PathologyTag t);
std::string_view to_string(Label l);
std::string_view to_string(Split s);

// Parsers throw InputError on anything outside the canonical spellings.
LesionType parse_lesion_type(std::string_view s);
PathologyTag parse_pathology_tag(std::string_view s);
Split parse_split(std::string_view s);

// Lesion presence defines the positive class; the pathology tag (benign,
// malignant, unproven) plays no part.
Label binarize_label(LesionType lesion_type);

// One grayscale patch plus its lesion metadata. `image` may be empty for
// metadata-only records (e.g. a manifest loaded without pixels).
struct PatchRecord {
  std::string id;
  std::filesystem::path image_path;
  Image image;
  LesionType lesion_type = LesionType::Normal;
  PathologyTag pathology_tag = PathologyTag::None;
  std::optional<int> birads;
  Label label = Label::NonPathological;
};

// Builds a record after checking the lesion/pathology/label invariants.
PatchRecord make_record(std::string id, LesionType lesion_type, PathologyTag pathology_tag,
                        std::optional<int> birads = std::nullopt, Image image = {});

// Throws InputError when the record breaks the lesion/pathology/label
// coupling, carries an out-of-range BI-RADS score, or holds a non-256x256
// image.
void validate_record(const PatchRecord& record);

struct SummaryStats {
  // counts[lesion][pathology], indexed by enum order.
  std::array<std::array<std::int64_t, kPathologyTags.size()>, kLesionTypes.size()> counts{};
  std::int64_t total_pathological = 0;
  std::int64_t total_non_pathological = 0;
  std::int64_t total = 0;

  std::int64_t count(LesionType t, PathologyTag p) const {
    return counts[static_cast<int>(t)][static_cast<int>(p)];
  }
  std::int64_t lesion_total(LesionType t) const;

  SummaryStats& operator+=(const SummaryStats& other);
  bool operator==(const SummaryStats&) const = default;
};

SummaryStats summarize(std::span<const PatchRecord> records);

struct SplitRatios {
  double train = 0.75;
  double validation = 0.10;
  double test = 0.15;
};

struct SplitAssignment {
  std::map<std::string, Split> assignment;
  SplitRatios ratios;
  std::uint64_t seed = 0;

  Split at(const std::string& id) const;
  std::size_t size_of(Split s) const;
  // FNV-1a over the sorted "id,split" lines; equal hashes mean equal splits.
  std::uint64_t hash() const;

  bool operator==(const SplitAssignment& other) const { return assignment == other.assignment; }
};

// Per-class shuffled bucketing: each class is shuffled with the seed and
// dealt into the three splits by largest-remainder quotas, so split sizes
// land within one record of ratio * total and every split mirrors the
// global class balance as closely as integer counts allow.
SplitAssignment stratified_split(std::span<const PatchRecord> records, const SplitRatios& ratios,
                                 std::uint64_t seed);

struct SplitData {
  std::vector<PatchRecord> train;
  std::vector<PatchRecord> validation;
  std::vector<PatchRecord> test;
};

// Moves records into their assigned splits, preserving input order within each.
SplitData partition(std::vector<PatchRecord> records, const SplitAssignment& assignment);

struct ManifestOptions {
  bool load_pixels = true;
  // Decode every referenced image to check readability and dimensions even
  // when pixels are not retained.
  bool verify_images = true;
};

// Reads `id,image_path,lesion_type,pathology_tag,birads`. Relative image
// paths resolve against the manifest's directory. Errors name the record.
std::vector<PatchRecord> load_manifest(const std::filesystem::path& path,
                                       const ManifestOptions& options = {});
void save_manifest(std::span<const PatchRecord> records, const std::filesystem::path& path);

void save_split(const SplitAssignment& split, const std::filesystem::path& path);
SplitAssignment load_split(const std::filesystem::path& path);

}  // namespace mammo
