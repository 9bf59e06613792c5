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

#include "mammo/patchset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include "csv.hpp"
#include "mammo/error.hpp"
#include "mammo/rng.hpp"

namespace mammo {

std::string_view to_string(LesionType t) {
  switch (t) {
    case LesionType::Mass: return "mass";
    case LesionType::Calcification: return "calcification";
    case LesionType::Normal: return "normal";
  }
  throw InputError("unrecognized lesion type value " + std::to_string(static_cast<int>(t)));
}

std::string_view to_string(PathologyTag t) {
  switch (t) {
    case PathologyTag::Malignant: return "malignant";
    case PathologyTag::Benign: return "benign";
    case PathologyTag::BenignWithoutCallback: return "benign_without_callback";
    case PathologyTag::Unproven: return "unproven";
    case PathologyTag::None: return "none";
  }
  throw InputError("unrecognized pathology tag value " + std::to_string(static_cast<int>(t)));
}

std::string_view to_string(Label l) {
  return l == Label::Pathological ? "pathological" : "non_pathological";
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
  }
  throw InputError("unrecognized split value");
}

LesionType parse_lesion_type(std::string_view s) {
  for (auto t : kLesionTypes) {
    if (to_string(t) == s) return t;
  }
  throw InputError("unrecognized lesion type '" + std::string(s) +
                   "' (expected mass, calcification or normal)");
}

PathologyTag parse_pathology_tag(std::string_view s) {
  for (auto t : kPathologyTags) {
    if (to_string(t) == s) return t;
  }
  throw InputError("unrecognized pathology tag '" + std::string(s) + "'");
}

Split parse_split(std::string_view s) {
  for (auto v : {Split::Train, Split::Validation, Split::Test}) {
    if (to_string(v) == s) return v;
  }
  throw InputError("unrecognized split '" + std::string(s) + "'");
}

Label binarize_label(LesionType lesion_type) {
  switch (lesion_type) {
    case LesionType::Mass:
    case LesionType::Calcification:
      return Label::Pathological;
    case LesionType::Normal:
      return Label::NonPathological;
  }
  throw InputError("unrecognized lesion type value " +
                   std::to_string(static_cast<int>(lesion_type)));
}

void validate_record(const PatchRecord& r) {
  const std::string who = "record '" + r.id + "': ";
  if (r.id.empty()) throw InputError("record with empty id");
  const bool normal = r.lesion_type == LesionType::Normal;
  if (normal != (r.pathology_tag == PathologyTag::None)) {
    throw InputError(who + "lesion type '" + std::string(to_string(r.lesion_type)) +
                     "' is inconsistent with pathology tag '" +
                     std::string(to_string(r.pathology_tag)) + "'");
  }
  if (r.label != binarize_label(r.lesion_type)) {
    throw InputError(who + "label does not match lesion type");
  }
  if (r.birads && (*r.birads < 1 || *r.birads > 5)) {
    throw InputError(who + "BI-RADS score " + std::to_string(*r.birads) + " outside 1-5");
  }
  if (!r.image.empty() && (r.image.rows != kPatchSize || r.image.cols != kPatchSize)) {
    throw InputError(who + "image is " + std::to_string(r.image.rows) + "x" +
                     std::to_string(r.image.cols) + ", expected 256x256");
  }
}

PatchRecord make_record(std::string id, LesionType lesion_type, PathologyTag pathology_tag,
                        std::optional<int> birads, Image image) {
  PatchRecord r;
  r.id = std::move(id);
  r.lesion_type = lesion_type;
  r.pathology_tag = pathology_tag;
  r.birads = birads;
  r.label = binarize_label(lesion_type);
  r.image = std::move(image);
  validate_record(r);
  return r;
}

std::int64_t SummaryStats::lesion_total(LesionType t) const {
  const auto& row = counts[static_cast<int>(t)];
  return std::accumulate(row.begin(), row.end(), std::int64_t{0});
}

SummaryStats& SummaryStats::operator+=(const SummaryStats& other) {
  for (std::size_t i = 0; i < counts.size(); ++i) {
    for (std::size_t j = 0; j < counts[i].size(); ++j) counts[i][j] += other.counts[i][j];
  }
  total_pathological += other.total_pathological;
  total_non_pathological += other.total_non_pathological;
  total += other.total;
  return *this;
}

SummaryStats summarize(std::span<const PatchRecord> records) {
  SummaryStats s;
  for (const auto& r : records) {
    ++s.counts[static_cast<int>(r.lesion_type)][static_cast<int>(r.pathology_tag)];
    if (binarize_label(r.lesion_type) == Label::Pathological) {
      ++s.total_pathological;
    } else {
      ++s.total_non_pathological;
    }
    ++s.total;
  }
  return s;
}

Split SplitAssignment::at(const std::string& id) const {
  const auto it = assignment.find(id);
  if (it == assignment.end()) throw InputError("record '" + id + "' has no split assignment");
  return it->second;
}

std::size_t SplitAssignment::size_of(Split s) const {
  return static_cast<std::size_t>(std::count_if(
      assignment.begin(), assignment.end(), [s](const auto& kv) { return kv.second == s; }));
}

std::uint64_t SplitAssignment::hash() const {
  std::uint64_t h = fnv1a(nullptr, 0);
  for (const auto& [id, split] : assignment) {
    std::string line = id + "," + std::string(to_string(split)) + "\n";
    h = fnv1a(line.data(), line.size(), h);
  }
  return h;
}

namespace {

// Splits `total` into integer parts proportional to `weights` (which sum to
// `weight_sum`) using the largest-remainder method. Remainders are compared
// exactly as integer numerators; ties go to the lower index.
std::array<std::int64_t, 3> largest_remainder(std::int64_t total,
                                              const std::array<std::int64_t, 3>& weights,
                                              std::int64_t weight_sum) {
  std::array<std::int64_t, 3> parts{};
  std::array<std::int64_t, 3> rem{};
  std::int64_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    parts[i] = weights[i] * total / weight_sum;
    rem[i] = weights[i] * total % weight_sum;
    assigned += parts[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return rem[a] > rem[b]; });
  for (int k = 0; assigned < total; k = (k + 1) % 3) {
    if (weights[order[k]] == 0) continue;
    ++parts[order[k]];
    ++assigned;
  }
  return parts;
}

std::array<std::int64_t, 3> split_sizes(std::int64_t n, const SplitRatios& ratios) {
  const std::array<double, 3> r{ratios.train, ratios.validation, ratios.test};
  std::array<std::int64_t, 3> parts{};
  std::array<double, 3> frac{};
  std::int64_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = r[i] * static_cast<double>(n);
    parts[i] = static_cast<std::int64_t>(std::floor(exact));
    frac[i] = exact - static_cast<double>(parts[i]);
    assigned += parts[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b]; });
  for (int k = 0; assigned < n; k = (k + 1) % 3) {
    if (r[order[k]] <= 0.0) continue;
    ++parts[order[k]];
    ++assigned;
  }
  // Floating error can push a part one above the total; hand it back.
  for (int i = 2; assigned > n && i >= 0; --i) {
    if (parts[i] > 0) {
      --parts[i];
      --assigned;
    }
  }
  return parts;
}

}  // namespace

SplitAssignment stratified_split(std::span<const PatchRecord> records, const SplitRatios& ratios,
                                 std::uint64_t seed) {
  const std::array<double, 3> r{ratios.train, ratios.validation, ratios.test};
  for (double v : r) {
    if (!(v >= 0.0) || v > 1.0) throw ConfigError("split ratios must lie in [0, 1]");
  }
  if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }
  if (records.empty()) throw InputError("cannot split an empty record list");
  const auto active = std::count_if(r.begin(), r.end(), [](double v) { return v > 0.0; });
  if (static_cast<std::int64_t>(records.size()) < active) {
    throw InputError("cannot split " + std::to_string(records.size()) + " records into " +
                     std::to_string(active) + " non-empty splits");
  }

  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  std::set<std::string_view> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!seen.insert(records[i].id).second) {
      throw InputError("duplicate record id '" + records[i].id + "'");
    }
    (records[i].label == Label::Pathological ? positives : negatives).push_back(i);
  }

  const auto n = static_cast<std::int64_t>(records.size());
  const auto sizes = split_sizes(n, ratios);
  const auto pos_quota =
      largest_remainder(static_cast<std::int64_t>(positives.size()), sizes, n);

  SplitAssignment out;
  out.ratios = ratios;
  out.seed = seed;
  const std::array<Split, 3> names{Split::Train, Split::Validation, Split::Test};
  auto deal = [&](std::vector<std::size_t>& members, const std::array<std::int64_t, 3>& quota,
                  std::uint64_t stream) {
    Rng rng(mix_seed(seed, stream));
    rng.shuffle(members);
    std::size_t next = 0;
    for (int s = 0; s < 3; ++s) {
      for (std::int64_t k = 0; k < quota[s]; ++k) {
        out.assignment.emplace(records[members[next++]].id, names[s]);
      }
    }
  };
  std::array<std::int64_t, 3> neg_quota{};
  for (int s = 0; s < 3; ++s) neg_quota[s] = sizes[s] - pos_quota[s];
  deal(positives, pos_quota, 0);
  deal(negatives, neg_quota, 1);
  return out;
}

SplitData partition(std::vector<PatchRecord> records, const SplitAssignment& assignment) {
  SplitData data;
  for (auto& r : records) {
    switch (assignment.at(r.id)) {
      case Split::Train: data.train.push_back(std::move(r)); break;
      case Split::Validation: data.validation.push_back(std::move(r)); break;
      case Split::Test: data.test.push_back(std::move(r)); break;
    }
  }
  return data;
}

namespace {

constexpr std::array<std::string_view, 5> kManifestColumns = {"id", "image_path", "lesion_type",
                                                              "pathology_tag", "birads"};

std::optional<int> parse_birads(const std::string& s) {
  if (s.empty()) return std::nullopt;
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw InputError("BI-RADS value '" + s + "' is not an integer");
  }
  return v;
}

}  // namespace

std::vector<PatchRecord> load_manifest(const std::filesystem::path& path,
                                       const ManifestOptions& options) {
  csv::Table table;
  try {
    table = csv::read(path);
  } catch (const InputError& e) {
    throw IngestionError(e.what());
  }
  std::array<int, kManifestColumns.size()> col{};
  for (std::size_t i = 0; i < kManifestColumns.size(); ++i) {
    col[i] = table.column(kManifestColumns[i]);
    if (col[i] < 0) {
      throw IngestionError("manifest '" + path.string() + "' is missing column '" +
                           std::string(kManifestColumns[i]) + "'");
    }
  }

  const auto base = path.parent_path();
  std::unordered_map<std::string, bool> verified;
  std::set<std::string> ids;
  std::vector<PatchRecord> records;
  records.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string& id = row[col[0]];
    const std::string where = "manifest '" + path.string() + "' line " +
                              std::to_string(table.line_numbers[i]) + ", record '" + id + "': ";
    try {
      if (!ids.insert(id).second) throw InputError("duplicate record id");
      PatchRecord r = make_record(id, parse_lesion_type(row[col[2]]),
                                  parse_pathology_tag(row[col[3]]), parse_birads(row[col[4]]));
      r.image_path = row[col[1]];
      if (options.load_pixels || options.verify_images) {
        const auto resolved = r.image_path.is_absolute() ? r.image_path : base / r.image_path;
        if (options.load_pixels || !verified.contains(resolved.string())) {
          Image image = read_png(resolved);
          if (image.rows != kPatchSize || image.cols != kPatchSize) {
            throw InputError("image is " + std::to_string(image.rows) + "x" +
                             std::to_string(image.cols) + ", expected 256x256");
          }
          verified[resolved.string()] = true;
          if (options.load_pixels) r.image = std::move(image);
        }
      }
      records.push_back(std::move(r));
    } catch (const Error& e) {
      throw IngestionError(where + e.what());
    }
  }
  return records;
}

void save_manifest(std::span<const PatchRecord> records, const std::filesystem::path& path) {
  csv::Writer out(path, {kManifestColumns.begin(), kManifestColumns.end()});
  for (const auto& r : records) {
    validate_record(r);
    out.row({r.id, r.image_path.generic_string(), std::string(to_string(r.lesion_type)),
             std::string(to_string(r.pathology_tag)),
             r.birads ? std::to_string(*r.birads) : std::string()});
  }
}

void save_split(const SplitAssignment& split, const std::filesystem::path& path) {
  csv::Writer out(path, {"id", "split"});
  for (const auto& [id, s] : split.assignment) out.row({id, std::string(to_string(s))});
}

SplitAssignment load_split(const std::filesystem::path& path) {
  const auto table = csv::read(path);
  const int id_col = table.column("id");
  const int split_col = table.column("split");
  if (id_col < 0 || split_col < 0) {
    throw InputError("split file '" + path.string() + "' needs columns id,split");
  }
  SplitAssignment out;
  for (const auto& row : table.rows) {
    if (!out.assignment.emplace(row[id_col], parse_split(row[split_col])).second) {
      throw InputError("split file '" + path.string() + "' assigns '" + row[id_col] + "' twice");
    }
  }
  const double n = static_cast<double>(out.assignment.size());
  if (n > 0) {
    out.ratios = {out.size_of(Split::Train) / n, out.size_of(Split::Validation) / n,
                  out.size_of(Split::Test) / n};
  }
  return out;
}

}  // namespace mammo
