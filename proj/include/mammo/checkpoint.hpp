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
#include <map>
#include <string>
#include <vector>

#include "mammo/modelkit.hpp"

namespace mammo {

struct WeightTensor {
  std::vector<int> shape;
  std::vector<float> values;

  bool operator==(const WeightTensor&) const = default;
};

// Parameter name ("<layer>/kernel", "<layer>/bias", "<block>/<layer>/kernel")
// to values.
using WeightMap = std::map<std::string, WeightTensor>;

struct Checkpoint {
  ModelSpec spec;
  WeightMap weights;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary layout, little-endian:
//   "MAMMOCKP" | u32 version | u64 spec hash | u64 n | n bytes spec JSON |
//   u64 tensor count | per tensor: u32 name length, name, u32 rank,
//   i32 dims[rank], u64 value count, f32 values.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);

// Throws InputError on a bad magic, unsupported version, truncated file or
// a spec hash that does not match the embedded spec.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mammo
