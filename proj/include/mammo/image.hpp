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

#include <cstddef>
#include <filesystem>
#include <vector>

namespace mammo {

// Canonical patch edge length. A 3x3 valid convolution on this input yields
// the 254x254 first feature map of the baseline network.
inline constexpr int kPatchSize = 256;

// Single-channel float image, row-major, values nominally in [0, 1].
struct Image {
  int rows = 0;
  int cols = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int rows_, int cols_, float fill = 0.0f)
      : rows(rows_), cols(cols_), pixels(static_cast<std::size_t>(rows_) * cols_, fill) {}

  bool empty() const { return pixels.empty(); }

  float& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * cols + c]; }
  float at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * cols + c]; }

  bool operator==(const Image&) const = default;
};

// Reads an 8- or 16-bit single-channel PNG and rescales it to [0, 1].
// Throws IngestionError for unreadable files or non-grayscale images.
Image read_png(const std::filesystem::path& path);

// Writes a 16-bit grayscale PNG; values are clipped to [0, 1] first.
void write_png(const Image& image, const std::filesystem::path& path);

}  // namespace mammo
