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

#include "mammo/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "mammo/error.hpp"

namespace mammo {

Image read_png(const std::filesystem::path& path) {
  const cv::Mat mat = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (mat.empty()) {
    throw IngestionError("cannot read image file '" + path.string() + "'");
  }
  if (mat.channels() != 1) {
    throw IngestionError("image '" + path.string() + "' has " +
                         std::to_string(mat.channels()) + " channels, expected grayscale");
  }
  Image image(mat.rows, mat.cols);
  if (mat.depth() == CV_8U) {
    for (int r = 0; r < mat.rows; ++r) {
      const auto* row = mat.ptr<std::uint8_t>(r);
      for (int c = 0; c < mat.cols; ++c) image.at(r, c) = row[c] / 255.0f;
    }
  } else if (mat.depth() == CV_16U) {
    for (int r = 0; r < mat.rows; ++r) {
      const auto* row = mat.ptr<std::uint16_t>(r);
      for (int c = 0; c < mat.cols; ++c) image.at(r, c) = row[c] / 65535.0f;
    }
  } else {
    throw IngestionError("image '" + path.string() + "' is neither 8- nor 16-bit");
  }
  return image;
}

void write_png(const Image& image, const std::filesystem::path& path) {
  cv::Mat mat(image.rows, image.cols, CV_16UC1);
  for (int r = 0; r < image.rows; ++r) {
    auto* row = mat.ptr<std::uint16_t>(r);
    for (int c = 0; c < image.cols; ++c) {
      const float v = std::clamp(image.at(r, c), 0.0f, 1.0f);
      row[c] = static_cast<std::uint16_t>(std::lround(v * 65535.0f));
    }
  }
  if (!cv::imwrite(path.string(), mat)) {
    throw Error("cannot write image file '" + path.string() + "'");
  }
}

}  // namespace mammo
