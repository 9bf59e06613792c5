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

// Minimal CSV support for the artifact formats used here: comma separated,
// no quoting, one header row. Fields that would need quoting are rejected on
// write so that everything written can be read back unchanged.

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace mammo::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;  // 1-based source line of each row

  // Index of a header column, or -1.
  int column(std::string_view name) const;
};

std::vector<std::string> split_line(std::string_view line);

// Throws InputError when the file cannot be opened or a row has the wrong
// field count.
Table read(const std::filesystem::path& path);

class Writer {
 public:
  Writer(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& fields);

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t width_;
};

// Shortest decimal that round-trips the value exactly.
std::string format_double(double v);

}  // namespace mammo::csv
