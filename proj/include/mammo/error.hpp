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

#include <stdexcept>
#include <string>

namespace mammo {

// Every failure raised by the library derives from Error. The CLI maps
// ConfigError to exit code 1 and everything else to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments handed to an operation (wrong shape, out-of-range value).
class InputError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration: ratios, unknown model names, malformed config files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Manifest or image ingestion failure. The message names the offending record.
class IngestionError : public Error {
 public:
  using Error::Error;
};

// A ModelSpec that cannot be realized (shape inference failed, bad head).
class SpecError : public Error {
 public:
  using Error::Error;
};

// Training could not proceed or diverged.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace mammo
