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

#include "mammo/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "mammo/error.hpp"

namespace mammo {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'M', 'A', 'M', 'M', 'O', 'C', 'K', 'P'};

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

class Reader {
 public:
  Reader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

  template <class T>
  T get() {
    T v{};
    bytes(&v, sizeof v);
    return v;
  }

  void bytes(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw InputError("checkpoint '" + what_ + "' is truncated");
    }
  }

  std::string string(std::size_t n) {
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }

 private:
  std::istream& in_;
  std::string what_;
};

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint '" + path.string() + "'");
  const std::string spec = to_json(ckpt.spec).dump();
  out.write(kMagic, sizeof kMagic);
  put(out, kCheckpointVersion);
  put(out, spec_hash(ckpt.spec));
  put(out, static_cast<std::uint64_t>(spec.size()));
  out.write(spec.data(), static_cast<std::streamsize>(spec.size()));
  put(out, static_cast<std::uint64_t>(ckpt.weights.size()));
  for (const auto& [name, t] : ckpt.weights) {
    put(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put(out, static_cast<std::uint32_t>(t.shape.size()));
    for (int d : t.shape) put(out, static_cast<std::int32_t>(d));
    put(out, static_cast<std::uint64_t>(t.values.size()));
    out.write(reinterpret_cast<const char*>(t.values.data()),
              static_cast<std::streamsize>(t.values.size() * sizeof(float)));
  }
  if (!out) throw Error("write failed for checkpoint '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint '" + path.string() + "'");
  Reader r(in, path.string());
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw InputError("'" + path.string() + "' is not a checkpoint file");
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw InputError("checkpoint '" + path.string() + "' has unsupported version " +
                     std::to_string(version));
  }
  const auto hash = r.get<std::uint64_t>();
  const auto spec_len = r.get<std::uint64_t>();
  Checkpoint ckpt;
  try {
    ckpt.spec = spec_from_json(nlohmann::json::parse(r.string(spec_len)));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("checkpoint '" + path.string() + "' has a corrupt spec: " + e.what());
  }
  if (spec_hash(ckpt.spec) != hash) {
    throw InputError("checkpoint '" + path.string() + "' spec hash mismatch");
  }
  const auto count = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = r.string(r.get<std::uint32_t>());
    WeightTensor t;
    t.shape.resize(r.get<std::uint32_t>());
    std::uint64_t expected = 1;
    for (auto& d : t.shape) {
      d = r.get<std::int32_t>();
      if (d < 0) throw InputError("checkpoint '" + path.string() + "' has a negative dimension");
      expected *= static_cast<std::uint64_t>(d);
    }
    const auto n = r.get<std::uint64_t>();
    if (n != expected) {
      throw InputError("checkpoint '" + path.string() + "': tensor '" + name +
                       "' size does not match its shape");
    }
    t.values.resize(n);
    r.bytes(t.values.data(), t.values.size() * sizeof(float));
    ckpt.weights.emplace(name, std::move(t));
  }
  return ckpt;
}

}  // namespace mammo
