// Copyright 2026 The amdtraj Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "amdtraj/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "amdtraj/error.hpp"

namespace amd::nd {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint i/o assumes a little-endian host");

constexpr char kMagic[4] = {'A', 'M', 'D', 'C'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
bool read_pod(std::istream& is, T& v) {
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return static_cast<bool>(is);
}

}  // namespace

void save_checkpoint(const ParamStore& params, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os.write(kMagic, 4);
  write_pod(os, kVersion);
  for (const auto& [name, arr] : params) {
    write_pod(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod(os, static_cast<uint32_t>(arr.shape.size()));
    for (int e : arr.shape) write_pod(os, static_cast<uint64_t>(e));
    os.write(reinterpret_cast<const char*>(arr.data.data()),
             static_cast<std::streamsize>(arr.data.size() * sizeof(double)));
  }
  if (!os) throw IoError("write failed for '" + path + "'");
}

ParamStore load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("'" + path + "' is not an AMDC checkpoint");
  }
  uint32_t version = 0;
  if (!read_pod(is, version) || version != kVersion) {
    throw IoError("'" + path + "' has unsupported version");
  }
  ParamStore params;
  while (true) {
    uint32_t name_len = 0;
    if (!read_pod(is, name_len)) {
      if (is.eof()) break;
      throw IoError("truncated checkpoint '" + path + "'");
    }
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    uint32_t rank = 0;
    if (!is || !read_pod(is, rank)) {
      throw IoError("truncated checkpoint '" + path + "'");
    }
    Shape shape(rank);
    int64_t numel = 1;
    for (uint32_t i = 0; i < rank; ++i) {
      uint64_t e = 0;
      if (!read_pod(is, e)) throw IoError("truncated checkpoint '" + path + "'");
      shape[i] = static_cast<int>(e);
      numel *= shape[i];
    }
    std::vector<double> data(static_cast<size_t>(numel));
    is.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!is) throw IoError("truncated checkpoint '" + path + "'");
    if (params.count(name)) {
      throw IoError("duplicate parameter '" + name + "' in '" + path + "'");
    }
    params.emplace(std::move(name), Array(std::move(shape), std::move(data)));
  }
  return params;
}

}  // namespace amd::nd
