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

#include "amdtraj/config.hpp"

#include <fstream>
#include <sstream>

#include "amdtraj/error.hpp"
#include "amdtraj/textio.hpp"

namespace amd {

KvConfig KvConfig::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_string(ss.str());
}

KvConfig KvConfig::parse_string(const std::string& text) {
  KvConfig cfg;
  int line_no = 0;
  for (const std::string& raw : split(text, '\n')) {
    ++line_no;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        " has no '=': " + line);
    }
    cfg.kv_[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return cfg;
}

std::string KvConfig::get_str(const std::string& key,
                              const std::string& fallback) const {
  auto it = kv_.find(key);
  return it == kv_.end() ? fallback : it->second;
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    size_t used = 0;
    double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' is not a number: " + it->second);
  }
}

int64_t KvConfig::get_int(const std::string& key, int64_t fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  try {
    size_t used = 0;
    int64_t v = std::stoll(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "' is not an integer: " + it->second);
  }
}

std::vector<double> KvConfig::get_list(const std::string& key,
                                       const std::vector<double>& fallback) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return fallback;
  std::vector<double> out;
  for (const std::string& part : split(it->second, ',')) {
    std::string p = trim(part);
    if (p.empty()) continue;
    try {
      out.push_back(std::stod(p));
    } catch (const std::exception&) {
      throw ConfigError("key '" + key + "' has a non-numeric element: " + p);
    }
  }
  return out;
}

}  // namespace amd
