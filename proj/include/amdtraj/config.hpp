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

#pragma once

#include <map>
#include <string>
#include <vector>

namespace amd {

// Flat key=value config file: one pair per line, '#' comments, blank lines
// ignored. Typed getters throw ConfigError on malformed values.
class KvConfig {
 public:
  static KvConfig parse_file(const std::string& path);
  static KvConfig parse_string(const std::string& text);

  bool has(const std::string& key) const { return kv_.count(key) > 0; }
  std::string get_str(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int64_t get_int(const std::string& key, int64_t fallback) const;
  std::vector<double> get_list(const std::string& key,
                               const std::vector<double>& fallback) const;

  void set(const std::string& key, const std::string& value) { kv_[key] = value; }
  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::map<std::string, std::string> kv_;
};

}  // namespace amd
