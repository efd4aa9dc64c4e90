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

#include <string>
#include <vector>

namespace amd {

// Shortest decimal representation that round-trips the exact double.
// All CSV/JSONL output goes through this so re-runs are byte-identical.
std::string format_double(double v);

std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);

}  // namespace amd
