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

#include "amdtraj/graph.hpp"

namespace amd::nd {

// Flat binary parameter blob:
//   magic "AMDC", version u32 LE,
//   then per parameter in name order:
//     name length u32 LE, name bytes,
//     shape rank u32 LE, extents u64 LE each,
//     row-major f64 LE data.
// The stream ends at EOF; there is no trailing record count.
void save_checkpoint(const ParamStore& params, const std::string& path);
ParamStore load_checkpoint(const std::string& path);

}  // namespace amd::nd
