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

#include "amdtraj/scene.hpp"

namespace amd::traj {

// One scene per line:
// {"dt": f, "meta": s, "target": {"kind": s, "states": [[x,y,vx,vy,h],...]},
//  "neighbors": [track,...], "lanes": {"nodes": [[x,y],...],
//  "adj": [[0|1,...],...]}, "future": [[x,y],...]}
void save_scenes(const Dataset& dataset, const std::string& path);
Dataset load_scenes(const std::string& path);

}  // namespace amd::traj
