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

#include <array>
#include <cstdint>
#include <string>

#include "amdtraj/config.hpp"
#include "amdtraj/scene.hpp"

namespace amd::traj {

// Maneuver order used for mix proportions and label histograms.
inline constexpr std::array<const char*, 6> kManeuverNames = {
    "cruise",     "turn-left",  "turn-right",
    "lane-change", "hard-accel", "hard-brake"};

struct GenConfig {
  int scenes = 200;
  int t_history = 4;   // history steps, track length t_history + 1
  int t_future = 8;    // future steps
  double dt = 0.5;     // s
  // cruise, turn-left, turn-right, lane-change, hard-accel, hard-brake;
  // must sum to 1 within 1e-9.
  std::array<double, 6> mix = {0.5, 0.1, 0.1, 0.1, 0.1, 0.1};
  int neighbors_min = 1;
  int neighbors_max = 4;
  double noise_level = 0.1;  // control noise sigma, clamped at 2 sigma

  static GenConfig from_kv(const KvConfig& kv);
  void validate() const;  // throws ConfigError
};

// Deterministic synthetic long-tail dataset: rare hard maneuvers mixed into a
// cruise-dominated pool, corridor lane polylines along the target's nominal
// path, constant-velocity neighbors. Bit-identical for a fixed (config, seed).
Dataset generate_synthetic(const GenConfig& config, uint64_t seed);

// Largest-remainder apportionment of `total` into integer counts matching
// the proportions; ties break by lower index.
std::array<int, 6> maneuver_counts(const std::array<double, 6>& mix, int total);

}  // namespace amd::traj
