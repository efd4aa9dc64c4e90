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
#include <vector>

#include "amdtraj/config.hpp"
#include "amdtraj/scene.hpp"

namespace amd::aug {

// Seeded positive-view transforms for contrastive training. Every transform
// returns a sequence of the original length so encoder shapes stay static,
// and none of them moves the last observed position (shift excepted, which
// moves it by at most the clamp).
struct AugmentPolicy {
  double simplify_epsilon = 0.2;  // m
  double shift_sigma = 0.2;       // m
  double shift_clamp = 0.5;       // m
  double mask_ratio = 0.25;       // in [0,1)
  int subset_min_len = 0;         // 0 = ceil((len+1)/2) at apply time
  // simplify, shift, mask, subset
  std::array<double, 4> method_weights = {1.0, 1.0, 1.0, 1.0};

  static AugmentPolicy from_kv(const KvConfig& kv);
  void validate(int track_len) const;
};

// Farthest-point polyline simplification (keep endpoints, keep any point
// whose perpendicular distance to the current chord exceeds epsilon), then
// linear re-sampling back to the original timestamps. epsilon == 0 is the
// identity. Velocity/heading channels are rebuilt by finite differences.
std::vector<traj::State> simplify(const std::vector<traj::State>& states,
                                  double epsilon, double dt);

// Indices kept by the simplification pass alone (exposed for testing).
std::vector<size_t> simplify_keep_indices(const std::vector<traj::Point>& pts,
                                          double epsilon);

// I.i.d. zero-mean Gaussian displacement per position component, each
// component clamped to [-clamp, clamp]; derivatives rebuilt.
std::vector<traj::State> shift(const std::vector<traj::State>& states,
                               double sigma, double clamp, uint64_t seed,
                               double dt);

struct MaskResult {
  std::vector<traj::State> states;
  std::vector<uint8_t> masked;  // per step
};

// Drops floor(ratio * (len-1)) interior points (never the final one) and
// fills them by linear interpolation between the nearest kept steps.
MaskResult mask(const std::vector<traj::State>& states, double ratio,
                uint64_t seed);

struct SubsetResult {
  std::vector<traj::State> states;
  std::vector<uint8_t> padded;  // per step
};

// Keeps a suffix window of seeded length in [min_len, len] ending at the
// last observed point, left-padded by repeating the first kept state.
SubsetResult subset(const std::vector<traj::State>& states, int min_len,
                    uint64_t seed);

enum class Method { kSimplify = 0, kShift, kMask, kSubset };

// Samples one method by normalized weight and applies it.
std::vector<traj::State> random_augment(const std::vector<traj::State>& states,
                                        const AugmentPolicy& policy,
                                        uint64_t seed, double dt);

// Which method random_augment picks for a given seed (exposed for testing).
Method pick_method(const AugmentPolicy& policy, uint64_t seed);

}  // namespace amd::aug
