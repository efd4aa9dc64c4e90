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

#include <vector>

#include "amdtraj/model.hpp"
#include "amdtraj/scene.hpp"

namespace amd::eval {

// Mean / final Euclidean displacement between equal-length trajectories.
double ade(const std::vector<traj::Point>& pred, const std::vector<traj::Point>& gt);
double fde(const std::vector<traj::Point>& pred, const std::vector<traj::Point>& gt);

std::vector<traj::Point> mode_trajectory(const model::ModePrediction& pred, int k);

struct MinMetrics {
  double min_ade = 0.0;
  double min_fde = 0.0;
};

// Restrict to the k most probable modes, then minimize ADE and FDE
// independently over them.
MinMetrics min_over_modes(const model::ModePrediction& pred,
                          const std::vector<traj::Point>& gt, int k);

// Fraction of samples whose minFDE_k exceeds the distance threshold.
double miss_rate(const std::vector<model::ModePrediction>& preds,
                 const std::vector<std::vector<traj::Point>>& gts, int k,
                 double threshold = 2.0);

}  // namespace amd::eval
