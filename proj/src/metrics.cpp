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

#include "amdtraj/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "amdtraj/error.hpp"

namespace amd::eval {

double ade(const std::vector<traj::Point>& pred,
           const std::vector<traj::Point>& gt) {
  if (pred.size() != gt.size() || pred.empty()) {
    throw UsageError("ade: trajectory lengths differ or are empty");
  }
  double total = 0.0;
  for (size_t t = 0; t < pred.size(); ++t) {
    total += std::hypot(pred[t][0] - gt[t][0], pred[t][1] - gt[t][1]);
  }
  return total / static_cast<double>(pred.size());
}

double fde(const std::vector<traj::Point>& pred,
           const std::vector<traj::Point>& gt) {
  if (pred.size() != gt.size() || pred.empty()) {
    throw UsageError("fde: trajectory lengths differ or are empty");
  }
  return std::hypot(pred.back()[0] - gt.back()[0], pred.back()[1] - gt.back()[1]);
}

std::vector<traj::Point> mode_trajectory(const model::ModePrediction& pred, int k) {
  std::vector<traj::Point> out(pred.t_f);
  for (int t = 0; t < pred.t_f; ++t) out[t] = {pred.loc(k, t, 0), pred.loc(k, t, 1)};
  return out;
}

MinMetrics min_over_modes(const model::ModePrediction& pred,
                          const std::vector<traj::Point>& gt, int k) {
  if (k < 1 || k > pred.k_modes) throw UsageError("k outside [1, k_modes]");
  if (static_cast<int>(gt.size()) != pred.t_f) {
    throw UsageError("ground truth length != prediction horizon");
  }
  std::vector<int> order = pred.modes_by_prob();
  MinMetrics out{std::numeric_limits<double>::infinity(),
                 std::numeric_limits<double>::infinity()};
  for (int i = 0; i < k; ++i) {
    const std::vector<traj::Point> traj_k = mode_trajectory(pred, order[i]);
    out.min_ade = std::min(out.min_ade, ade(traj_k, gt));
    out.min_fde = std::min(out.min_fde, fde(traj_k, gt));
  }
  return out;
}

double miss_rate(const std::vector<model::ModePrediction>& preds,
                 const std::vector<std::vector<traj::Point>>& gts, int k,
                 double threshold) {
  if (preds.empty()) throw UsageError("miss rate over an empty set");
  if (preds.size() != gts.size()) throw UsageError("preds/gts misaligned");
  if (threshold <= 0.0) throw ConfigError("miss-rate threshold must be positive");
  int misses = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    if (min_over_modes(preds[i], gts[i], k).min_fde > threshold) ++misses;
  }
  return static_cast<double>(misses) / static_cast<double>(preds.size());
}

}  // namespace amd::eval
