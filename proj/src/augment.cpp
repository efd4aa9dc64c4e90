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

#include "amdtraj/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "amdtraj/error.hpp"
#include "amdtraj/random.hpp"

namespace amd::aug {

namespace {

double perp_distance(const traj::Point& p, const traj::Point& a,
                     const traj::Point& b) {
  const double abx = b[0] - a[0];
  const double aby = b[1] - a[1];
  const double len = std::hypot(abx, aby);
  if (len < 1e-12) return std::hypot(p[0] - a[0], p[1] - a[1]);
  return std::fabs(abx * (p[1] - a[1]) - aby * (p[0] - a[0])) / len;
}

double lerp_angle(double a, double b, double t) {
  return traj::wrap_angle(a + traj::wrap_angle(b - a) * t);
}

std::vector<traj::Point> positions_of(const std::vector<traj::State>& states) {
  std::vector<traj::Point> pts;
  pts.reserve(states.size());
  for (const traj::State& s : states) pts.push_back({s.x, s.y});
  return pts;
}

}  // namespace

AugmentPolicy AugmentPolicy::from_kv(const KvConfig& kv) {
  AugmentPolicy p;
  p.simplify_epsilon = kv.get_double("aug_simplify_epsilon", p.simplify_epsilon);
  p.shift_sigma = kv.get_double("aug_shift_sigma", p.shift_sigma);
  p.shift_clamp = kv.get_double("aug_shift_clamp", p.shift_clamp);
  p.mask_ratio = kv.get_double("aug_mask_ratio", p.mask_ratio);
  p.subset_min_len = static_cast<int>(kv.get_int("aug_subset_min_len", p.subset_min_len));
  std::vector<double> w = kv.get_list(
      "aug_method_weights",
      {p.method_weights[0], p.method_weights[1], p.method_weights[2],
       p.method_weights[3]});
  if (w.size() != 4) throw ConfigError("aug_method_weights needs 4 values");
  std::copy(w.begin(), w.end(), p.method_weights.begin());
  return p;
}

void AugmentPolicy::validate(int track_len) const {
  if (simplify_epsilon < 0.0 || shift_sigma < 0.0 || shift_clamp < 0.0) {
    throw ConfigError("augmentation scales must be non-negative");
  }
  if (mask_ratio < 0.0 || mask_ratio >= 1.0) {
    throw ConfigError("mask_ratio must lie in [0,1)");
  }
  const int resolved = subset_min_len > 0 ? subset_min_len : (track_len + 1) / 2;
  if (resolved < 2 || resolved > track_len) {
    throw ConfigError("subset_min_len out of range for track length " +
                      std::to_string(track_len));
  }
  const double wsum = std::accumulate(method_weights.begin(),
                                      method_weights.end(), 0.0);
  if (wsum <= 0.0) throw ConfigError("method weights must sum to > 0");
  for (double w : method_weights) {
    if (w < 0.0) throw ConfigError("method weights must be non-negative");
  }
}

std::vector<size_t> simplify_keep_indices(const std::vector<traj::Point>& pts,
                                          double epsilon) {
  const size_t n = pts.size();
  std::vector<uint8_t> keep(n, 0);
  if (n == 0) return {};
  keep[0] = keep[n - 1] = 1;
  // Iterative chord subdivision instead of recursion.
  std::vector<std::pair<size_t, size_t>> stack{{0, n - 1}};
  while (!stack.empty()) {
    auto [lo, hi] = stack.back();
    stack.pop_back();
    if (hi <= lo + 1) continue;
    double best = -1.0;
    size_t split = lo;
    for (size_t i = lo + 1; i < hi; ++i) {
      const double d = perp_distance(pts[i], pts[lo], pts[hi]);
      if (d > best) {
        best = d;
        split = i;
      }
    }
    if (best > epsilon) {
      keep[split] = 1;
      stack.push_back({lo, split});
      stack.push_back({split, hi});
    }
  }
  std::vector<size_t> kept;
  for (size_t i = 0; i < n; ++i) {
    if (keep[i]) kept.push_back(i);
  }
  return kept;
}

std::vector<traj::State> simplify(const std::vector<traj::State>& states,
                                  double epsilon, double dt) {
  if (epsilon == 0.0 || states.size() < 3) return states;
  const std::vector<traj::Point> pts = positions_of(states);
  const std::vector<size_t> kept = simplify_keep_indices(pts, epsilon);

  std::vector<traj::State> out = states;
  size_t seg = 0;
  for (size_t t = 0; t < states.size(); ++t) {
    while (seg + 1 < kept.size() && kept[seg + 1] < t) ++seg;
    const size_t a = kept[seg];
    const size_t b = kept[std::min(seg + 1, kept.size() - 1)];
    if (a == b || t <= a) {
      out[t].x = pts[a][0];
      out[t].y = pts[a][1];
      continue;
    }
    const double f = static_cast<double>(t - a) / static_cast<double>(b - a);
    out[t].x = pts[a][0] + f * (pts[b][0] - pts[a][0]);
    out[t].y = pts[a][1] + f * (pts[b][1] - pts[a][1]);
  }
  traj::recompute_derivatives(out, dt);
  return out;
}

std::vector<traj::State> shift(const std::vector<traj::State>& states,
                               double sigma, double clamp, uint64_t seed,
                               double dt) {
  if (sigma == 0.0) return states;
  Rng rng(seed);
  std::vector<traj::State> out = states;
  for (traj::State& s : out) {
    s.x += std::clamp(rng.normal(0.0, sigma), -clamp, clamp);
    s.y += std::clamp(rng.normal(0.0, sigma), -clamp, clamp);
  }
  traj::recompute_derivatives(out, dt);
  return out;
}

MaskResult mask(const std::vector<traj::State>& states, double ratio,
                uint64_t seed) {
  if (ratio < 0.0 || ratio >= 1.0) throw ConfigError("mask ratio must be in [0,1)");
  const size_t n = states.size();
  MaskResult res{states, std::vector<uint8_t>(n, 0)};
  if (n < 3 || ratio == 0.0) return res;

  const size_t count = static_cast<size_t>(std::floor(ratio * (n - 1)));
  if (count == 0) return res;
  std::vector<size_t> eligible(n - 2);
  std::iota(eligible.begin(), eligible.end(), size_t{1});  // interior only
  Rng rng(seed);
  rng.shuffle(eligible);
  std::vector<size_t> chosen(eligible.begin(),
                             eligible.begin() + std::min(count, eligible.size()));
  std::sort(chosen.begin(), chosen.end());
  for (size_t i : chosen) res.masked[i] = 1;

  // Fill every masked step from its nearest kept neighbors on both sides.
  for (size_t i : chosen) {
    size_t lo = i;
    while (lo > 0 && res.masked[lo]) --lo;
    size_t hi = i;
    while (hi < n - 1 && res.masked[hi]) ++hi;
    const double f = static_cast<double>(i - lo) / static_cast<double>(hi - lo);
    const traj::State& a = states[lo];
    const traj::State& b = states[hi];
    traj::State& s = res.states[i];
    s.x = a.x + f * (b.x - a.x);
    s.y = a.y + f * (b.y - a.y);
    s.vx = a.vx + f * (b.vx - a.vx);
    s.vy = a.vy + f * (b.vy - a.vy);
    s.heading = lerp_angle(a.heading, b.heading, f);
  }
  return res;
}

SubsetResult subset(const std::vector<traj::State>& states, int min_len,
                    uint64_t seed) {
  const int n = static_cast<int>(states.size());
  if (min_len < 1 || min_len > n) throw ConfigError("subset min_len out of range");
  Rng rng(seed);
  const int window = min_len + static_cast<int>(rng.below(n - min_len + 1));
  const int start = n - window;
  SubsetResult res{states, std::vector<uint8_t>(states.size(), 0)};
  for (int t = 0; t < start; ++t) {
    res.states[t] = states[start];
    res.padded[t] = 1;
  }
  return res;
}

Method pick_method(const AugmentPolicy& policy, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> w(policy.method_weights.begin(),
                        policy.method_weights.end());
  return static_cast<Method>(rng.categorical(w));
}

std::vector<traj::State> random_augment(const std::vector<traj::State>& states,
                                        const AugmentPolicy& policy,
                                        uint64_t seed, double dt) {
  policy.validate(static_cast<int>(states.size()));
  const Method m = pick_method(policy, seed);
  const uint64_t sub =
      mix_seed(seed, seed_purpose::kAugment, static_cast<uint64_t>(m));
  switch (m) {
    case Method::kSimplify:
      return simplify(states, policy.simplify_epsilon, dt);
    case Method::kShift:
      return shift(states, policy.shift_sigma, policy.shift_clamp, sub, dt);
    case Method::kMask:
      return mask(states, policy.mask_ratio, sub).states;
    case Method::kSubset: {
      const int resolved = policy.subset_min_len > 0
                               ? policy.subset_min_len
                               : (static_cast<int>(states.size()) + 1) / 2;
      return subset(states, resolved, sub).states;
    }
  }
  return states;
}

}  // namespace amd::aug
