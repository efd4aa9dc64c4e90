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

#include "amdtraj/longtail.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "amdtraj/error.hpp"

namespace amd::longtail {

Criterion criterion_from_name(const std::string& name) {
  if (name == "error") return Criterion::kError;
  if (name == "risk") return Criterion::kRisk;
  if (name == "state") return Criterion::kState;
  throw ConfigError("unknown criterion '" + name + "'");
}

std::string criterion_name(Criterion c) {
  switch (c) {
    case Criterion::kError: return "error";
    case Criterion::kRisk: return "risk";
    case Criterion::kState: return "state";
  }
  return "?";
}

void StateThresholds::validate() const {
  if (accel_long <= 0.0 || decel_long <= 0.0 || lat_speed <= 0.0 ||
      yaw_rate <= 0.0) {
    throw ConfigError("state thresholds must be strictly positive");
  }
}

void SubsetSpec::validate() const {
  if (fractions.empty()) throw ConfigError("fractions list is empty");
  double prev = 0.0;
  for (double f : fractions) {
    if (f <= prev || f > 1.0) {
      throw ConfigError("fractions must be strictly increasing in (0,1]");
    }
    prev = f;
  }
  if (criterion == Criterion::kState) thresholds.validate();
}

namespace {

Subsets tiers_from_ranking(const std::vector<size_t>& ranked,
                           const std::vector<double>& fractions) {
  const size_t n = ranked.size();
  Subsets out;
  out.all.resize(n);
  std::iota(out.all.begin(), out.all.end(), size_t{0});
  for (double f : fractions) {
    const size_t count =
        std::min(n, static_cast<size_t>(std::ceil(f * static_cast<double>(n))));
    out.tiers.emplace_back(ranked.begin(), ranked.begin() + count);
  }
  const size_t last = out.tiers.empty() ? 0 : out.tiers.back().size();
  out.rest.assign(ranked.begin() + last, ranked.end());
  std::sort(out.rest.begin(), out.rest.end());
  return out;
}

}  // namespace

Subsets split_by_error(const std::vector<double>& per_sample_error,
                       const std::vector<double>& fractions) {
  if (per_sample_error.empty()) throw UsageError("empty error list");
  SubsetSpec spec;
  spec.fractions = fractions;
  spec.validate();
  std::vector<size_t> ranked(per_sample_error.size());
  std::iota(ranked.begin(), ranked.end(), size_t{0});
  std::stable_sort(ranked.begin(), ranked.end(), [&](size_t a, size_t b) {
    return per_sample_error[a] > per_sample_error[b];
  });
  return tiers_from_ranking(ranked, fractions);
}

RiskScore compute_ttc(const traj::Scene& scene, int at_step,
                      double collision_radius) {
  const int last = static_cast<int>(scene.target.states.size()) - 1;
  if (at_step < 0 || at_step > last) {
    throw UsageError("at_step outside observed history");
  }
  const traj::State& ego = scene.target.states[at_step];

  double best = std::numeric_limits<double>::infinity();
  for (const traj::AgentTrack& nbr : scene.neighbors) {
    const traj::State& other = nbr.states[at_step];
    const double rx = other.x - ego.x;
    const double ry = other.y - ego.y;
    const double wx = other.vx - ego.vx;
    const double wy = other.vy - ego.vy;
    const double c = rx * rx + ry * ry - collision_radius * collision_radius;
    if (c <= 0.0) {
      best = 0.0;
      break;
    }
    const double a = wx * wx + wy * wy;
    const double b = 2.0 * (rx * wx + ry * wy);
    if (a <= 0.0) continue;  // no relative motion
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) continue;  // paths never close within the radius
    const double sq = std::sqrt(disc);
    const double tau = (-b - sq) / (2.0 * a);  // earlier root
    if (tau >= 0.0) best = std::min(best, tau);
  }

  RiskScore score;
  score.ttc = best;
  score.inv_ttc = std::isinf(best) ? 0.0 : (best > 0.0 ? 1.0 / best
                                                       : std::numeric_limits<double>::infinity());
  return score;
}

Subsets rank_by_risk(const traj::Dataset& dataset,
                     const std::vector<double>& fractions, int at_step,
                     double collision_radius) {
  if (dataset.scenes.empty()) throw UsageError("empty dataset");
  std::vector<double> ttc(dataset.scenes.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < static_cast<int64_t>(dataset.scenes.size()); ++i) {
    const traj::Scene& scene = dataset.scenes[i];
    const int step = at_step < 0
                         ? static_cast<int>(scene.target.states.size()) - 1
                         : at_step;
    ttc[i] = compute_ttc(scene, step, collision_radius).ttc;
  }
  std::vector<size_t> ranked(ttc.size());
  std::iota(ranked.begin(), ranked.end(), size_t{0});
  std::stable_sort(ranked.begin(), ranked.end(),
                   [&](size_t a, size_t b) { return ttc[a] < ttc[b]; });
  return tiers_from_ranking(ranked, fractions);
}

namespace {

StateLabels labels_from_profiles(const std::vector<double>& a_long,
                                 const std::vector<double>& lat_speed,
                                 const std::vector<double>& yaw_rate,
                                 const StateThresholds& th) {
  StateLabels out;
  for (double a : a_long) {
    if (a > th.accel_long) out.rapid_accel = true;
    if (a < -th.decel_long) out.rapid_decel = true;
  }
  for (double w : yaw_rate) {
    if (std::fabs(w) > th.yaw_rate) out.sharp_turn = true;
  }
  if (!out.sharp_turn) {
    for (double v : lat_speed) {
      if (std::fabs(v) > th.lat_speed) out.sharp_lane_change = true;
    }
  }
  return out;
}

}  // namespace

StateLabels classify_vehicle_state(const std::vector<traj::Point>& positions,
                                   double dt, const StateThresholds& thresholds) {
  thresholds.validate();
  const size_t n = positions.size();
  if (n < 3) throw UsageError("track too short to classify (need >= 3 points)");

  // Velocities by forward differences, one per gap.
  std::vector<double> vx(n - 1), vy(n - 1), speed(n - 1), dir(n - 1);
  for (size_t t = 0; t + 1 < n; ++t) {
    vx[t] = (positions[t + 1][0] - positions[t][0]) / dt;
    vy[t] = (positions[t + 1][1] - positions[t][1]) / dt;
    speed[t] = std::hypot(vx[t], vy[t]);
    dir[t] = speed[t] > 1e-9 ? std::atan2(vy[t], vx[t]) : (t > 0 ? dir[t - 1] : 0.0);
  }
  std::vector<double> a_long(n - 2), yaw(n - 2);
  for (size_t t = 0; t + 2 < n; ++t) {
    a_long[t] = (speed[t + 1] - speed[t]) / dt;
    yaw[t] = traj::wrap_angle(dir[t + 1] - dir[t]) / dt;
  }
  // Lateral motion across the start-to-end chord.
  const double cx = positions[n - 1][0] - positions[0][0];
  const double cy = positions[n - 1][1] - positions[0][1];
  const double clen = std::hypot(cx, cy);
  std::vector<double> lat(n - 1, 0.0);
  if (clen > 1e-9) {
    const double nx = -cy / clen, ny = cx / clen;
    for (size_t t = 0; t + 1 < n; ++t) lat[t] = vx[t] * nx + vy[t] * ny;
  }
  return labels_from_profiles(a_long, lat, yaw, thresholds);
}

StateLabels classify_vehicle_state(const traj::AgentTrack& track, double dt,
                                   const StateThresholds& thresholds) {
  thresholds.validate();
  const size_t n = track.states.size();
  if (n < 3) throw UsageError("track too short to classify (need >= 3 points)");

  std::vector<double> a_long(n - 1), lat(n), yaw(n - 1);
  for (size_t t = 0; t < n; ++t) {
    const traj::State& s = track.states[t];
    // body-frame lateral velocity
    lat[t] = -s.vx * std::sin(s.heading) + s.vy * std::cos(s.heading);
  }
  for (size_t t = 0; t + 1 < n; ++t) {
    const traj::State& s0 = track.states[t];
    const traj::State& s1 = track.states[t + 1];
    a_long[t] = (std::hypot(s1.vx, s1.vy) - std::hypot(s0.vx, s0.vy)) / dt;
    yaw[t] = traj::wrap_angle(s1.heading - s0.heading) / dt;
  }
  return labels_from_profiles(a_long, lat, yaw, thresholds);
}

std::vector<traj::Point> full_target_path(const traj::Scene& scene) {
  std::vector<traj::Point> path;
  path.reserve(scene.target.states.size() + scene.future.size());
  for (const traj::State& s : scene.target.states) path.push_back({s.x, s.y});
  for (const traj::Point& p : scene.future) path.push_back(p);
  return path;
}

}  // namespace amd::longtail
