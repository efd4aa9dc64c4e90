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

#include <limits>
#include <string>
#include <vector>

#include "amdtraj/scene.hpp"

namespace amd::longtail {

enum class Criterion { kError, kRisk, kState };

Criterion criterion_from_name(const std::string& name);
std::string criterion_name(Criterion c);

// Maneuver-intensity thresholds for vehicle-state classification.
struct StateThresholds {
  double accel_long = 2.5;  // m/s^2
  double decel_long = 3.0;  // m/s^2, magnitude
  double lat_speed = 1.0;   // m/s
  double yaw_rate = 0.3;    // rad/s

  void validate() const;  // all strictly positive
};

struct SubsetSpec {
  Criterion criterion = Criterion::kError;
  std::vector<double> fractions = {0.01, 0.02, 0.03, 0.04, 0.05};
  StateThresholds thresholds;

  void validate() const;  // fractions strictly increasing, in (0,1]
};

struct RiskScore {
  double ttc = std::numeric_limits<double>::infinity();  // s
  double inv_ttc = 0.0;                                  // 1/s
};

// Nested index subsets: tiers[i] holds the ceil(fractions[i] * N) samples
// ranked worst-first, rest = everything outside the last tier.
struct Subsets {
  std::vector<std::vector<size_t>> tiers;
  std::vector<size_t> rest;
  std::vector<size_t> all;
};

// Rank by descending error; ties break by ascending sample index.
Subsets split_by_error(const std::vector<double>& per_sample_error,
                       const std::vector<double>& fractions);

// Earliest time at which any neighbor, extrapolated at constant velocity
// from `at_step`, comes within collision_radius of the target. No neighbors
// or no approach gives +inf. Closed-form quadratic solution; tests check it
// against a fine-grained time-stepping oracle.
RiskScore compute_ttc(const traj::Scene& scene, int at_step,
                      double collision_radius = 2.0);

// Rank scenes ascending by TTC (riskiest first); ties by index.
Subsets rank_by_risk(const traj::Dataset& dataset,
                     const std::vector<double>& fractions, int at_step = -1,
                     double collision_radius = 2.0);

struct StateLabels {
  bool rapid_accel = false;
  bool rapid_decel = false;
  bool sharp_lane_change = false;
  bool sharp_turn = false;
  bool normal() const {
    return !rapid_accel && !rapid_decel && !sharp_lane_change && !sharp_turn;
  }
};

// Classify a position sequence (>= 3 points) against the thresholds.
// Velocities come from finite differences; longitudinal acceleration is the
// speed derivative, yaw rate the motion-direction derivative, and lateral
// speed the velocity component across the start-to-end chord.
StateLabels classify_vehicle_state(const std::vector<traj::Point>& positions,
                                   double dt, const StateThresholds& thresholds);

// AgentTrack overload using the stored velocity and heading channels:
// longitudinal/lateral split in the body frame.
StateLabels classify_vehicle_state(const traj::AgentTrack& track, double dt,
                                   const StateThresholds& thresholds);

// Target history plus ground-truth future as one position sequence.
std::vector<traj::Point> full_target_path(const traj::Scene& scene);

}  // namespace amd::longtail
