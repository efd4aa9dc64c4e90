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
#include <optional>
#include <string>
#include <vector>

namespace amd::traj {

using Point = std::array<double, 2>;  // metres

// One observed agent state at a timestep.
struct State {
  double x = 0.0;        // m
  double y = 0.0;        // m
  double vx = 0.0;       // m/s
  double vy = 0.0;       // m/s
  double heading = 0.0;  // rad, in (-pi, pi]
};

enum class AgentKind { kVehicle, kPedestrian };

std::string agent_kind_name(AgentKind k);
AgentKind agent_kind_from_name(const std::string& name);

struct AgentTrack {
  AgentKind kind = AgentKind::kVehicle;
  std::vector<State> states;  // length t_history + 1, uniform dt
};

// Lane points plus a boolean adjacency matrix (no self-loops).
struct LaneGraph {
  std::vector<Point> nodes;
  std::vector<std::vector<uint8_t>> adj;

  bool empty() const { return nodes.empty(); }
  void validate() const;  // throws ShapeError on malformed adjacency
};

// Rigid transform from world coordinates into an agent-centric frame:
// world pose (x, y, heading) of the frame origin.
struct FramePose {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

struct Scene {
  double dt = 0.5;        // s
  std::string meta;       // generating maneuver label
  AgentTrack target;
  std::vector<AgentTrack> neighbors;
  LaneGraph lanes;
  std::vector<Point> future;  // length t_future, positions only
  // Set by to_agent_frame: the world pose the frame was anchored to, kept
  // separately from meta so the JSONL schema stays label-only.
  std::optional<FramePose> frame;

  int t_history() const { return static_cast<int>(target.states.size()) - 1; }
  int t_future() const { return static_cast<int>(future.size()); }
};

enum class Split { kTrain, kVal, kTest };

struct Dataset {
  std::vector<Scene> scenes;
  std::vector<Split> split;  // one entry per scene

  std::vector<size_t> indices_of(Split s) const;
};

// Deterministic index-based assignment (8/1/1 per block of ten). Derived
// from position only, so a save/load round trip reproduces it.
std::vector<Split> default_split(size_t scene_count);

double wrap_angle(double a);  // into (-pi, pi]

// Re-anchor a scene so the target's last observed pose sits at the origin
// with zero heading. All tracks, lanes and the future move rigidly; the
// world pose is recorded in scene.frame for inversion.
Scene to_agent_frame(const Scene& scene);

// Inverse of to_agent_frame; requires scene.frame to be set.
Scene to_world_frame(const Scene& scene);

// Rebuild vx/vy by central differences of positions (one-sided at the ends)
// and headings from motion direction. Stationary steps keep the previous
// heading. Used after augmentations that move points.
void recompute_derivatives(std::vector<State>& states, double dt);

}  // namespace amd::traj
