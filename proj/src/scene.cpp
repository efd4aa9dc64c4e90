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

#include "amdtraj/scene.hpp"

#include <cmath>

#include "amdtraj/error.hpp"

namespace amd::traj {

std::string agent_kind_name(AgentKind k) {
  return k == AgentKind::kVehicle ? "vehicle" : "pedestrian";
}

AgentKind agent_kind_from_name(const std::string& name) {
  if (name == "vehicle") return AgentKind::kVehicle;
  if (name == "pedestrian") return AgentKind::kPedestrian;
  throw IoError("unknown agent kind '" + name + "'");
}

void LaneGraph::validate() const {
  if (adj.size() != nodes.size()) {
    throw ShapeError("lane adjacency rows != node count");
  }
  for (size_t i = 0; i < adj.size(); ++i) {
    if (adj[i].size() != nodes.size()) {
      throw ShapeError("lane adjacency is not square");
    }
    if (adj[i][i]) throw ShapeError("lane adjacency has a self-loop");
  }
}

std::vector<size_t> Dataset::indices_of(Split s) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < split.size(); ++i) {
    if (split[i] == s) out.push_back(i);
  }
  return out;
}

std::vector<Split> default_split(size_t scene_count) {
  std::vector<Split> split(scene_count, Split::kTrain);
  for (size_t i = 0; i < scene_count; ++i) {
    if (i % 10 == 8) split[i] = Split::kVal;
    if (i % 10 == 9) split[i] = Split::kTest;
  }
  return split;
}

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  if (a > M_PI) a -= 2.0 * M_PI;
  return a;
}

namespace {

// Map a world point into the frame anchored at pose.
Point into_frame(const FramePose& pose, double x, double y) {
  const double c = std::cos(pose.heading);
  const double s = std::sin(pose.heading);
  const double dx = x - pose.x;
  const double dy = y - pose.y;
  return {c * dx + s * dy, -s * dx + c * dy};
}

Point outof_frame(const FramePose& pose, double x, double y) {
  const double c = std::cos(pose.heading);
  const double s = std::sin(pose.heading);
  return {pose.x + c * x - s * y, pose.y + s * x + c * y};
}

void transform_track(AgentTrack& track, const FramePose& pose, bool inverse) {
  const double c = std::cos(pose.heading);
  const double s = std::sin(pose.heading);
  for (State& st : track.states) {
    if (!inverse) {
      Point p = into_frame(pose, st.x, st.y);
      st.x = p[0];
      st.y = p[1];
      const double vx = c * st.vx + s * st.vy;
      const double vy = -s * st.vx + c * st.vy;
      st.vx = vx;
      st.vy = vy;
      st.heading = wrap_angle(st.heading - pose.heading);
    } else {
      Point p = outof_frame(pose, st.x, st.y);
      st.x = p[0];
      st.y = p[1];
      const double vx = c * st.vx - s * st.vy;
      const double vy = s * st.vx + c * st.vy;
      st.vx = vx;
      st.vy = vy;
      st.heading = wrap_angle(st.heading + pose.heading);
    }
  }
}

Scene transform_scene(const Scene& scene, const FramePose& pose, bool inverse) {
  Scene out = scene;
  transform_track(out.target, pose, inverse);
  for (AgentTrack& nbr : out.neighbors) transform_track(nbr, pose, inverse);
  for (Point& p : out.lanes.nodes) {
    p = inverse ? outof_frame(pose, p[0], p[1]) : into_frame(pose, p[0], p[1]);
  }
  for (Point& p : out.future) {
    p = inverse ? outof_frame(pose, p[0], p[1]) : into_frame(pose, p[0], p[1]);
  }
  return out;
}

}  // namespace

Scene to_agent_frame(const Scene& scene) {
  if (scene.target.states.empty()) {
    throw UsageError("to_agent_frame: target track is empty");
  }
  const State& anchor = scene.target.states.back();
  FramePose pose{anchor.x, anchor.y, anchor.heading};
  Scene out = transform_scene(scene, pose, false);
  out.frame = pose;
  return out;
}

Scene to_world_frame(const Scene& scene) {
  if (!scene.frame) {
    throw UsageError("to_world_frame: scene has no recorded frame");
  }
  Scene out = transform_scene(scene, *scene.frame, true);
  out.frame.reset();
  return out;
}

void recompute_derivatives(std::vector<State>& states, double dt) {
  const size_t n = states.size();
  if (n < 2 || dt <= 0.0) return;
  std::vector<double> vx(n), vy(n);
  for (size_t t = 0; t < n; ++t) {
    if (t == 0) {
      vx[t] = (states[1].x - states[0].x) / dt;
      vy[t] = (states[1].y - states[0].y) / dt;
    } else if (t == n - 1) {
      vx[t] = (states[t].x - states[t - 1].x) / dt;
      vy[t] = (states[t].y - states[t - 1].y) / dt;
    } else {
      vx[t] = (states[t + 1].x - states[t - 1].x) / (2.0 * dt);
      vy[t] = (states[t + 1].y - states[t - 1].y) / (2.0 * dt);
    }
  }
  double prev_heading = states[0].heading;
  for (size_t t = 0; t < n; ++t) {
    states[t].vx = vx[t];
    states[t].vy = vy[t];
    const double speed = std::hypot(vx[t], vy[t]);
    states[t].heading = speed > 1e-9 ? std::atan2(vy[t], vx[t]) : prev_heading;
    prev_heading = states[t].heading;
  }
}

}  // namespace amd::traj
