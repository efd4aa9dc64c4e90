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

#include "amdtraj/generate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "amdtraj/error.hpp"
#include "amdtraj/random.hpp"

namespace amd::traj {

namespace {

enum Maneuver {
  kCruise = 0,
  kTurnLeft,
  kTurnRight,
  kLaneChange,
  kHardAccel,
  kHardBrake,
};

double clamped_normal(Rng& rng, double sigma) {
  if (sigma <= 0.0) return 0.0;
  return std::clamp(rng.normal(0.0, sigma), -2.0 * sigma, 2.0 * sigma);
}

struct TargetPath {
  std::vector<State> states;       // with control noise
  std::vector<Point> nominal;      // noise-free positions for lane layout
  double nominal_heading = 0.0;
};

// Unicycle rollout: longitudinal accel + yaw-rate controls, forward Euler.
// Lane changes keep the vehicle heading on the lane axis and move the body
// laterally instead, which is what makes them visible as lateral speed.
TargetPath simulate_target(Maneuver m, int steps, double dt, double noise,
                           Rng& rng) {
  TargetPath out;
  const double x0 = rng.uniform(-50.0, 50.0);
  const double y0 = rng.uniform(-50.0, 50.0);
  const double theta0 = rng.uniform(-M_PI, M_PI);
  double speed = rng.uniform(8.0, 15.0);

  double accel_nom = 0.0;
  double yaw_nom = 0.0;
  switch (m) {
    case kCruise:
      break;
    case kTurnLeft:
      yaw_nom = rng.uniform(0.35, 0.6);
      break;
    case kTurnRight:
      yaw_nom = -rng.uniform(0.35, 0.6);
      break;
    case kLaneChange:
      break;  // handled below
    case kHardAccel:
      accel_nom = rng.uniform(3.0, 4.5);
      speed = rng.uniform(5.0, 10.0);
      break;
    case kHardBrake:
      accel_nom = -rng.uniform(3.5, 5.0);
      speed = rng.uniform(10.0, 16.0);
      break;
  }

  if (m == kLaneChange) {
    // Straight base path plus a half-cosine lateral shift of one lane width.
    const double lane_width = 3.5;
    const double duration = rng.uniform(2.0, 3.0);  // s
    const double t_start = rng.uniform(0.5, 1.0);
    const double side = rng.uniform() < 0.5 ? 1.0 : -1.0;
    const double c = std::cos(theta0), s = std::sin(theta0);
    const double nx = -s, ny = c;  // left normal
    for (int t = 0; t < steps; ++t) {
      const double time = t * dt;
      double frac = (time - t_start) / duration;
      frac = std::clamp(frac, 0.0, 1.0);
      const double lat = side * lane_width * 0.5 * (1.0 - std::cos(M_PI * frac));
      double lat_v = 0.0;
      if (time >= t_start && time <= t_start + duration) {
        lat_v = side * lane_width * 0.5 * M_PI / duration *
                std::sin(M_PI * (time - t_start) / duration);
      }
      State st;
      st.x = x0 + c * speed * time + nx * lat;
      st.y = y0 + s * speed * time + ny * lat;
      st.vx = c * speed + nx * lat_v;
      st.vy = s * speed + ny * lat_v;
      st.heading = theta0;
      out.states.push_back(st);
      out.nominal.push_back({x0 + c * speed * time, y0 + s * speed * time});
    }
    out.nominal_heading = theta0;
    return out;
  }

  double x = x0, y = y0, theta = theta0, v = speed;
  double nx = x0, ny = y0, ntheta = theta0, nv = speed;
  for (int t = 0; t < steps; ++t) {
    State st;
    st.x = x;
    st.y = y;
    st.vx = v * std::cos(theta);
    st.vy = v * std::sin(theta);
    st.heading = wrap_angle(theta);
    out.states.push_back(st);
    out.nominal.push_back({nx, ny});

    const double a = accel_nom + clamped_normal(rng, noise);
    const double w = yaw_nom + clamped_normal(rng, 0.2 * noise);
    x += v * std::cos(theta) * dt;
    y += v * std::sin(theta) * dt;
    theta += w * dt;
    v = std::max(0.0, v + a * dt);

    nx += nv * std::cos(ntheta) * dt;
    ny += nv * std::sin(ntheta) * dt;
    ntheta += yaw_nom * dt;
    nv = std::max(0.0, nv + accel_nom * dt);
  }
  out.nominal_heading = theta0;
  return out;
}

// Corridor along the nominal path plus one parallel lane 3.5 m to the left.
LaneGraph build_lanes(const TargetPath& path, double dt) {
  LaneGraph lanes;
  const int stride = 2;  // one node per second at dt = 0.5
  std::vector<Point> centers;
  for (size_t t = 0; t < path.nominal.size(); t += stride) {
    centers.push_back(path.nominal[t]);
  }
  if (centers.size() < 2) return lanes;
  (void)dt;
  const size_t n = centers.size();
  lanes.nodes = centers;
  for (size_t i = 0; i < n; ++i) {
    // local direction from the chord to the next (or previous) node
    const size_t a = i + 1 < n ? i : i - 1;
    const size_t b = i + 1 < n ? i + 1 : i;
    const double dx = centers[b][0] - centers[a][0];
    const double dy = centers[b][1] - centers[a][1];
    const double len = std::hypot(dx, dy);
    const double nxd = len > 1e-9 ? -dy / len : 0.0;
    const double nyd = len > 1e-9 ? dx / len : 1.0;
    lanes.nodes.push_back({centers[i][0] + 3.5 * nxd, centers[i][1] + 3.5 * nyd});
  }
  const size_t total = lanes.nodes.size();
  lanes.adj.assign(total, std::vector<uint8_t>(total, 0));
  for (size_t i = 0; i + 1 < n; ++i) {
    lanes.adj[i][i + 1] = 1;          // center polyline chain
    lanes.adj[n + i][n + i + 1] = 1;  // parallel polyline chain
  }
  return lanes;
}

AgentTrack make_neighbor(const Point& anchor, int track_len, double dt,
                         double noise, Rng& rng) {
  AgentTrack track;
  track.kind = rng.uniform() < 0.7 ? AgentKind::kVehicle : AgentKind::kPedestrian;
  const double r = rng.uniform(5.0, 30.0);
  const double ang = rng.uniform(-M_PI, M_PI);
  const double x0 = anchor[0] + r * std::cos(ang);
  const double y0 = anchor[1] + r * std::sin(ang);
  const double heading = rng.uniform(-M_PI, M_PI);
  const double speed = track.kind == AgentKind::kVehicle ? rng.uniform(3.0, 12.0)
                                                         : rng.uniform(0.5, 2.0);
  const double jitter = 0.1 * noise;
  for (int t = 0; t < track_len; ++t) {
    State st;
    st.x = x0 + speed * std::cos(heading) * t * dt + clamped_normal(rng, jitter);
    st.y = y0 + speed * std::sin(heading) * t * dt + clamped_normal(rng, jitter);
    st.vx = speed * std::cos(heading);
    st.vy = speed * std::sin(heading);
    st.heading = heading;
    track.states.push_back(st);
  }
  return track;
}

}  // namespace

GenConfig GenConfig::from_kv(const KvConfig& kv) {
  GenConfig cfg;
  cfg.scenes = static_cast<int>(kv.get_int("scenes", cfg.scenes));
  cfg.t_history = static_cast<int>(kv.get_int("t_history", cfg.t_history));
  cfg.t_future = static_cast<int>(kv.get_int("t_future", cfg.t_future));
  cfg.dt = kv.get_double("dt", cfg.dt);
  for (size_t i = 0; i < kManeuverNames.size(); ++i) {
    std::string key = std::string("mix_") + kManeuverNames[i];
    std::replace(key.begin(), key.end(), '-', '_');
    cfg.mix[i] = kv.get_double(key, cfg.mix[i]);
  }
  cfg.neighbors_min = static_cast<int>(kv.get_int("neighbors_min", cfg.neighbors_min));
  cfg.neighbors_max = static_cast<int>(kv.get_int("neighbors_max", cfg.neighbors_max));
  cfg.noise_level = kv.get_double("noise_level", cfg.noise_level);
  cfg.validate();
  return cfg;
}

void GenConfig::validate() const {
  if (scenes <= 0) throw ConfigError("scenes must be positive");
  if (t_history < 2) throw ConfigError("t_history must be at least 2");
  if (t_future < 1) throw ConfigError("t_future must be at least 1");
  if (dt <= 0.0) throw ConfigError("dt must be positive");
  if (neighbors_min < 0 || neighbors_max < neighbors_min) {
    throw ConfigError("invalid neighbor count range");
  }
  if (noise_level < 0.0) throw ConfigError("noise_level must be non-negative");
  double total = std::accumulate(mix.begin(), mix.end(), 0.0);
  if (std::fabs(total - 1.0) > 1e-9) {
    throw ConfigError("maneuver mix sums to " + std::to_string(total) +
                      ", expected 1");
  }
  for (double p : mix) {
    if (p < 0.0) throw ConfigError("maneuver proportions must be non-negative");
  }
}

std::array<int, 6> maneuver_counts(const std::array<double, 6>& mix, int total) {
  std::array<int, 6> counts{};
  std::array<double, 6> remainder{};
  int assigned = 0;
  for (size_t i = 0; i < mix.size(); ++i) {
    const double exact = mix[i] * total;
    counts[i] = static_cast<int>(std::floor(exact));
    remainder[i] = exact - counts[i];
    assigned += counts[i];
  }
  std::array<size_t, 6> order{0, 1, 2, 3, 4, 5};
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return remainder[a] > remainder[b];
  });
  for (int left = total - assigned, j = 0; left > 0; --left, ++j) {
    counts[order[j % order.size()]] += 1;
  }
  return counts;
}

Dataset generate_synthetic(const GenConfig& config, uint64_t seed) {
  config.validate();
  const std::array<int, 6> counts = maneuver_counts(config.mix, config.scenes);

  std::vector<int> labels;
  labels.reserve(config.scenes);
  for (size_t m = 0; m < counts.size(); ++m) {
    labels.insert(labels.end(), counts[m], static_cast<int>(m));
  }
  Rng order_rng(mix_seed(seed, seed_purpose::kGenerate, 0));
  order_rng.shuffle(labels);

  Dataset dataset;
  dataset.scenes.reserve(labels.size());
  const int track_len = config.t_history + 1 + config.t_future;
  for (size_t i = 0; i < labels.size(); ++i) {
    Rng rng(mix_seed(seed, seed_purpose::kGenerate, i + 1));
    const Maneuver m = static_cast<Maneuver>(labels[i]);
    TargetPath path =
        simulate_target(m, track_len, config.dt, config.noise_level, rng);

    Scene scene;
    scene.dt = config.dt;
    scene.meta = kManeuverNames[labels[i]];
    scene.target.kind = AgentKind::kVehicle;
    scene.target.states.assign(path.states.begin(),
                               path.states.begin() + config.t_history + 1);
    for (int t = config.t_history + 1; t < track_len; ++t) {
      scene.future.push_back({path.states[t].x, path.states[t].y});
    }
    scene.lanes = build_lanes(path, config.dt);

    const int n_nbrs =
        config.neighbors_min +
        static_cast<int>(rng.below(config.neighbors_max - config.neighbors_min + 1));
    const Point anchor{path.states[0].x, path.states[0].y};
    for (int k = 0; k < n_nbrs; ++k) {
      scene.neighbors.push_back(make_neighbor(anchor, config.t_history + 1,
                                              config.dt, config.noise_level, rng));
    }
    dataset.scenes.push_back(std::move(scene));
  }
  dataset.split = default_split(dataset.scenes.size());
  return dataset;
}

}  // namespace amd::traj
