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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "amdtraj/error.hpp"
#include "amdtraj/generate.hpp"
#include "amdtraj/longtail.hpp"
#include "amdtraj/random.hpp"
#include "amdtraj/scene.hpp"
#include "oracles.hpp"

using namespace amd;
using longtail::compute_ttc;
using longtail::StateThresholds;
using longtail::Subsets;
using traj::Scene;

namespace {

// Scene with a target and one neighbor on prescribed constant-velocity
// courses over three observed steps.
Scene two_agent_scene(double ex, double ey, double evx, double evy, double nx,
                      double ny, double nvx, double nvy) {
  Scene s;
  s.dt = 0.5;
  s.meta = "fixture";
  for (int t = 0; t < 3; ++t) {
    traj::State st;
    st.x = ex + evx * t * s.dt;
    st.y = ey + evy * t * s.dt;
    st.vx = evx;
    st.vy = evy;
    st.heading = std::atan2(evy, evx);
    s.target.states.push_back(st);
    traj::State nb;
    nb.x = nx + nvx * t * s.dt;
    nb.y = ny + nvy * t * s.dt;
    nb.vx = nvx;
    nb.vy = nvy;
    nb.heading = std::atan2(nvy, nvx);
    if (t == 0) s.neighbors.push_back({traj::AgentKind::kVehicle, {}});
    s.neighbors[0].states.push_back(nb);
  }
  s.future = {{0, 0}, {0, 0}};
  return s;
}

std::vector<traj::State> straight_track(int n, double speed, double dt) {
  std::vector<traj::State> st(n);
  for (int t = 0; t < n; ++t) {
    st[t] = {speed * t * dt, 0.0, speed, 0.0, 0.0};
  }
  return st;
}

}  // namespace

TEST_CASE("error split sizes are exact ceilings with a clean partition") {
  std::vector<double> errors(200);
  Rng rng(1);
  for (double& e : errors) e = rng.uniform(0.0, 10.0);
  Subsets s = longtail::split_by_error(errors, {0.01, 0.02, 0.03, 0.04, 0.05});
  REQUIRE(s.tiers.size() == 5);
  CHECK(s.tiers[0].size() == 2);
  CHECK(s.tiers[1].size() == 4);
  CHECK(s.tiers[2].size() == 6);
  CHECK(s.tiers[3].size() == 8);
  CHECK(s.tiers[4].size() == 10);
  CHECK(s.rest.size() == 190);
  // monotone nesting
  for (size_t i = 1; i < s.tiers.size(); ++i) {
    for (size_t j = 0; j < s.tiers[i - 1].size(); ++j) {
      CHECK(s.tiers[i][j] == s.tiers[i - 1][j]);
    }
  }
  // (last tier, rest) partitions all
  std::vector<char> seen(200, 0);
  for (size_t i : s.tiers[4]) seen[i] += 1;
  for (size_t i : s.rest) seen[i] += 1;
  for (char c : seen) CHECK(c == 1);
}

TEST_CASE("equal errors break ties by ascending index") {
  std::vector<double> errors(200, 3.14);
  Subsets s = longtail::split_by_error(errors, {0.01});
  CHECK(s.tiers[0] == std::vector<size_t>{0, 1});
}

TEST_CASE("two largest errors win at fraction 0.4") {
  Subsets s = longtail::split_by_error({5, 1, 4, 2, 3}, {0.4});
  CHECK(s.tiers[0] == std::vector<size_t>{0, 2});
}

TEST_CASE("empty error list is rejected") {
  CHECK_THROWS_AS(longtail::split_by_error({}, {0.01}), UsageError);
}

TEST_CASE("head-on closing gap gives gap over closing speed") {
  // neighbor 20 m ahead, closing at 5 m/s, radius 0
  Scene s = two_agent_scene(0, 0, 5, 0, 20, 0, 0, 0);
  longtail::RiskScore r = compute_ttc(s, 0, 0.0);
  CHECK(r.ttc == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(r.inv_ttc == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("receding neighbor never collides") {
  Scene s = two_agent_scene(0, 0, 0, 0, 10, 0, 3, 0);
  longtail::RiskScore r = compute_ttc(s, 0, 2.0);
  CHECK(std::isinf(r.ttc));
  CHECK(r.inv_ttc == 0.0);
}

TEST_CASE("no neighbors means infinite ttc") {
  Scene s = two_agent_scene(0, 0, 1, 0, 50, 0, 1, 0);
  s.neighbors.clear();
  CHECK(std::isinf(compute_ttc(s, 0, 2.0).ttc));
}

TEST_CASE("closed-form ttc matches the fine-grained scan oracle") {
  Rng rng(77);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const double ex = rng.uniform(-20, 20), ey = rng.uniform(-20, 20);
    const double evx = rng.uniform(-8, 8), evy = rng.uniform(-8, 8);
    const double nx = rng.uniform(-20, 20), ny = rng.uniform(-20, 20);
    double nvx = rng.uniform(-8, 8), nvy = rng.uniform(-8, 8);
    if (trial % 2 == 0) {
      // steer half the trials onto rough collision courses
      const double dist = std::hypot(ex - nx, ey - ny);
      const double speed = rng.uniform(2.0, 8.0);
      nvx = evx + speed * (ex - nx) / std::max(dist, 1e-6) + rng.uniform(-1, 1);
      nvy = evy + speed * (ey - ny) / std::max(dist, 1e-6) + rng.uniform(-1, 1);
    }
    Scene s = two_agent_scene(ex, ey, evx, evy, nx, ny, nvx, nvy);
    const double closed = compute_ttc(s, 0, 2.0).ttc;
    const double scanned =
        oracle::ttc_scan(ex, ey, evx, evy, nx, ny, nvx, nvy, 2.0);
    if (std::isinf(closed) || closed > 59.99) {
      // outside the oracle's horizon; both must agree there is no hit
      if (std::isinf(closed)) CHECK(std::isinf(scanned));
      continue;
    }
    REQUIRE(std::isfinite(scanned));
    CHECK(std::fabs(closed - scanned) <= 1e-3);
    ++checked;
  }
  CHECK(checked > 50);  // enough colliding configurations sampled
}

TEST_CASE("ttc is invariant under the agent-frame transform") {
  traj::GenConfig cfg;
  cfg.scenes = 20;
  cfg.neighbors_min = 2;
  cfg.neighbors_max = 4;
  traj::Dataset d = traj::generate_synthetic(cfg, 9);
  for (const Scene& s : d.scenes) {
    const int last = static_cast<int>(s.target.states.size()) - 1;
    const double world = compute_ttc(s, last).ttc;
    const double agent = compute_ttc(traj::to_agent_frame(s), last).ttc;
    if (std::isinf(world)) {
      CHECK(std::isinf(agent));
    } else {
      CHECK(world == doctest::Approx(agent).epsilon(1e-9));
    }
  }
}

TEST_CASE("inverse ttc ranking mirrors ttc ranking where finite") {
  Rng rng(13);
  std::vector<longtail::RiskScore> scores;
  for (int i = 0; i < 50; ++i) {
    Scene s = two_agent_scene(0, 0, rng.uniform(0, 8), 0, rng.uniform(5, 30), 0,
                              rng.uniform(-4, 4), 0);
    scores.push_back(compute_ttc(s, 0, 2.0));
  }
  for (const auto& a : scores) {
    for (const auto& b : scores) {
      if (std::isfinite(a.ttc) && std::isfinite(b.ttc) && a.ttc > 0 && b.ttc > 0) {
        CHECK((a.ttc < b.ttc) == (a.inv_ttc > b.inv_ttc));
      }
    }
  }
}

TEST_CASE("all-infinite ttc ranks by index") {
  traj::Dataset d;
  for (int i = 0; i < 100; ++i) {
    Scene s = two_agent_scene(0, 0, 1, 0, 30, 0, 2, 0);  // receding
    d.scenes.push_back(s);
  }
  d.split = traj::default_split(d.scenes.size());
  Subsets s = longtail::rank_by_risk(d, {0.01});
  CHECK(s.tiers[0] == std::vector<size_t>{0});
}

TEST_CASE("planted near-collision scenes fill the top risk tier exactly") {
  traj::Dataset d;
  for (int i = 0; i < 300; ++i) {
    // comfortably safe: neighbor far away and receding
    d.scenes.push_back(two_agent_scene(0, 0, 2, 0, 60, 40, 2, 1));
  }
  // three planted near-collisions at detectable indices
  for (size_t idx : {17u, 140u, 299u}) {
    d.scenes[idx] = two_agent_scene(0, 0, 8, 0, 12, 0, 0, 0);  // 1.25 s out
  }
  d.split = traj::default_split(d.scenes.size());
  Subsets s = longtail::rank_by_risk(d, {0.01});
  REQUIRE(s.tiers[0].size() == 3);
  std::vector<size_t> top = s.tiers[0];
  std::sort(top.begin(), top.end());
  CHECK(top == std::vector<size_t>{17, 140, 299});
}

TEST_CASE("constant-velocity straight track classifies as normal") {
  traj::AgentTrack track{traj::AgentKind::kVehicle, straight_track(8, 10.0, 0.5)};
  StateThresholds th;
  longtail::StateLabels l = longtail::classify_vehicle_state(track, 0.5, th);
  CHECK(l.normal());
}

TEST_CASE("a 3 m/s^2 burst crosses the 2 m/s^2 threshold") {
  std::vector<traj::State> st = straight_track(8, 10.0, 0.5);
  for (int t = 0; t < 8; ++t) {
    const double v = 10.0 + 3.0 * std::max(0, t - 2) * 0.5;
    st[t].vx = v;
    if (t > 0) st[t].x = st[t - 1].x + st[t - 1].vx * 0.5;
  }
  StateThresholds th;
  th.accel_long = 2.0;
  longtail::StateLabels l = longtail::classify_vehicle_state(
      traj::AgentTrack{traj::AgentKind::kVehicle, st}, 0.5, th);
  CHECK(l.rapid_accel);
}

TEST_CASE("too-short track is rejected") {
  traj::AgentTrack track{traj::AgentKind::kVehicle, straight_track(2, 5.0, 0.5)};
  CHECK_THROWS_AS(
      longtail::classify_vehicle_state(track, 0.5, StateThresholds{}),
      UsageError);
}

TEST_CASE("generated turn scenes receive the sharp-turn label") {
  traj::GenConfig cfg;
  cfg.scenes = 100;
  cfg.mix = {0, 1.0, 0, 0, 0, 0};
  cfg.t_future = 8;
  traj::Dataset d = traj::generate_synthetic(cfg, 31);
  StateThresholds th;  // defaults: yaw 0.3 rad/s
  int st_count = 0;
  for (const Scene& s : d.scenes) {
    longtail::StateLabels l = longtail::classify_vehicle_state(
        longtail::full_target_path(s), s.dt, th);
    st_count += l.sharp_turn;
  }
  CHECK(st_count >= 95);
}

TEST_CASE("generated maneuver classes trip their own labels") {
  StateThresholds th;
  struct Expect {
    int mix_index;
    const char* name;
  };
  for (const Expect& e : {Expect{4, "hard-accel"}, Expect{5, "hard-brake"},
                          Expect{3, "lane-change"}}) {
    traj::GenConfig cfg;
    cfg.scenes = 60;
    cfg.mix = {0, 0, 0, 0, 0, 0};
    cfg.mix[e.mix_index] = 1.0;
    traj::Dataset d = traj::generate_synthetic(cfg, 41);
    int hits = 0;
    for (const Scene& s : d.scenes) {
      longtail::StateLabels l = longtail::classify_vehicle_state(
          s.target, s.dt, th);  // state channels carry the maneuver
      if (e.mix_index == 4) hits += l.rapid_accel;
      if (e.mix_index == 5) hits += l.rapid_decel;
      if (e.mix_index == 3) hits += l.sharp_lane_change;
    }
    CAPTURE(e.name);
    CHECK(hits >= 54);  // >= 90% under control noise
  }
}
