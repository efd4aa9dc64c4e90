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

#include "amdtraj/jsonl.hpp"

#include <fstream>

#include <json.hpp>

#include "amdtraj/error.hpp"

namespace amd::traj {

namespace {

// ordered_json keeps the schema's key order; serialized doubles use the
// shortest round-trip form, so identical datasets produce identical bytes.
using json = nlohmann::ordered_json;

json track_to_json(const AgentTrack& track) {
  json states = json::array();
  for (const State& s : track.states) {
    states.push_back({s.x, s.y, s.vx, s.vy, s.heading});
  }
  return json{{"kind", agent_kind_name(track.kind)}, {"states", states}};
}

AgentTrack track_from_json(const json& j, int line_no) {
  if (!j.contains("kind") || !j.contains("states")) {
    throw IoError("line " + std::to_string(line_no) +
                  ": track missing \"kind\" or \"states\"");
  }
  AgentTrack track;
  track.kind = agent_kind_from_name(j.at("kind").get<std::string>());
  for (const json& row : j.at("states")) {
    if (row.size() != 5) {
      throw IoError("line " + std::to_string(line_no) +
                    ": state row must have 5 values");
    }
    track.states.push_back(State{row[0].get<double>(), row[1].get<double>(),
                                 row[2].get<double>(), row[3].get<double>(),
                                 row[4].get<double>()});
  }
  return track;
}

json scene_to_json(const Scene& scene) {
  json j;
  j["dt"] = scene.dt;
  j["meta"] = scene.meta;
  j["target"] = track_to_json(scene.target);
  json neighbors = json::array();
  for (const AgentTrack& nbr : scene.neighbors) {
    neighbors.push_back(track_to_json(nbr));
  }
  j["neighbors"] = neighbors;
  json nodes = json::array();
  for (const Point& p : scene.lanes.nodes) nodes.push_back({p[0], p[1]});
  json adj = json::array();
  for (const auto& row : scene.lanes.adj) {
    json r = json::array();
    for (uint8_t v : row) r.push_back(static_cast<int>(v));
    adj.push_back(r);
  }
  j["lanes"] = json{{"nodes", nodes}, {"adj", adj}};
  json future = json::array();
  for (const Point& p : scene.future) future.push_back({p[0], p[1]});
  j["future"] = future;
  return j;
}

Scene scene_from_json(const json& j, int line_no) {
  for (const char* field : {"dt", "meta", "target", "neighbors", "lanes",
                            "future"}) {
    if (!j.contains(field)) {
      throw IoError("line " + std::to_string(line_no) + ": missing \"" +
                    field + "\" field");
    }
  }
  Scene scene;
  scene.dt = j.at("dt").get<double>();
  scene.meta = j.at("meta").get<std::string>();
  scene.target = track_from_json(j.at("target"), line_no);
  for (const json& nbr : j.at("neighbors")) {
    scene.neighbors.push_back(track_from_json(nbr, line_no));
  }
  const json& lanes = j.at("lanes");
  if (!lanes.contains("nodes") || !lanes.contains("adj")) {
    throw IoError("line " + std::to_string(line_no) +
                  ": lanes missing \"nodes\" or \"adj\"");
  }
  for (const json& p : lanes.at("nodes")) {
    scene.lanes.nodes.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  for (const json& row : lanes.at("adj")) {
    std::vector<uint8_t> r;
    for (const json& v : row) r.push_back(v.get<int>() ? 1 : 0);
    scene.lanes.adj.push_back(std::move(r));
  }
  try {
    scene.lanes.validate();
  } catch (const Error& e) {
    throw IoError("line " + std::to_string(line_no) + ": " + e.what());
  }
  for (const json& p : j.at("future")) {
    if (p.size() != 2) {
      throw IoError("line " + std::to_string(line_no) +
                    ": future row must have 2 values");
    }
    scene.future.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  // Track lengths must agree scene-wide.
  for (const AgentTrack& nbr : scene.neighbors) {
    if (nbr.states.size() != scene.target.states.size()) {
      throw IoError("line " + std::to_string(line_no) +
                    ": neighbor track length differs from target");
    }
  }
  if (scene.target.states.empty()) {
    throw IoError("line " + std::to_string(line_no) + ": empty target track");
  }
  return scene;
}

}  // namespace

void save_scenes(const Dataset& dataset, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  for (const Scene& scene : dataset.scenes) {
    os << scene_to_json(scene).dump() << "\n";
  }
  if (!os) throw IoError("write failed for '" + path + "'");
}

Dataset load_scenes(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  Dataset dataset;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw IoError("line " + std::to_string(line_no) + ": " + e.what());
    }
    dataset.scenes.push_back(scene_from_json(j, line_no));
  }
  dataset.split = default_split(dataset.scenes.size());
  return dataset;
}

}  // namespace amd::traj
