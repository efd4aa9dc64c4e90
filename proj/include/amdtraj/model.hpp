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

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "amdtraj/config.hpp"
#include "amdtraj/graph.hpp"
#include "amdtraj/scene.hpp"

namespace amd::model {

// Architecture hyperparameters. The same weights drive the standalone
// encode/fuse/decode entry points and the fused training graph.
struct ModelConfig {
  int d = 32;        // embedding width
  int heads = 4;     // attention heads; must divide d
  int k_modes = 5;   // predicted trajectory modes
  int ffn_mult = 2;  // transformer feed-forward width multiplier

  static ModelConfig from_kv(const KvConfig& kv);
  void validate() const;
};

// K candidate futures with per-step Laplace location/scale and a mode
// probability each.
struct ModePrediction {
  int k_modes = 0;
  int t_f = 0;
  nd::Array mu;  // [k_modes, t_f, 2], metres, agent frame
  nd::Array b;   // [k_modes, t_f, 2], strictly positive
  nd::Array pi;  // [1, k_modes], sums to 1

  double loc(int k, int t, int axis) const {
    return mu.data[(static_cast<size_t>(k) * t_f + t) * 2 + axis];
  }
  double scale(int k, int t, int axis) const {
    return b.data[(static_cast<size_t>(k) * t_f + t) * 2 + axis];
  }
  double prob(int k) const { return pi.data[k]; }

  // Mode indices ordered by descending probability, ties by index.
  std::vector<int> modes_by_prob() const;
  void validate() const;  // throws NumericError on violated invariants
};

// Per-step features fed to the track encoders:
// [x, y, vx, vy, heading, is_vehicle, is_pedestrian] with positions and
// velocities scaled by 0.1 and heading by 1/pi.
inline constexpr int kTrackFeatDim = 7;
nd::Array track_features(const traj::AgentTrack& track);

// Per-node lane features [x, y, dir_x, dir_y] plus the structural pieces
// the graph needs: polyline chains recovered from the adjacency matrix and
// the additive attention mask (self + undirected adjacency).
struct LaneFeatures {
  nd::Array feats;  // [N, 4]
  std::vector<std::vector<int>> chains;
  nd::Array attn_mask;  // [N, N], 0 allowed / -1e9 blocked
  uint64_t structure_hash = 0;
};
LaneFeatures lane_features(const traj::LaneGraph& lanes);

// Xavier-uniform initialization of every weight set (target/neighbor/lane
// encoders, fusion, decoder), seeded and deterministic.
nd::ParamStore init_params(const ModelConfig& cfg, uint64_t seed);

// The "tar." subset driving the momentum (key) encoder.
nd::ParamStore target_encoder_subset(const nd::ParamStore& params);

struct SceneFeatures {
  nd::Array f_tar;   // [d]
  nd::Array f_nbr;   // [n, d], n may be 0
  nd::Array f_lane;  // [N, d], N may be 0
};

// Standalone operations (each runs a small dedicated graph).
nd::Array encode_track(const traj::AgentTrack& track,
                       const nd::ParamStore& params, const ModelConfig& cfg,
                       const std::string& prefix);
nd::Array encode_target(const traj::AgentTrack& track,
                        const nd::ParamStore& params, const ModelConfig& cfg);
nd::Array encode_neighbors(const std::vector<traj::AgentTrack>& tracks,
                           const nd::ParamStore& params, const ModelConfig& cfg);
nd::Array encode_lanes(const traj::LaneGraph& lanes,
                       const nd::ParamStore& params, const ModelConfig& cfg);
nd::Array fuse(const SceneFeatures& features, const nd::ParamStore& params,
               const ModelConfig& cfg);
ModePrediction decode(const nd::Array& f_cross, const nd::ParamStore& params,
                      const ModelConfig& cfg, int t_f);

// --- graph emission (shared with the training loop) ---

// Track encoder: per-step MLP, one transformer layer with a residual back to
// the embedding, then a GRU whose final hidden state is the feature.
int emit_track_encoder(nd::Graph& g, const std::string& prefix,
                       const std::string& input_name, int t_len,
                       const ModelConfig& cfg);

// Lane encoder: node MLP, GRU along each polyline chain, one masked
// dot-product attention layer over the adjacency.
int emit_lane_encoder(nd::Graph& g, const LaneFeatures& lanes,
                      const ModelConfig& cfg);

struct FusionNodes {
  int f_cross;                 // [k_modes, d]
  std::vector<int> attn_rows;  // per-head attention probabilities
};
// Mode queries (learned rows + sinusoidal index encoding) cross-attending
// over the stacked target/neighbor/lane features.
FusionNodes emit_fusion(nd::Graph& g, const std::vector<int>& feature_blocks,
                        const ModelConfig& cfg);

struct DecoderNodes {
  int mu;  // [k_modes * t_f, 2]
  int b;   // [k_modes * t_f, 2]
  int pi;  // [1, k_modes]
};
// Per-mode GRU rollout seeded from the mode's fused feature; offsets are
// accumulated into agent-frame positions, scales pass through softplus.
// anchor (optional, [t_f, 2]) adds a per-step baseline to every mode; the
// pipelines bind a constant-velocity rollout there so the decoder learns
// residual corrections instead of absolute displacements.
DecoderNodes emit_decoder(nd::Graph& g, int f_cross, int t_f,
                          const ModelConfig& cfg, int anchor = -1);

// Constant-velocity rollout of the target's last observed state, in the
// agent frame: p_t = v_last * dt * (t + 1).
nd::Array cv_anchor(const traj::Scene& agent_frame_scene);

// Prediction graph over one scene shape (no losses).
struct PredictGraph {
  nd::Graph graph;
  int n_neighbors = 0;
  bool has_lanes = false;
  DecoderNodes dec;
  int f_tar = -1;
  int q_unit = -1;  // unit-normalized target feature
};
std::shared_ptr<const PredictGraph> build_predict_graph(
    const ModelConfig& cfg, int t_len, int t_f, int n_neighbors,
    const LaneFeatures* lanes);

// Shape signature -> cached graph. warm() must be called before concurrent
// predict() calls; the cache is read-only afterwards.
class Predictor {
 public:
  Predictor(ModelConfig cfg, nd::ParamStore params);

  const ModelConfig& config() const { return cfg_; }
  const nd::ParamStore& params() const { return params_; }
  // Swap in fresh weights while keeping the compiled graph cache.
  void set_params(nd::ParamStore params) { params_ = std::move(params); }

  // Scenes are expected in the agent frame (see traj::to_agent_frame).
  ModePrediction predict(const traj::Scene& scene) const;
  // Unit-normalized target feature, as used for export and clustering.
  nd::Array target_feature(const traj::Scene& scene) const;

  void warm(const traj::Dataset& agent_frame_scenes);

 private:
  std::shared_ptr<const PredictGraph> graph_for(const traj::Scene& scene) const;

  ModelConfig cfg_;
  nd::ParamStore params_;
  mutable std::map<std::string, std::shared_ptr<const PredictGraph>> cache_;
};

ModePrediction extract_prediction(const nd::Array& mu, const nd::Array& b,
                                  const nd::Array& pi, int k_modes, int t_f);

// Sinusoidal encoding table, rows x d.
nd::Array make_sinusoidal(int rows, int d);

}  // namespace amd::model
