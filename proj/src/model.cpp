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

#include "amdtraj/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "amdtraj/error.hpp"
#include "amdtraj/random.hpp"

namespace amd::model {

namespace {

constexpr double kPosScale = 0.1;   // metres -> feature units
constexpr double kScaleFloor = 1e-6;

int emit_bias_add(nd::Graph& g, int x, int bias, int rows) {
  if (rows == 1) return g.add(x, bias);
  int ones = g.constant(nd::Array::full({rows, 1}, 1.0));
  return g.add(x, g.matmul(ones, bias));
}

int emit_linear(nd::Graph& g, int x, const std::string& w_name,
                const std::string& b_name, int in_dim, int out_dim, int rows) {
  int y = g.matmul(x, g.parameter(w_name, {in_dim, out_dim}));
  if (!b_name.empty()) {
    y = emit_bias_add(g, y, g.parameter(b_name, {1, out_dim}), rows);
  }
  return y;
}

int emit_mlp(nd::Graph& g, const std::string& p, int x, int in_dim, int rows,
             const ModelConfig& cfg) {
  int h = g.relu(emit_linear(g, x, p + "mlp.w1", p + "mlp.b1", in_dim, cfg.d, rows));
  return emit_linear(g, h, p + "mlp.w2", p + "mlp.b2", cfg.d, cfg.d, rows);
}

int emit_mha(nd::Graph& g, const std::string& p, int q_in, int kv_in,
             int kv_rows, const ModelConfig& cfg, std::vector<int>* attn_out) {
  const int d = cfg.d;
  const int dh = d / cfg.heads;
  int q = g.matmul(q_in, g.parameter(p + "wq", {d, d}));
  int k = g.matmul(kv_in, g.parameter(p + "wk", {d, d}));
  int v = g.matmul(kv_in, g.parameter(p + "wv", {d, d}));
  (void)kv_rows;
  std::vector<int> heads;
  for (int h = 0; h < cfg.heads; ++h) {
    int qh = g.slice(q, 1, h * dh, dh);
    int kh = g.slice(k, 1, h * dh, dh);
    int vh = g.slice(v, 1, h * dh, dh);
    int scores = g.scale(g.matmul(qh, kh, false, true), 1.0 / std::sqrt(dh));
    int attn = g.softmax(scores);
    if (attn_out) attn_out->push_back(attn);
    heads.push_back(g.matmul(attn, vh));
  }
  int merged = heads.size() == 1 ? heads[0] : g.concat(heads, 1);
  return g.matmul(merged, g.parameter(p + "wo", {d, d}));
}

int emit_transformer(nd::Graph& g, const std::string& p, int x, int t_len,
                     const ModelConfig& cfg) {
  int xi = g.add(x, g.constant(make_sinusoidal(t_len, cfg.d)));
  int att = emit_mha(g, p + "att.", xi, xi, t_len, cfg, nullptr);
  int r1 = g.layer_norm(g.add(xi, att), g.parameter(p + "ln1.g", {1, cfg.d}),
                        g.parameter(p + "ln1.b", {1, cfg.d}));
  const int f = cfg.d * cfg.ffn_mult;
  int hid = g.relu(emit_linear(g, r1, p + "ffn.w1", p + "ffn.b1", cfg.d, f, t_len));
  int ffn = emit_linear(g, hid, p + "ffn.w2", p + "ffn.b2", f, cfg.d, t_len);
  return g.layer_norm(g.add(r1, ffn), g.parameter(p + "ln2.g", {1, cfg.d}),
                      g.parameter(p + "ln2.b", {1, cfg.d}));
}

struct GruProj {
  int xr, xz, xn;  // [T, d] batched input projections
};

GruProj emit_gru_proj(nd::Graph& g, const std::string& p, int x, int in_dim,
                      int t_len, const ModelConfig& cfg) {
  return GruProj{
      emit_linear(g, x, p + "gru.wr", p + "gru.br", in_dim, cfg.d, t_len),
      emit_linear(g, x, p + "gru.wz", p + "gru.bz", in_dim, cfg.d, t_len),
      emit_linear(g, x, p + "gru.wn", p + "gru.bn", in_dim, cfg.d, t_len)};
}

// h' = (1 - z) * n + z * h on [1, d] rows.
int emit_gru_cell(nd::Graph& g, const std::string& p, int xr, int xz, int xn,
                  int h, const ModelConfig& cfg) {
  const int d = cfg.d;
  int ur = g.parameter(p + "gru.ur", {d, d});
  int uz = g.parameter(p + "gru.uz", {d, d});
  int un = g.parameter(p + "gru.un", {d, d});
  int r = g.sigmoid(g.add(xr, g.matmul(h, ur)));
  int z = g.sigmoid(g.add(xz, g.matmul(h, uz)));
  int n = g.tanh(g.add(xn, g.mul(r, g.matmul(h, un))));
  int ones = g.constant(nd::Array::full({1, d}, 1.0));
  return g.add(g.mul(g.sub(ones, z), n), g.mul(z, h));
}

std::vector<int> emit_gru_steps(nd::Graph& g, const std::string& p,
                                const GruProj& proj, int t_len, int h0,
                                const ModelConfig& cfg) {
  int h = h0 >= 0 ? h0 : g.constant(nd::Array::zeros({1, cfg.d}));
  std::vector<int> hs;
  hs.reserve(t_len);
  for (int t = 0; t < t_len; ++t) {
    h = emit_gru_cell(g, p, g.slice(proj.xr, 0, t, 1), g.slice(proj.xz, 0, t, 1),
                      g.slice(proj.xn, 0, t, 1), h, cfg);
    hs.push_back(h);
  }
  return hs;
}

}  // namespace

ModelConfig ModelConfig::from_kv(const KvConfig& kv) {
  ModelConfig cfg;
  cfg.d = static_cast<int>(kv.get_int("d_model", cfg.d));
  cfg.heads = static_cast<int>(kv.get_int("heads", cfg.heads));
  cfg.k_modes = static_cast<int>(kv.get_int("k_modes", cfg.k_modes));
  cfg.ffn_mult = static_cast<int>(kv.get_int("ffn_mult", cfg.ffn_mult));
  cfg.validate();
  return cfg;
}

void ModelConfig::validate() const {
  if (d <= 0 || heads <= 0 || k_modes <= 0 || ffn_mult <= 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (d % heads != 0) throw ConfigError("heads must divide d_model");
}

std::vector<int> ModePrediction::modes_by_prob() const {
  std::vector<int> order(k_modes);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return pi.data[a] > pi.data[b]; });
  return order;
}

void ModePrediction::validate() const {
  double total = 0.0;
  for (int k = 0; k < k_modes; ++k) {
    const double p = pi.data[k];
    if (!(p >= 0.0)) throw NumericError("mode probability is negative");
    total += p;
  }
  if (std::fabs(total - 1.0) > 1e-9) {
    throw NumericError("mode probabilities sum to " + std::to_string(total));
  }
  for (double v : b.data) {
    if (!(v > 0.0)) throw NumericError("Laplace scale is not positive");
  }
}

nd::Array make_sinusoidal(int rows, int d) {
  nd::Array enc = nd::Array::zeros({rows, d});
  for (int r = 0; r < rows; ++r) {
    for (int j = 0; j < d; ++j) {
      const double rate = std::pow(10000.0, -2.0 * (j / 2) / d);
      enc.data[static_cast<size_t>(r) * d + j] =
          (j % 2 == 0) ? std::sin(r * rate) : std::cos(r * rate);
    }
  }
  return enc;
}

nd::Array track_features(const traj::AgentTrack& track) {
  const int t_len = static_cast<int>(track.states.size());
  nd::Array f = nd::Array::zeros({t_len, kTrackFeatDim});
  for (int t = 0; t < t_len; ++t) {
    const traj::State& s = track.states[t];
    double* row = f.data.data() + static_cast<size_t>(t) * kTrackFeatDim;
    row[0] = s.x * kPosScale;
    row[1] = s.y * kPosScale;
    row[2] = s.vx * kPosScale;
    row[3] = s.vy * kPosScale;
    row[4] = s.heading / M_PI;
    row[5] = track.kind == traj::AgentKind::kVehicle ? 1.0 : 0.0;
    row[6] = track.kind == traj::AgentKind::kPedestrian ? 1.0 : 0.0;
  }
  return f;
}

LaneFeatures lane_features(const traj::LaneGraph& lanes) {
  lanes.validate();
  const int n = static_cast<int>(lanes.nodes.size());
  LaneFeatures out;
  out.feats = nd::Array::zeros({n, 4});
  if (n == 0) return out;

  // Successor direction per node; nodes without a successor reuse their
  // predecessor's direction.
  for (int i = 0; i < n; ++i) {
    int succ = -1;
    for (int j = 0; j < n; ++j) {
      if (lanes.adj[i][j]) {
        succ = j;
        break;
      }
    }
    int from = i, to = succ;
    if (succ < 0) {
      for (int j = 0; j < n; ++j) {
        if (lanes.adj[j][i]) {
          from = j;
          to = i;
          break;
        }
      }
    }
    double dx = 0.0, dy = 0.0;
    if (to >= 0 && to != from) {
      dx = lanes.nodes[to][0] - lanes.nodes[from][0];
      dy = lanes.nodes[to][1] - lanes.nodes[from][1];
      const double len = std::hypot(dx, dy);
      if (len > 1e-9) {
        dx /= len;
        dy /= len;
      }
    }
    double* row = out.feats.data.data() + static_cast<size_t>(i) * 4;
    row[0] = lanes.nodes[i][0] * kPosScale;
    row[1] = lanes.nodes[i][1] * kPosScale;
    row[2] = dx;
    row[3] = dy;
  }

  // Maximal chains: walk successors from every in-degree-0 node, then sweep
  // leftovers (cycles) in index order.
  std::vector<int> in_degree(n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (lanes.adj[i][j]) in_degree[j] += 1;
    }
  }
  std::vector<char> visited(n, 0);
  auto walk = [&](int start) {
    std::vector<int> chain;
    int cur = start;
    while (cur >= 0 && !visited[cur]) {
      visited[cur] = 1;
      chain.push_back(cur);
      int next = -1;
      for (int j = 0; j < n; ++j) {
        if (lanes.adj[cur][j] && !visited[j]) {
          next = j;
          break;
        }
      }
      cur = next;
    }
    return chain;
  };
  for (int i = 0; i < n; ++i) {
    if (in_degree[i] == 0 && !visited[i]) out.chains.push_back(walk(i));
  }
  for (int i = 0; i < n; ++i) {
    if (!visited[i]) out.chains.push_back(walk(i));
  }

  out.attn_mask = nd::Array::zeros({n, n});
  uint64_t hash = 1469598103934665603ULL;
  auto mix = [&hash](uint64_t v) {
    hash ^= v;
    hash *= 1099511628211ULL;
  };
  mix(static_cast<uint64_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const bool allowed = i == j || lanes.adj[i][j] || lanes.adj[j][i];
      out.attn_mask.data[static_cast<size_t>(i) * n + j] = allowed ? 0.0 : -1e9;
      mix(lanes.adj[i][j]);
    }
  }
  out.structure_hash = hash;
  return out;
}

int emit_track_encoder(nd::Graph& g, const std::string& prefix,
                       const std::string& input_name, int t_len,
                       const ModelConfig& cfg) {
  int x = g.input(input_name, {t_len, kTrackFeatDim});
  int emb = emit_mlp(g, prefix, x, kTrackFeatDim, t_len, cfg);
  int tr = emit_transformer(g, prefix, emb, t_len, cfg);
  int res = g.add(tr, emb);  // residual of transformer output with embedding
  GruProj proj = emit_gru_proj(g, prefix, res, cfg.d, t_len, cfg);
  return emit_gru_steps(g, prefix, proj, t_len, -1, cfg).back();
}

int emit_lane_encoder(nd::Graph& g, const LaneFeatures& lanes,
                      const ModelConfig& cfg) {
  const int n = lanes.feats.shape[0];
  const std::string p = "lane.";
  int x = g.input("lanes", {n, 4});
  int emb = emit_mlp(g, p, x, 4, n, cfg);

  GruProj proj = emit_gru_proj(g, p, emb, cfg.d, n, cfg);
  std::vector<int> node_h(n, -1);
  for (const std::vector<int>& chain : lanes.chains) {
    int h = g.constant(nd::Array::zeros({1, cfg.d}));
    for (int idx : chain) {
      h = emit_gru_cell(g, p, g.slice(proj.xr, 0, idx, 1),
                        g.slice(proj.xz, 0, idx, 1),
                        g.slice(proj.xn, 0, idx, 1), h, cfg);
      node_h[idx] = h;
    }
  }
  int stacked = n == 1 ? node_h[0] : g.concat(node_h, 0);

  // One masked dot-product attention layer over the adjacency.
  const int d = cfg.d;
  int q = g.matmul(stacked, g.parameter(p + "gat.wq", {d, d}));
  int k = g.matmul(stacked, g.parameter(p + "gat.wk", {d, d}));
  int v = g.matmul(stacked, g.parameter(p + "gat.wv", {d, d}));
  int scores = g.add(g.scale(g.matmul(q, k, false, true), 1.0 / std::sqrt(d)),
                     g.constant(lanes.attn_mask));
  int attn = g.softmax(scores);
  return g.matmul(g.matmul(attn, v), g.parameter(p + "gat.wo", {d, d}));
}

FusionNodes emit_fusion(nd::Graph& g, const std::vector<int>& feature_blocks,
                        const ModelConfig& cfg) {
  if (feature_blocks.empty()) throw UsageError("fusion needs features");
  int ctx = feature_blocks.size() == 1 ? feature_blocks[0]
                                       : g.concat(feature_blocks, 0);
  int kv_rows = 0;
  for (int blk : feature_blocks) kv_rows += g.node(blk).shape[0];
  int hmode = g.parameter("fuse.hmode", {cfg.k_modes, cfg.d});
  int qin = g.add(hmode, g.constant(make_sinusoidal(cfg.k_modes, cfg.d)));
  FusionNodes out;
  out.f_cross = emit_mha(g, "fuse.", qin, ctx, kv_rows, cfg, &out.attn_rows);
  return out;
}

DecoderNodes emit_decoder(nd::Graph& g, int f_cross, int t_f,
                          const ModelConfig& cfg) {
  const int d = cfg.d;
  const std::string p = "dec.";
  int time_enc = g.constant(make_sinusoidal(t_f, d));
  GruProj proj = emit_gru_proj(g, p, time_enc, d, t_f, cfg);

  std::vector<int> mode_mu, mode_b, pi_logits;
  for (int k = 0; k < cfg.k_modes; ++k) {
    int h0 = g.slice(f_cross, 0, k, 1);
    std::vector<int> hs = emit_gru_steps(g, p, proj, t_f, h0, cfg);
    std::vector<int> pos_steps, b_steps;
    int pos = -1;
    for (int t = 0; t < t_f; ++t) {
      int off = emit_linear(g, hs[t], p + "loc.w", p + "loc.b", d, 2, 1);
      pos = pos < 0 ? off : g.add(pos, off);  // accumulate offsets
      pos_steps.push_back(pos);
      int raw = emit_linear(g, hs[t], p + "scale.w", p + "scale.b", d, 2, 1);
      b_steps.push_back(g.add_scalar(g.softplus(raw), kScaleFloor));
    }
    mode_mu.push_back(t_f == 1 ? pos_steps[0] : g.concat(pos_steps, 0));
    mode_b.push_back(t_f == 1 ? b_steps[0] : g.concat(b_steps, 0));
    pi_logits.push_back(
        emit_linear(g, h0, p + "pi.w", p + "pi.b", d, 1, 1));
  }
  DecoderNodes out;
  out.mu = cfg.k_modes == 1 ? mode_mu[0] : g.concat(mode_mu, 0);
  out.b = cfg.k_modes == 1 ? mode_b[0] : g.concat(mode_b, 0);
  out.pi = g.softmax(cfg.k_modes == 1 ? pi_logits[0] : g.concat(pi_logits, 1));
  return out;
}

nd::ParamStore init_params(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  // Emit a graph covering every weight set to discover parameter shapes.
  nd::Graph g;
  int f_tar = emit_track_encoder(g, "tar.", "target", 3, cfg);
  int f_nbr = emit_track_encoder(g, "nbr.", "nbr0", 3, cfg);
  traj::LaneGraph two_nodes;
  two_nodes.nodes = {{0.0, 0.0}, {1.0, 0.0}};
  two_nodes.adj = {{0, 1}, {0, 0}};
  LaneFeatures lf = lane_features(two_nodes);
  int f_lane = emit_lane_encoder(g, lf, cfg);
  FusionNodes fusion = emit_fusion(g, {f_tar, f_nbr, f_lane}, cfg);
  emit_decoder(g, fusion.f_cross, 2, cfg);

  Rng rng(mix_seed(seed, seed_purpose::kInit));
  nd::ParamStore store;
  for (const auto& [name, pid] : g.parameters()) {
    const nd::Shape& shape = g.node(pid).shape;
    nd::Array value = nd::Array::zeros(shape);
    const bool is_ln_gain = name.size() > 2 && name.substr(name.size() - 2) == ".g" &&
                            name.find("ln") != std::string::npos;
    if (is_ln_gain) {
      value = nd::Array::full(shape, 1.0);
    } else if (shape[0] > 1 || name == "fuse.hmode") {
      const double limit = std::sqrt(6.0 / (shape[0] + shape[1]));
      for (double& v : value.data) v = rng.uniform(-limit, limit);
    }  // remaining [1, x] arrays are biases, left at zero
    store.emplace(name, std::move(value));
  }
  return store;
}

nd::ParamStore target_encoder_subset(const nd::ParamStore& params) {
  nd::ParamStore out;
  for (const auto& [name, value] : params) {
    if (name.rfind("tar.", 0) == 0) out.emplace(name, value);
  }
  return out;
}

namespace {

nd::Array flatten_row(const nd::Array& row) {
  return nd::Array({row.cols()}, row.data);
}

}  // namespace

nd::Array encode_track(const traj::AgentTrack& track,
                       const nd::ParamStore& params, const ModelConfig& cfg,
                       const std::string& prefix) {
  if (track.states.empty()) throw UsageError("cannot encode an empty track");
  nd::Graph g;
  int f = emit_track_encoder(g, prefix, "track",
                             static_cast<int>(track.states.size()), cfg);
  g.mark_output("f", f);
  nd::Executor ex(g);
  ex.bind("track", track_features(track));
  ex.run(params);
  return flatten_row(ex.output("f"));
}

nd::Array encode_target(const traj::AgentTrack& track,
                        const nd::ParamStore& params, const ModelConfig& cfg) {
  return encode_track(track, params, cfg, "tar.");
}

nd::Array encode_neighbors(const std::vector<traj::AgentTrack>& tracks,
                           const nd::ParamStore& params, const ModelConfig& cfg) {
  nd::Array out = nd::Array::zeros({static_cast<int>(tracks.size()), cfg.d});
  for (size_t i = 0; i < tracks.size(); ++i) {
    nd::Array row = encode_track(tracks[i], params, cfg, "nbr.");
    std::copy(row.data.begin(), row.data.end(),
              out.data.begin() + static_cast<int64_t>(i) * cfg.d);
  }
  return out;
}

nd::Array encode_lanes(const traj::LaneGraph& lanes,
                       const nd::ParamStore& params, const ModelConfig& cfg) {
  if (lanes.empty()) return nd::Array::zeros({0, cfg.d});
  LaneFeatures lf = lane_features(lanes);
  nd::Graph g;
  int f = emit_lane_encoder(g, lf, cfg);
  g.mark_output("f", f);
  nd::Executor ex(g);
  ex.bind("lanes", lf.feats);
  ex.run(params);
  return ex.output("f");
}

nd::Array fuse(const SceneFeatures& features, const nd::ParamStore& params,
               const ModelConfig& cfg) {
  if (static_cast<int>(features.f_tar.data.size()) != cfg.d) {
    throw ShapeError("f_tar must have d elements");
  }
  if (!features.f_nbr.data.empty() && features.f_nbr.cols() != cfg.d) {
    throw ShapeError("f_nbr feature width != d");
  }
  if (!features.f_lane.data.empty() && features.f_lane.cols() != cfg.d) {
    throw ShapeError("f_lane feature width != d");
  }
  nd::Graph g;
  std::vector<int> blocks;
  blocks.push_back(g.input("f_tar", {1, cfg.d}));
  if (!features.f_nbr.data.empty()) {
    blocks.push_back(g.input("f_nbr", {features.f_nbr.rows(), cfg.d}));
  }
  if (!features.f_lane.data.empty()) {
    blocks.push_back(g.input("f_lane", {features.f_lane.rows(), cfg.d}));
  }
  FusionNodes fusion = emit_fusion(g, blocks, cfg);
  g.mark_output("f_cross", fusion.f_cross);
  nd::Executor ex(g);
  ex.bind("f_tar", nd::Array({1, cfg.d}, features.f_tar.data));
  if (!features.f_nbr.data.empty()) ex.bind("f_nbr", features.f_nbr);
  if (!features.f_lane.data.empty()) ex.bind("f_lane", features.f_lane);
  ex.run(params);
  return ex.output("f_cross");
}

ModePrediction decode(const nd::Array& f_cross, const nd::ParamStore& params,
                      const ModelConfig& cfg, int t_f) {
  if (f_cross.rows() != cfg.k_modes || f_cross.cols() != cfg.d) {
    throw ShapeError("f_cross must be [k_modes, d]");
  }
  if (t_f < 1) throw UsageError("t_f must be positive");
  nd::Graph g;
  int x = g.input("f_cross", {cfg.k_modes, cfg.d});
  DecoderNodes dec = emit_decoder(g, x, t_f, cfg);
  g.mark_output("mu", dec.mu);
  g.mark_output("b", dec.b);
  g.mark_output("pi", dec.pi);
  nd::Executor ex(g);
  ex.bind("f_cross", f_cross);
  ex.run(params);
  return extract_prediction(ex.output("mu"), ex.output("b"), ex.output("pi"),
                            cfg.k_modes, t_f);
}

ModePrediction extract_prediction(const nd::Array& mu, const nd::Array& b,
                                  const nd::Array& pi, int k_modes, int t_f) {
  ModePrediction pred;
  pred.k_modes = k_modes;
  pred.t_f = t_f;
  pred.mu = nd::Array({k_modes, t_f, 2}, mu.data);
  pred.b = nd::Array({k_modes, t_f, 2}, b.data);
  pred.pi = pi;
  pred.validate();
  return pred;
}

std::shared_ptr<const PredictGraph> build_predict_graph(
    const ModelConfig& cfg, int t_len, int t_f, int n_neighbors,
    const LaneFeatures* lanes) {
  auto pg = std::make_shared<PredictGraph>();
  pg->n_neighbors = n_neighbors;
  pg->has_lanes = lanes != nullptr && lanes->feats.shape[0] > 0;
  nd::Graph& g = pg->graph;

  int f_tar = emit_track_encoder(g, "tar.", "target", t_len, cfg);
  pg->f_tar = f_tar;
  pg->q_unit = g.unit_row(f_tar);
  std::vector<int> blocks{f_tar};
  std::vector<int> nbr_rows;
  for (int i = 0; i < n_neighbors; ++i) {
    nbr_rows.push_back(
        emit_track_encoder(g, "nbr.", "nbr" + std::to_string(i), t_len, cfg));
  }
  if (!nbr_rows.empty()) {
    blocks.push_back(nbr_rows.size() == 1 ? nbr_rows[0] : g.concat(nbr_rows, 0));
  }
  if (pg->has_lanes) blocks.push_back(emit_lane_encoder(g, *lanes, cfg));

  FusionNodes fusion = emit_fusion(g, blocks, cfg);
  pg->dec = emit_decoder(g, fusion.f_cross, t_f, cfg);
  g.mark_output("mu", pg->dec.mu);
  g.mark_output("b", pg->dec.b);
  g.mark_output("pi", pg->dec.pi);
  g.mark_output("q", pg->q_unit);
  return pg;
}

Predictor::Predictor(ModelConfig cfg, nd::ParamStore params)
    : cfg_(std::move(cfg)), params_(std::move(params)) {}

std::shared_ptr<const PredictGraph> Predictor::graph_for(
    const traj::Scene& scene) const {
  LaneFeatures lf;
  const bool has_lanes = !scene.lanes.empty();
  if (has_lanes) lf = lane_features(scene.lanes);
  std::string key = "t" + std::to_string(scene.target.states.size()) + ".f" +
                    std::to_string(scene.future.size()) + ".n" +
                    std::to_string(scene.neighbors.size()) + ".l" +
                    (has_lanes ? std::to_string(lf.structure_hash) : "0");
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  auto pg = build_predict_graph(cfg_, static_cast<int>(scene.target.states.size()),
                                static_cast<int>(scene.future.size()),
                                static_cast<int>(scene.neighbors.size()),
                                has_lanes ? &lf : nullptr);
  cache_.emplace(key, pg);
  return pg;
}

void Predictor::warm(const traj::Dataset& agent_frame_scenes) {
  for (const traj::Scene& scene : agent_frame_scenes.scenes) graph_for(scene);
}

namespace {

void bind_scene(nd::Executor& ex, const traj::Scene& scene, bool has_lanes) {
  ex.bind("target", track_features(scene.target));
  for (size_t i = 0; i < scene.neighbors.size(); ++i) {
    ex.bind("nbr" + std::to_string(i), track_features(scene.neighbors[i]));
  }
  if (has_lanes) ex.bind("lanes", lane_features(scene.lanes).feats);
}

}  // namespace

ModePrediction Predictor::predict(const traj::Scene& scene) const {
  auto pg = graph_for(scene);
  nd::Executor ex(pg->graph);
  bind_scene(ex, scene, pg->has_lanes);
  ex.run(params_);
  return extract_prediction(ex.output("mu"), ex.output("b"), ex.output("pi"),
                            cfg_.k_modes, static_cast<int>(scene.future.size()));
}

nd::Array Predictor::target_feature(const traj::Scene& scene) const {
  auto pg = graph_for(scene);
  nd::Executor ex(pg->graph);
  bind_scene(ex, scene, pg->has_lanes);
  ex.run(params_);
  return flatten_row(ex.output("q"));
}

}  // namespace amd::model
