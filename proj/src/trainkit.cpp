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

#include "amdtraj/trainkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>

#include "amdtraj/error.hpp"
#include "amdtraj/random.hpp"
#include "amdtraj/textio.hpp"

namespace amd::train {

double laplace_nll(const model::ModePrediction& pred,
                   const std::vector<traj::Point>& gt, int mode) {
  if (mode < 0 || mode >= pred.k_modes) throw UsageError("mode out of range");
  if (static_cast<int>(gt.size()) != pred.t_f) {
    throw UsageError("ground truth length != prediction horizon");
  }
  double total = 0.0;
  for (int t = 0; t < pred.t_f; ++t) {
    for (int axis = 0; axis < 2; ++axis) {
      const double b = pred.scale(mode, t, axis);
      const double r = std::fabs(gt[t][axis] - pred.loc(mode, t, axis));
      total += std::log(2.0 * b) + r / b;
    }
  }
  return total / (2.0 * pred.t_f);
}

int best_fde_mode(const model::ModePrediction& pred,
                  const std::vector<traj::Point>& gt) {
  int best = 0;
  double best_fde = std::numeric_limits<double>::infinity();
  for (int k = 0; k < pred.k_modes; ++k) {
    const double f = std::hypot(pred.loc(k, pred.t_f - 1, 0) - gt.back()[0],
                                pred.loc(k, pred.t_f - 1, 1) - gt.back()[1]);
    if (f < best_fde) {
      best_fde = f;
      best = k;
    }
  }
  return best;
}

int best_prob_mode(const model::ModePrediction& pred) {
  int best = 0;
  for (int k = 1; k < pred.k_modes; ++k) {
    if (pred.prob(k) > pred.prob(best)) best = k;
  }
  return best;
}

double mode_cls_loss(const model::ModePrediction& pred,
                     const std::vector<traj::Point>& gt) {
  return -std::log(pred.prob(best_fde_mode(pred, gt)));
}

double target_loss(const model::ModePrediction& pred,
                   const std::vector<traj::Point>& gt) {
  if (static_cast<int>(gt.size()) != pred.t_f) {
    throw UsageError("ground truth length != prediction horizon");
  }
  const int k = best_prob_mode(pred);
  double total = 0.0;
  for (int t = 0; t < pred.t_f; ++t) {
    const double dx = gt[t][0] - pred.loc(k, t, 0);
    const double dy = gt[t][1] - pred.loc(k, t, 1);
    total += dx * dx + dy * dy;
  }
  return total / pred.t_f;
}

TaskTotal total_loss(const LossComponents& c, const LossWeights& w) {
  for (double v : {c.l_target, c.l_reg, c.l_cls, c.l_moco, c.l_dcl}) {
    if (!std::isfinite(v)) {
      std::string which =
          !std::isfinite(c.l_target) ? "l_target"
          : !std::isfinite(c.l_reg)  ? "l_reg"
          : !std::isfinite(c.l_cls)  ? "l_cls"
          : !std::isfinite(c.l_moco) ? "l_moco"
                                     : "l_dcl";
      throw NumericError("loss component " + which + " is non-finite");
    }
    (void)v;
  }
  TaskTotal out;
  out.l_task = c.l_target + w.gamma1 * c.l_reg + w.gamma2 * c.l_cls;
  out.l_total = out.l_task + w.lambda1 * c.l_moco + w.lambda2 * c.l_dcl;
  return out;
}

TrainConfig TrainConfig::from_kv(const KvConfig& kv) {
  TrainConfig cfg;
  cfg.data_path = kv.get_str("data", cfg.data_path);
  cfg.arch = model::ModelConfig::from_kv(kv);
  cfg.policy = aug::AugmentPolicy::from_kv(kv);
  cfg.weights.gamma1 = kv.get_double("gamma1", cfg.weights.gamma1);
  cfg.weights.gamma2 = kv.get_double("gamma2", cfg.weights.gamma2);
  cfg.weights.lambda1 = kv.get_double("lambda1", cfg.weights.lambda1);
  cfg.weights.lambda2 = kv.get_double("lambda2", cfg.weights.lambda2);
  cfg.momentum.m_early = kv.get_double("m_early", cfg.momentum.m_early);
  cfg.momentum.m_mid = kv.get_double("m_mid", cfg.momentum.m_mid);
  cfg.momentum.m_late = kv.get_double("m_late", cfg.momentum.m_late);
  cfg.momentum.boundary1 = kv.get_double("stage_b1", cfg.momentum.boundary1);
  cfg.momentum.boundary2 = kv.get_double("stage_b2", cfg.momentum.boundary2);
  cfg.tau_moco = kv.get_double("tau_moco", cfg.tau_moco);
  cfg.tau_dcl = kv.get_double("tau_dcl", cfg.tau_dcl);
  cfg.alpha_dcl = kv.get_double("alpha_dcl", cfg.alpha_dcl);
  cfg.top_k = static_cast<int>(kv.get_int("top_k", cfg.top_k));
  cfg.queue_capacity =
      static_cast<int>(kv.get_int("queue_capacity", cfg.queue_capacity));
  cfg.k_clusters = static_cast<int>(kv.get_int("k_clusters", cfg.k_clusters));
  cfg.refresh_interval =
      static_cast<int>(kv.get_int("refresh_interval", cfg.refresh_interval));
  cfg.epochs = static_cast<int>(kv.get_int("epochs", cfg.epochs));
  cfg.batch_size = static_cast<int>(kv.get_int("batch_size", cfg.batch_size));
  cfg.lr = kv.get_double("lr", cfg.lr);
  cfg.seed = static_cast<uint64_t>(kv.get_int("seed", 0));
  cfg.split_mode = kv.get_str("split_mode", cfg.split_mode);
  cfg.enable_augment = kv.get_int("enable_ta", 1) != 0;
  cfg.enable_moco = kv.get_int("enable_moco", 1) != 0;
  cfg.enable_iterative_clustering = kv.get_int("enable_ic", 1) != 0;
  cfg.enable_dcl = kv.get_int("enable_dcl", 1) != 0;
  cfg.validate();
  return cfg;
}

void TrainConfig::validate() const {
  arch.validate();
  momentum.validate();
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (lr <= 0.0) throw ConfigError("lr must be positive");
  if (tau_moco <= 0.0 || tau_dcl <= 0.0) {
    throw ConfigError("temperatures must be positive");
  }
  if (alpha_dcl < 0.0 || alpha_dcl > 1.0) throw ConfigError("alpha in [0,1]");
  if (top_k < 1) throw ConfigError("top_k must be >= 1");
  if (queue_capacity < 1) throw ConfigError("queue_capacity must be >= 1");
  if (k_clusters < 1) throw ConfigError("k_clusters must be >= 1");
  if (refresh_interval < 1) throw ConfigError("refresh_interval must be >= 1");
  for (double w : {weights.gamma1, weights.gamma2, weights.lambda1,
                   weights.lambda2}) {
    if (w < 0.0 || !std::isfinite(w)) {
      throw ConfigError("loss weights must be non-negative and finite");
    }
  }
  if (split_mode != "indexed" && split_mode != "all") {
    throw ConfigError("split_mode must be 'indexed' or 'all'");
  }
}

void write_trainlog_csv(const TrainLog& log, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << "epoch,l_target,l_reg,l_cls,l_moco,l_dcl,l_task,l_total,"
        "val_min_ade,val_min_fde\n";
  for (const EpochLog& row : log.rows) {
    os << row.epoch << ',' << format_double(row.losses.l_target) << ','
       << format_double(row.losses.l_reg) << ','
       << format_double(row.losses.l_cls) << ','
       << format_double(row.losses.l_moco) << ','
       << format_double(row.losses.l_dcl) << ','
       << format_double(row.totals.l_task) << ','
       << format_double(row.totals.l_total) << ','
       << format_double(row.val_min_ade) << ','
       << format_double(row.val_min_fde) << "\n";
  }
}

namespace {

// The per-scene training graph: prediction pipeline, both contrastive
// branches behind gate inputs, and the weighted loss tail. Structure depends
// only on scene shape, store width and config, so graphs are cached and
// re-bound across steps.
struct TrainGraph {
  nd::Graph g;
  int q_unit = -1;
  bool has_lanes = false;
  int n_neighbors = 0;
};

std::shared_ptr<TrainGraph> build_train_graph(const TrainConfig& cfg, int t_len,
                                              int t_f, int n_neighbors,
                                              const model::LaneFeatures* lanes,
                                              int store_rows) {
  auto tg = std::make_shared<TrainGraph>();
  nd::Graph& g = tg->g;
  const model::ModelConfig& arch = cfg.arch;
  const int d = arch.d;
  const int K = arch.k_modes;
  tg->n_neighbors = n_neighbors;
  tg->has_lanes = lanes != nullptr && lanes->feats.shape[0] > 0;

  int f_tar = model::emit_track_encoder(g, "tar.", "target", t_len, arch);
  int q_unit = g.unit_row(f_tar);
  tg->q_unit = q_unit;
  int f_aug = model::emit_track_encoder(g, "tar.", "aug_target", t_len, arch);
  int q_pos = g.unit_row(f_aug);

  std::vector<int> blocks{f_tar};
  std::vector<int> nbr_rows;
  for (int i = 0; i < n_neighbors; ++i) {
    nbr_rows.push_back(model::emit_track_encoder(
        g, "nbr.", "nbr" + std::to_string(i), t_len, arch));
  }
  if (!nbr_rows.empty()) {
    blocks.push_back(nbr_rows.size() == 1 ? nbr_rows[0] : g.concat(nbr_rows, 0));
  }
  if (tg->has_lanes) blocks.push_back(model::emit_lane_encoder(g, *lanes, arch));
  model::FusionNodes fusion = model::emit_fusion(g, blocks, arch);
  model::DecoderNodes dec = model::emit_decoder(g, fusion.f_cross, t_f, arch);

  // Task losses: per-mode vectors selected by one-hot inputs after the
  // winner-take-all pass.
  int gt = g.input("gt", {t_f, 2});
  std::vector<int> reg_terms, tgt_terms;
  for (int k = 0; k < K; ++k) {
    int mu_k = g.slice(dec.mu, 0, k * t_f, t_f);
    int b_k = g.slice(dec.b, 0, k * t_f, t_f);
    int residual = g.abs(g.sub(gt, mu_k));
    int inv_b = g.exp(g.neg(g.log(b_k)));
    reg_terms.push_back(
        g.reduce_mean(g.add(g.log(g.scale(b_k, 2.0)), g.mul(residual, inv_b))));
    int diff = g.sub(gt, mu_k);
    tgt_terms.push_back(g.scale(g.reduce_sum(g.mul(diff, diff)), 1.0 / t_f));
  }
  int onehot_reg = g.input("onehot_reg", {1, K});
  int onehot_tgt = g.input("onehot_tgt", {1, K});
  int reg_vec = K == 1 ? reg_terms[0] : g.concat(reg_terms, 1);
  int tgt_vec = K == 1 ? tgt_terms[0] : g.concat(tgt_terms, 1);
  int l_reg = g.reduce_sum(g.mul(reg_vec, onehot_reg));
  int l_target = g.reduce_sum(g.mul(tgt_vec, onehot_tgt));
  int l_cls = g.reduce_sum(g.mul(g.neg(g.log(dec.pi)), onehot_reg));

  // Momentum contrastive branch (key side enters as constants).
  int k_pos = g.input("k_pos", {1, d});
  int negs = g.input("negs", {cfg.top_k, d});
  int neg_mask = g.input("neg_mask", {1, cfg.top_k});
  int moco_gate = g.input("moco_gate", {1, 1});
  const double inv_tau = 1.0 / cfg.tau_moco;
  int s_pos = g.dot(q_unit, k_pos);
  int s_negs = g.matmul(q_unit, negs, false, true);
  int den = g.add(g.exp(g.scale(s_pos, inv_tau)),
                  g.reduce_sum(g.mul(g.exp(g.scale(s_negs, inv_tau)), neg_mask)));
  int l_moco = g.mul(g.sub(g.log(den), g.scale(s_pos, inv_tau)), moco_gate);

  // Decoupled contrastive branch against the pseudo-label snapshot.
  int store = g.input("store", {store_rows, d});
  int p_mask = g.input("p_mask", {1, store_rows});
  int u_mask = g.input("u_mask", {1, store_rows});
  int w_pos = g.input("w_pos", {1, 1});
  int w_mem = g.input("w_mem", {1, 1});
  int inv_p1 = g.input("inv_p1", {1, 1});
  int p1_count = g.input("p1_count", {1, 1});
  int dcl_gate = g.input("dcl_gate", {1, 1});
  const double inv_tau2 = 1.0 / cfg.tau_dcl;
  int sp = g.dot(q_unit, q_pos);
  int s_store = g.matmul(q_unit, store, false, true);
  int den2 = g.add(g.exp(g.scale(sp, inv_tau2)),
                   g.reduce_sum(g.mul(g.exp(g.scale(s_store, inv_tau2)), u_mask)));
  int num = g.add(g.mul(w_pos, g.scale(sp, inv_tau2)),
                  g.mul(w_mem, g.reduce_sum(g.mul(g.scale(s_store, inv_tau2), p_mask))));
  int sum_logs = g.sub(num, g.mul(p1_count, g.log(den2)));
  int l_dcl = g.mul(g.neg(g.mul(inv_p1, sum_logs)), dcl_gate);

  int l_task = g.add(l_target, g.add(g.scale(l_reg, cfg.weights.gamma1),
                                     g.scale(l_cls, cfg.weights.gamma2)));
  int l_total = g.add(l_task, g.add(g.scale(l_moco, cfg.weights.lambda1),
                                    g.scale(l_dcl, cfg.weights.lambda2)));

  g.mark_output("q", q_unit);
  g.mark_output("mu", dec.mu);
  g.mark_output("b", dec.b);
  g.mark_output("pi", dec.pi);
  g.mark_output("l_target", l_target);
  g.mark_output("l_reg", l_reg);
  g.mark_output("l_cls", l_cls);
  g.mark_output("l_moco", l_moco);
  g.mark_output("l_dcl", l_dcl);
  g.mark_output("l_task", l_task);
  g.mark_output("l_total", l_total);
  return tg;
}

struct KeyGraph {
  nd::Graph g;
};

std::shared_ptr<KeyGraph> build_key_graph(const model::ModelConfig& arch,
                                          int t_len) {
  auto kg = std::make_shared<KeyGraph>();
  int f = model::emit_track_encoder(kg->g, "tar.", "target", t_len, arch);
  kg->g.mark_output("q", kg->g.unit_row(f));
  return kg;
}

class Trainer {
 public:
  Trainer(const TrainConfig& cfg, const traj::Dataset& dataset)
      : cfg_(cfg),
        queue_(cfg.queue_capacity),
        store_(cfg.k_clusters, cfg.refresh_interval) {
    cfg_.validate();
    if (dataset.scenes.empty()) throw UsageError("dataset is empty");
    scenes_.reserve(dataset.scenes.size());
    for (const traj::Scene& s : dataset.scenes) {
      scenes_.push_back(traj::to_agent_frame(s));
    }
    if (cfg_.split_mode == "all") {
      train_idx_.resize(scenes_.size());
      std::iota(train_idx_.begin(), train_idx_.end(), size_t{0});
      val_idx_ = train_idx_;
    } else {
      for (size_t i = 0; i < scenes_.size(); ++i) {
        if (dataset.split[i] == traj::Split::kTrain) train_idx_.push_back(i);
        if (dataset.split[i] == traj::Split::kVal) val_idx_.push_back(i);
      }
      if (train_idx_.empty()) throw UsageError("train split is empty");
      if (val_idx_.empty()) val_idx_ = train_idx_;
    }
    params_ = model::init_params(cfg_.arch, cfg_.seed);
    key_params_ = model::target_encoder_subset(params_);
  }

  TrainResult run() {
    const int64_t batches_per_epoch =
        (static_cast<int64_t>(train_idx_.size()) + cfg_.batch_size - 1) /
        cfg_.batch_size;
    const int64_t total_steps = batches_per_epoch * cfg_.epochs;
    int64_t step = 0;

    model::Predictor predictor(cfg_.arch, params_);
    TrainLog log;

    for (int epoch = 1; epoch <= cfg_.epochs; ++epoch) {
      if (epoch == 1 && cfg_.enable_dcl && !cfg_.enable_iterative_clustering) {
        frozen_label_prepass(predictor);
      }

      std::vector<size_t> order = train_idx_;
      Rng shuffle_rng(mix_seed(cfg_.seed, seed_purpose::kShuffle, epoch));
      shuffle_rng.shuffle(order);

      LossComponents sums;
      TaskTotal total_sums;
      int64_t steps_this_epoch = 0;

      for (size_t begin = 0; begin < order.size(); begin += cfg_.batch_size) {
        const size_t end = std::min(order.size(),
                                    begin + static_cast<size_t>(cfg_.batch_size));
        nd::ParamStore grad_acc;
        for (size_t pos = begin; pos < end; ++pos) {
          LossComponents c;
          TaskTotal t;
          nd::GradTape tape = scene_step(epoch, order[pos], c, t);
          for (auto& [name, gradient] : tape.grads) {
            auto it = grad_acc.find(name);
            if (it == grad_acc.end()) {
              grad_acc.emplace(name, gradient);
            } else {
              for (size_t i = 0; i < gradient.data.size(); ++i) {
                it->second.data[i] += gradient.data[i];
              }
            }
          }
          sums.l_target += c.l_target;
          sums.l_reg += c.l_reg;
          sums.l_cls += c.l_cls;
          sums.l_moco += c.l_moco;
          sums.l_dcl += c.l_dcl;
          total_sums.l_task += t.l_task;
          total_sums.l_total += t.l_total;
          ++steps_this_epoch;
        }
        // Mean-gradient SGD step, then the staged EMA update.
        const double scale = cfg_.lr / static_cast<double>(end - begin);
        for (auto& [name, gradient] : grad_acc) {
          nd::Array& p = params_.at(name);
          for (size_t i = 0; i < gradient.data.size(); ++i) {
            p.data[i] -= scale * gradient.data[i];
          }
        }
        const double m =
            cl::momentum_coefficient(step, total_steps, cfg_.momentum);
        cl::ema_update(key_params_, params_, m);
        ++step;
      }

      if (cfg_.enable_dcl && cfg_.enable_iterative_clustering &&
          static_cast<int>(store_.buffered()) >= cfg_.k_clusters &&
          epoch % cfg_.refresh_interval == 0) {
        store_.refresh(mix_seed(cfg_.seed, seed_purpose::kCluster, epoch));
      }

      EpochLog row;
      row.epoch = epoch;
      const double inv = 1.0 / static_cast<double>(steps_this_epoch);
      row.losses = {sums.l_target * inv, sums.l_reg * inv, sums.l_cls * inv,
                    sums.l_moco * inv, sums.l_dcl * inv};
      row.totals = {total_sums.l_task * inv, total_sums.l_total * inv};
      predictor.set_params(params_);
      validate_epoch(predictor, row);
      log.rows.push_back(row);
    }

    return TrainResult{params_, key_params_, std::move(log)};
  }

 private:
  void frozen_label_prepass(model::Predictor& predictor) {
    predictor.set_params(params_);
    for (size_t idx : train_idx_) {
      store_.record(idx, predictor.target_feature(scenes_[idx]).data);
    }
    store_.refresh(mix_seed(cfg_.seed, seed_purpose::kCluster, 0));
  }

  void validate_epoch(const model::Predictor& predictor, EpochLog& row) {
    const int k = std::min(5, cfg_.arch.k_modes);
    double sum_ade = 0.0, sum_fde = 0.0;
    for (size_t idx : val_idx_) {
      const traj::Scene& scene = scenes_[idx];
      model::ModePrediction pred = predictor.predict(scene);
      eval::MinMetrics mm = eval::min_over_modes(pred, scene.future, k);
      sum_ade += mm.min_ade;
      sum_fde += mm.min_fde;
    }
    row.val_min_ade = sum_ade / static_cast<double>(val_idx_.size());
    row.val_min_fde = sum_fde / static_cast<double>(val_idx_.size());
  }

  std::shared_ptr<TrainGraph> train_graph_for(const traj::Scene& scene,
                                              int store_rows) {
    model::LaneFeatures lf;
    const bool has_lanes = !scene.lanes.empty();
    if (has_lanes) lf = model::lane_features(scene.lanes);
    std::string key = "t" + std::to_string(scene.target.states.size()) + ".f" +
                      std::to_string(scene.future.size()) + ".n" +
                      std::to_string(scene.neighbors.size()) + ".l" +
                      (has_lanes ? std::to_string(lf.structure_hash) : "0") +
                      ".m" + std::to_string(store_rows);
    auto it = graph_cache_.find(key);
    if (it != graph_cache_.end()) return it->second;
    auto tg = build_train_graph(cfg_, static_cast<int>(scene.target.states.size()),
                                static_cast<int>(scene.future.size()),
                                static_cast<int>(scene.neighbors.size()),
                                has_lanes ? &lf : nullptr, store_rows);
    graph_cache_.emplace(key, tg);
    return tg;
  }

  std::shared_ptr<KeyGraph> key_graph_for(int t_len) {
    auto it = key_graph_cache_.find(t_len);
    if (it != key_graph_cache_.end()) return it->second;
    auto kg = build_key_graph(cfg_.arch, t_len);
    key_graph_cache_.emplace(t_len, kg);
    return kg;
  }

  nd::GradTape scene_step(int epoch, size_t idx, LossComponents& c,
                          TaskTotal& t) {
    try {
      return scene_step_inner(epoch, idx, c, t);
    } catch (const NumericError& e) {
      throw NumericError("epoch " + std::to_string(epoch) + ", scene " +
                         std::to_string(idx) + ": " + e.what());
    }
  }

  nd::GradTape scene_step_inner(int epoch, size_t idx, LossComponents& c,
                                TaskTotal& t) {
    const traj::Scene& scene = scenes_[idx];
    const int d = cfg_.arch.d;
    const int K = cfg_.arch.k_modes;
    const int t_f = static_cast<int>(scene.future.size());

    // Augmented view (identity when the component is off).
    std::vector<traj::State> aug_states =
        cfg_.enable_augment
            ? aug::random_augment(scene.target.states, cfg_.policy,
                                  mix_seed(cfg_.seed, seed_purpose::kAugment,
                                           epoch, idx),
                                  scene.dt)
            : scene.target.states;
    traj::AgentTrack aug_track{scene.target.kind, aug_states};

    // Momentum-encoder key for the augmented view.
    std::vector<double> k_pos(d, 0.0);
    if (cfg_.enable_moco) {
      auto kg = key_graph_for(static_cast<int>(scene.target.states.size()));
      nd::Executor kex(kg->g);
      kex.bind("target", model::track_features(aug_track));
      kex.run(key_params_);
      k_pos = kex.output("q").data;
    }

    const int store_rows =
        store_.has_labels() ? static_cast<int>(store_.snapshot().size()) : 1;
    auto tg = train_graph_for(scene, store_rows);
    nd::Executor ex(tg->g);
    ex.bind("target", model::track_features(scene.target));
    ex.bind("aug_target", model::track_features(aug_track));
    for (size_t i = 0; i < scene.neighbors.size(); ++i) {
      ex.bind("nbr" + std::to_string(i),
              model::track_features(scene.neighbors[i]));
    }
    if (tg->has_lanes) ex.bind("lanes", model::lane_features(scene.lanes).feats);
    nd::Array gt = nd::Array::zeros({t_f, 2});
    for (int step = 0; step < t_f; ++step) {
      gt.data[2 * step] = scene.future[step][0];
      gt.data[2 * step + 1] = scene.future[step][1];
    }
    ex.bind("gt", gt);
    ex.bind("k_pos", nd::Array({1, d}, k_pos));
    ex.bind("negs", nd::Array::zeros({cfg_.top_k, d}));
    ex.bind("neg_mask", nd::Array::zeros({1, cfg_.top_k}));
    const bool moco_active = cfg_.enable_moco && !queue_.empty();
    ex.bind("moco_gate", nd::Array::scalar(moco_active ? 1.0 : 0.0));
    ex.bind("onehot_reg", nd::Array::zeros({1, K}));
    ex.bind("onehot_tgt", nd::Array::zeros({1, K}));

    // Pseudo-label masks over the stored snapshot.
    nd::Array store_mat = nd::Array::zeros({store_rows, d});
    nd::Array p_mask = nd::Array::zeros({1, store_rows});
    nd::Array u_mask = nd::Array::zeros({1, store_rows});
    double w_pos = cfg_.alpha_dcl, w_mem = 0.0;
    double inv_p1 = 1.0, p1_count = 1.0;
    bool dcl_active = false;
    if (cfg_.enable_dcl && store_.has_labels()) {
      const int label = store_.label_of(idx);
      if (label >= 0) {
        const auto& snap = store_.snapshot();
        const auto& snap_samples = store_.snapshot_samples();
        int p_size = 0, u_size = 0;
        for (int j = 0; j < store_rows; ++j) {
          std::copy(snap[j].begin(), snap[j].end(),
                    store_mat.data.begin() + static_cast<int64_t>(j) * d);
          const int lj = store_.label_of(snap_samples[j]);
          if (snap_samples[j] != idx && lj == label) {
            p_mask.data[j] = 1.0;
            ++p_size;
          } else if (lj != label) {
            u_mask.data[j] = 1.0;
            ++u_size;
          }
        }
        if (p_size + u_size > 0) {
          dcl_active = true;
          w_pos = cl::dcl_weight(true, p_size, cfg_.alpha_dcl);
          w_mem = p_size > 0 ? cl::dcl_weight(false, p_size, cfg_.alpha_dcl) : 0.0;
          inv_p1 = 1.0 / (p_size + 1.0);
          p1_count = p_size + 1.0;
        } else if (!dcl_warned_) {
          std::cerr << "warning: dcl loss skipped (no positives or negatives "
                       "for sample "
                    << idx << ")\n";
          dcl_warned_ = true;
        }
      }
    }
    ex.bind("store", store_mat);
    ex.bind("p_mask", p_mask);
    ex.bind("u_mask", u_mask);
    ex.bind("w_pos", nd::Array::scalar(w_pos));
    ex.bind("w_mem", nd::Array::scalar(w_mem));
    ex.bind("inv_p1", nd::Array::scalar(inv_p1));
    ex.bind("p1_count", nd::Array::scalar(p1_count));
    ex.bind("dcl_gate", nd::Array::scalar(dcl_active ? 1.0 : 0.0));

    ex.run(params_);

    const std::vector<double> q = ex.output("q").data;

    // Hard negatives need the query value; rebind and re-run the loss tail.
    if (moco_active) {
      std::vector<int> picks = cl::topk_hard_negatives(q, queue_, cfg_.top_k);
      nd::Array negs = nd::Array::zeros({cfg_.top_k, d});
      nd::Array mask = nd::Array::zeros({1, cfg_.top_k});
      for (size_t j = 0; j < picks.size(); ++j) {
        const std::vector<double>& entry = queue_.entry(picks[j]);
        std::copy(entry.begin(), entry.end(),
                  negs.data.begin() + static_cast<int64_t>(j) * d);
        mask.data[j] = 1.0;
      }
      ex.rebind("negs", negs);
      ex.rebind("neg_mask", mask);
    }

    // Winner-take-all selections from the current forward values.
    model::ModePrediction pred = model::extract_prediction(
        ex.output("mu"), ex.output("b"), ex.output("pi"), K, t_f);
    const int k_reg = best_fde_mode(pred, scene.future);
    const int k_tgt = best_prob_mode(pred);
    nd::Array onehot_reg = nd::Array::zeros({1, K});
    nd::Array onehot_tgt = nd::Array::zeros({1, K});
    onehot_reg.data[k_reg] = 1.0;
    onehot_tgt.data[k_tgt] = 1.0;
    ex.rebind("onehot_reg", onehot_reg);
    ex.rebind("onehot_tgt", onehot_tgt);

    c.l_target = ex.output("l_target").data[0];
    c.l_reg = ex.output("l_reg").data[0];
    c.l_cls = ex.output("l_cls").data[0];
    c.l_moco = ex.output("l_moco").data[0];
    c.l_dcl = ex.output("l_dcl").data[0];
    t.l_task = ex.output("l_task").data[0];
    t.l_total = ex.output("l_total").data[0];
    total_loss(c, cfg_.weights);  // aborts on non-finite components

    nd::GradTape tape = ex.backward("l_total", nd::Array::scalar(1.0));

    if (cfg_.enable_moco) queue_.push(k_pos);
    if (cfg_.enable_dcl) store_.record(idx, q);
    return tape;
  }

  TrainConfig cfg_;
  std::vector<traj::Scene> scenes_;
  std::vector<size_t> train_idx_, val_idx_;
  nd::ParamStore params_, key_params_;
  cl::MomentumQueue queue_;
  cl::PseudoLabelStore store_;
  std::map<std::string, std::shared_ptr<TrainGraph>> graph_cache_;
  std::map<int, std::shared_ptr<KeyGraph>> key_graph_cache_;
  bool dcl_warned_ = false;
};

}  // namespace

TrainResult train(const TrainConfig& cfg, const traj::Dataset& dataset) {
  Trainer trainer(cfg, dataset);
  return trainer.run();
}

}  // namespace amd::train
