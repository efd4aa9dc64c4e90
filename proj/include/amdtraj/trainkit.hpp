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

#include <string>
#include <vector>

#include "amdtraj/augment.hpp"
#include "amdtraj/config.hpp"
#include "amdtraj/contrastive.hpp"
#include "amdtraj/metrics.hpp"
#include "amdtraj/model.hpp"
#include "amdtraj/scene.hpp"

namespace amd::train {

struct LossWeights {
  double gamma1 = 1.0;   // regression loss
  double gamma2 = 0.5;   // classification loss
  double lambda1 = 1.0;  // momentum contrastive loss
  double lambda2 = 0.1;  // decoupled contrastive loss
};

struct LossComponents {
  double l_target = 0.0;
  double l_reg = 0.0;
  double l_cls = 0.0;
  double l_moco = 0.0;
  double l_dcl = 0.0;
};

struct TaskTotal {
  double l_task = 0.0;
  double l_total = 0.0;
};

// Laplace negative log-likelihood of the selected mode: mean over steps and
// coordinates of log(2b) + |gt - mu| / b.
double laplace_nll(const model::ModePrediction& pred,
                   const std::vector<traj::Point>& gt, int mode);

// -log pi of the mode with the smallest FDE to ground truth (hard target).
double mode_cls_loss(const model::ModePrediction& pred,
                     const std::vector<traj::Point>& gt);

// Mean squared displacement of the highest-probability mode.
double target_loss(const model::ModePrediction& pred,
                   const std::vector<traj::Point>& gt);

// L_task = L_target + g1 * L_reg + g2 * L_cls;
// L = L_task + l1 * L_moco + l2 * L_dcl.
TaskTotal total_loss(const LossComponents& c, const LossWeights& w);

int best_fde_mode(const model::ModePrediction& pred,
                  const std::vector<traj::Point>& gt);  // ties: lowest index
int best_prob_mode(const model::ModePrediction& pred);

struct TrainConfig {
  std::string data_path;
  model::ModelConfig arch;
  aug::AugmentPolicy policy;
  LossWeights weights;
  cl::MomentumSchedule momentum;
  double tau_moco = 0.07;
  double tau_dcl = 0.1;
  double alpha_dcl = 0.5;
  int top_k = 8;
  int queue_capacity = 1024;
  int k_clusters = 6;
  int refresh_interval = 1;
  int epochs = 500;
  int batch_size = 16;
  double lr = 1e-2;
  uint64_t seed = 0;
  // "indexed" trains on the deterministic train split, "all" on every scene.
  std::string split_mode = "indexed";
  // Component toggles for ablations. Disabling momentum contrast zeroes the
  // loss gate and skips the queue; disabling iterative clustering freezes
  // pseudo-labels after a single refresh before the first epoch.
  bool enable_augment = true;
  bool enable_moco = true;
  bool enable_iterative_clustering = true;
  bool enable_dcl = true;

  static TrainConfig from_kv(const KvConfig& kv);
  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  LossComponents losses;  // means over the epoch's steps
  TaskTotal totals;
  double val_min_ade = 0.0;
  double val_min_fde = 0.0;
};

struct TrainLog {
  std::vector<EpochLog> rows;
};

void write_trainlog_csv(const TrainLog& log, const std::string& path);

struct TrainResult {
  nd::ParamStore params;
  nd::ParamStore key_params;  // momentum encoder ("tar." subset)
  TrainLog log;
};

// Fully seeded training run. Each step encodes the original track (query)
// and its augmented view (momentum key), mines Top-K hard negatives from the
// queue, adds pseudo-label DCL against the epoch feature store, decodes the
// task losses, applies one SGD step per mini-batch and EMA-updates the key
// encoder with the staged momentum coefficient.
TrainResult train(const TrainConfig& cfg, const traj::Dataset& dataset);

}  // namespace amd::train
