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
#include <deque>
#include <vector>

#include "amdtraj/array.hpp"
#include "amdtraj/graph.hpp"

namespace amd::cl {

// Momentum coefficient staged over training progress: m_e early, m_m middle,
// m_l late, with stage boundaries as fractions of the total step count.
struct MomentumSchedule {
  double m_early = 0.95;
  double m_mid = 0.99;
  double m_late = 0.999;
  double boundary1 = 1.0 / 3.0;
  double boundary2 = 2.0 / 3.0;

  void validate() const;  // m_early <= m_mid <= m_late, coefficients in (0,1)
};

double momentum_coefficient(int64_t t, int64_t total, const MomentumSchedule& sched);

// key <- m * key + (1 - m) * query, elementwise over aligned stores. Every
// key parameter must exist in the query store with the same shape.
void ema_update(nd::ParamStore& key_params, const nd::ParamStore& query_params,
                double m);

// FIFO buffer of unit-normalized key embeddings.
class MomentumQueue {
 public:
  explicit MomentumQueue(int capacity);

  void push(const std::vector<double>& key);  // evicts the oldest at capacity
  int size() const { return static_cast<int>(entries_.size()); }
  int capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  const std::vector<double>& entry(int i) const { return entries_[i]; }

 private:
  int capacity_;
  std::deque<std::vector<double>> entries_;  // front = oldest
};

// Indices of the min(k, size) queue entries most similar to the query
// (cosine of unit vectors = dot product); ties keep the older entry first.
std::vector<int> topk_hard_negatives(const std::vector<double>& query,
                                     const MomentumQueue& queue, int k);

// InfoNCE over the positive and the mined hard negatives:
// -log[exp(s+/tau) / (exp(s+/tau) + sum_i exp(s_i/tau))].
// Inputs are similarities, computed upstream from unit vectors.
double moco_dt_loss(double sim_pos, const std::vector<double>& sim_negs,
                    double tau);

struct ContrastBatch {
  std::vector<double> q;      // unit query embedding
  std::vector<double> k_pos;  // unit positive key
  double tau = 0.07;
  int top_k = 8;
};

// Convenience wrapper: mines Top-K negatives from the queue and evaluates
// the loss. Throws UsageError on an empty queue (the step skips the loss).
double moco_dt_loss(const ContrastBatch& batch, const MomentumQueue& queue);

double dot(const std::vector<double>& a, const std::vector<double>& b);
std::vector<double> unit(const std::vector<double>& v);

// --- online iterative clustering ---

struct KMeansResult {
  std::vector<int> labels;            // canonical: ordered by first member
  std::vector<std::vector<double>> centroids;
  std::vector<double> inertia_trace;  // per Lloyd iteration, non-increasing
};

// Lloyd's algorithm with seeded greedy farthest-point initialization, run to
// an assignment fixpoint or 100 iterations. Labels are relabeled so cluster
// ids appear in first-member order, making the result a pure function of
// (features, k, seed).
KMeansResult kmeans(const std::vector<std::vector<double>>& features,
                    int k_clusters, uint64_t seed);

// Feature buffer accumulated over an epoch plus the labels from the most
// recent refresh. Single-writer: the training loop owns it.
class PseudoLabelStore {
 public:
  PseudoLabelStore(int k_clusters, int refresh_interval);

  void record(size_t sample_index, const std::vector<double>& feature);
  // Clusters the buffered features, snapshots them for positive/negative
  // lookups, clears the buffer. Requires at least k_clusters features.
  void refresh(uint64_t seed);

  bool has_labels() const { return !labels_.empty(); }
  int label_of(size_t sample_index) const;  // -1 if unlabeled
  const std::vector<std::vector<double>>& snapshot() const { return snapshot_; }
  const std::vector<size_t>& snapshot_samples() const { return snapshot_samples_; }
  int k_clusters() const { return k_clusters_; }
  int refresh_interval() const { return refresh_interval_; }
  size_t buffered() const { return buffer_.size(); }

 private:
  int k_clusters_;
  int refresh_interval_;
  std::vector<std::vector<double>> buffer_;
  std::vector<size_t> buffer_samples_;
  std::vector<std::vector<double>> snapshot_;
  std::vector<size_t> snapshot_samples_;
  std::vector<int> labels_;               // aligned with snapshot_
  std::vector<int> label_by_sample_;      // -1 where unknown
};

// --- decoupled contrastive loss ---

struct DclConfig {
  double alpha = 0.5;  // in [0,1]
  double tau = 0.1;    // > 0

  void validate() const;
};

// w = alpha * (|P|+1) for the anchor positive, (1-alpha) * (|P|+1) / |P|
// for a same-cluster member.
double dcl_weight(bool is_anchor_positive, int p_size, double alpha);

// Decoupled supervised contrastive loss: weighted InfoNCE over the anchor
// positive and the same-cluster set P, with the denominator running over the
// anchor positive and the other-cluster set U.
double dcl_loss(const std::vector<double>& q, const std::vector<double>& q_pos,
                const std::vector<std::vector<double>>& p_set,
                const std::vector<std::vector<double>>& u_set,
                const DclConfig& cfg);

}  // namespace amd::cl
