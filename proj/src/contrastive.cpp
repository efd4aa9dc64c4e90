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

#include "amdtraj/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "amdtraj/error.hpp"
#include "amdtraj/kernels.hpp"
#include "amdtraj/random.hpp"

namespace amd::cl {

void MomentumSchedule::validate() const {
  if (!(m_early > 0.0 && m_early < 1.0 && m_mid > 0.0 && m_mid < 1.0 &&
        m_late > 0.0 && m_late < 1.0)) {
    throw ConfigError("momentum coefficients must lie in (0,1)");
  }
  if (!(m_early <= m_mid && m_mid <= m_late)) {
    throw ConfigError("momentum coefficients must be non-decreasing");
  }
  if (!(boundary1 > 0.0 && boundary1 < boundary2 && boundary2 < 1.0)) {
    throw ConfigError("stage boundaries must satisfy 0 < b1 < b2 < 1");
  }
}

double momentum_coefficient(int64_t t, int64_t total,
                            const MomentumSchedule& sched) {
  sched.validate();
  if (total <= 0) throw UsageError("total step count must be positive");
  if (t < 0 || t > total) throw UsageError("step outside [0, total]");
  const double progress = static_cast<double>(t) / static_cast<double>(total);
  if (progress < sched.boundary1) return sched.m_early;
  if (progress < sched.boundary2) return sched.m_mid;
  return sched.m_late;
}

void ema_update(nd::ParamStore& key_params, const nd::ParamStore& query_params,
                double m) {
  for (auto& [name, key] : key_params) {
    auto it = query_params.find(name);
    if (it == query_params.end()) {
      throw ShapeError("query store is missing parameter '" + name + "'");
    }
    if (it->second.shape != key.shape) {
      throw ShapeError("parameter '" + name + "' has mismatched shapes");
    }
    for (size_t i = 0; i < key.data.size(); ++i) {
      key.data[i] = m * key.data[i] + (1.0 - m) * it->second.data[i];
    }
  }
}

MomentumQueue::MomentumQueue(int capacity) : capacity_(capacity) {
  if (capacity <= 0) throw ConfigError("queue capacity must be positive");
}

void MomentumQueue::push(const std::vector<double>& key) {
  entries_.push_back(key);
  if (static_cast<int>(entries_.size()) > capacity_) entries_.pop_front();
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ShapeError("dot: dimension mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> unit(const std::vector<double>& v) {
  const double norm = std::sqrt(dot(v, v));
  if (norm == 0.0) throw NumericError("cannot normalize a zero vector");
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
  return out;
}

std::vector<int> topk_hard_negatives(const std::vector<double>& query,
                                     const MomentumQueue& queue, int k) {
  if (queue.empty()) throw UsageError("hard-negative mining on an empty queue");
  if (k < 1) throw UsageError("top-k count must be >= 1");
  std::vector<int> order(queue.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> sims(queue.size());
  for (int i = 0; i < queue.size(); ++i) sims[i] = dot(query, queue.entry(i));
  // stable: equal similarities keep insertion (oldest-first) order
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return sims[a] > sims[b]; });
  order.resize(std::min<size_t>(order.size(), static_cast<size_t>(k)));
  return order;
}

double moco_dt_loss(double sim_pos, const std::vector<double>& sim_negs,
                    double tau) {
  if (tau <= 0.0) throw ConfigError("temperature must be positive");
  // log-sum-exp with max subtraction
  double m = sim_pos;
  for (double s : sim_negs) m = std::max(m, s);
  double denom = std::exp((sim_pos - m) / tau);
  for (double s : sim_negs) denom += std::exp((s - m) / tau);
  const double loss = -((sim_pos - m) / tau - std::log(denom));
  if (!std::isfinite(loss)) throw NumericError("contrastive loss diverged");
  return loss;
}

double moco_dt_loss(const ContrastBatch& batch, const MomentumQueue& queue) {
  std::vector<int> negs = topk_hard_negatives(batch.q, queue, batch.top_k);
  std::vector<double> sims(negs.size());
  for (size_t i = 0; i < negs.size(); ++i) {
    sims[i] = dot(batch.q, queue.entry(negs[i]));
  }
  return moco_dt_loss(dot(batch.q, batch.k_pos), sims, batch.tau);
}

KMeansResult kmeans(const std::vector<std::vector<double>>& features,
                    int k_clusters, uint64_t seed) {
  const int n = static_cast<int>(features.size());
  if (k_clusters < 1) throw ConfigError("k_clusters must be >= 1");
  if (n < k_clusters) {
    throw UsageError("fewer features (" + std::to_string(n) +
                     ") than clusters (" + std::to_string(k_clusters) + ")");
  }
  const int d = static_cast<int>(features[0].size());
  std::vector<double> points(static_cast<size_t>(n) * d);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(features[i].size()) != d) {
      throw ShapeError("feature rows have unequal widths");
    }
    std::copy(features[i].begin(), features[i].end(),
              points.begin() + static_cast<int64_t>(i) * d);
  }

  // Greedy farthest-point init: seeded first pick, then repeatedly the point
  // farthest from its nearest chosen center (ties to the lowest index).
  Rng rng(seed);
  std::vector<int> centers{static_cast<int>(rng.below(n))};
  std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
  auto update_min = [&](int c) {
    for (int i = 0; i < n; ++i) {
      double dist = 0.0;
      for (int j = 0; j < d; ++j) {
        const double diff = points[static_cast<size_t>(i) * d + j] -
                            points[static_cast<size_t>(c) * d + j];
        dist += diff * diff;
      }
      min_d[i] = std::min(min_d[i], dist);
    }
  };
  update_min(centers[0]);
  while (static_cast<int>(centers.size()) < k_clusters) {
    int far = 0;
    for (int i = 1; i < n; ++i) {
      if (min_d[i] > min_d[far]) far = i;
    }
    centers.push_back(far);
    update_min(far);
  }

  std::vector<double> centroids(static_cast<size_t>(k_clusters) * d);
  for (int c = 0; c < k_clusters; ++c) {
    std::copy(points.begin() + static_cast<int64_t>(centers[c]) * d,
              points.begin() + static_cast<int64_t>(centers[c] + 1) * d,
              centroids.begin() + static_cast<int64_t>(c) * d);
  }

  KMeansResult res;
  std::vector<int> labels(n, -1), prev(n, -2);
  for (int iter = 0; iter < 100; ++iter) {
    nd::kernels::assign_nearest(points.data(), n, d, centroids.data(),
                                k_clusters, labels.data());
    double inertia = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) {
        const double diff = points[static_cast<size_t>(i) * d + j] -
                            centroids[static_cast<size_t>(labels[i]) * d + j];
        inertia += diff * diff;
      }
    }
    res.inertia_trace.push_back(inertia);
    if (labels == prev) break;
    prev = labels;
    // Mean update; empty clusters keep their previous centroid.
    std::vector<double> sums(static_cast<size_t>(k_clusters) * d, 0.0);
    std::vector<int> counts(k_clusters, 0);
    for (int i = 0; i < n; ++i) {
      counts[labels[i]] += 1;
      for (int j = 0; j < d; ++j) {
        sums[static_cast<size_t>(labels[i]) * d + j] +=
            points[static_cast<size_t>(i) * d + j];
      }
    }
    for (int c = 0; c < k_clusters; ++c) {
      if (counts[c] == 0) continue;
      for (int j = 0; j < d; ++j) {
        centroids[static_cast<size_t>(c) * d + j] =
            sums[static_cast<size_t>(c) * d + j] / counts[c];
      }
    }
  }

  // Canonical relabeling: clusters numbered by their first member's index.
  std::vector<int> remap(k_clusters, -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    if (remap[labels[i]] < 0) remap[labels[i]] = next++;
  }
  res.labels.resize(n);
  res.centroids.assign(k_clusters, std::vector<double>(d, 0.0));
  for (int i = 0; i < n; ++i) res.labels[i] = remap[labels[i]];
  for (int c = 0; c < k_clusters; ++c) {
    const int to = remap[c] >= 0 ? remap[c] : next++;
    std::copy(centroids.begin() + static_cast<int64_t>(c) * d,
              centroids.begin() + static_cast<int64_t>(c + 1) * d,
              res.centroids[to].begin());
  }
  return res;
}

PseudoLabelStore::PseudoLabelStore(int k_clusters, int refresh_interval)
    : k_clusters_(k_clusters), refresh_interval_(refresh_interval) {
  if (k_clusters < 1) throw ConfigError("k_clusters must be >= 1");
  if (refresh_interval < 1) throw ConfigError("refresh_interval must be >= 1");
}

void PseudoLabelStore::record(size_t sample_index,
                              const std::vector<double>& feature) {
  buffer_.push_back(feature);
  buffer_samples_.push_back(sample_index);
}

void PseudoLabelStore::refresh(uint64_t seed) {
  if (static_cast<int>(buffer_.size()) < k_clusters_) {
    throw UsageError("not enough buffered features to refresh pseudo-labels");
  }
  KMeansResult km = kmeans(buffer_, k_clusters_, seed);
  snapshot_ = std::move(buffer_);
  snapshot_samples_ = std::move(buffer_samples_);
  labels_ = std::move(km.labels);
  buffer_.clear();
  buffer_samples_.clear();
  size_t max_sample = 0;
  for (size_t s : snapshot_samples_) max_sample = std::max(max_sample, s);
  label_by_sample_.assign(max_sample + 1, -1);
  for (size_t i = 0; i < snapshot_samples_.size(); ++i) {
    label_by_sample_[snapshot_samples_[i]] = labels_[i];
  }
}

int PseudoLabelStore::label_of(size_t sample_index) const {
  if (sample_index >= label_by_sample_.size()) return -1;
  return label_by_sample_[sample_index];
}

void DclConfig::validate() const {
  if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must lie in [0,1]");
  if (tau <= 0.0) throw ConfigError("temperature must be positive");
}

double dcl_weight(bool is_anchor_positive, int p_size, double alpha) {
  if (p_size < 0) throw UsageError("negative positive-set size");
  if (alpha < 0.0 || alpha > 1.0) throw ConfigError("alpha must lie in [0,1]");
  if (is_anchor_positive) return alpha * (p_size + 1);
  if (p_size == 0) {
    throw UsageError("member weight undefined for an empty positive set");
  }
  return (1.0 - alpha) * (p_size + 1) / static_cast<double>(p_size);
}

double dcl_loss(const std::vector<double>& q, const std::vector<double>& q_pos,
                const std::vector<std::vector<double>>& p_set,
                const std::vector<std::vector<double>>& u_set,
                const DclConfig& cfg) {
  cfg.validate();
  if (u_set.empty() && p_set.empty()) {
    throw UsageError("dcl loss undefined: no positives and no negatives");
  }
  const int p_size = static_cast<int>(p_set.size());

  // Shared denominator over {q+, U}.
  double m = dot(q, q_pos);
  std::vector<double> u_sims(u_set.size());
  for (size_t i = 0; i < u_set.size(); ++i) {
    u_sims[i] = dot(q, u_set[i]);
    m = std::max(m, u_sims[i]);
  }
  double denom = std::exp((dot(q, q_pos) - m) / cfg.tau);
  for (double s : u_sims) denom += std::exp((s - m) / cfg.tau);
  const double log_denom = std::log(denom) + m / cfg.tau;

  double total = dcl_weight(true, p_size, cfg.alpha) * dot(q, q_pos) / cfg.tau -
                 log_denom;
  if (p_size > 0) {
    const double w_mem = dcl_weight(false, p_size, cfg.alpha);
    for (const std::vector<double>& p : p_set) {
      total += w_mem * dot(q, p) / cfg.tau - log_denom;
    }
  }
  const double loss = -total / (p_size + 1);
  if (!std::isfinite(loss)) throw NumericError("dcl loss diverged");
  return loss;
}

}  // namespace amd::cl
