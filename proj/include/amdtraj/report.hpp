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

#include <optional>
#include <string>
#include <vector>

#include "amdtraj/longtail.hpp"
#include "amdtraj/metrics.hpp"
#include "amdtraj/model.hpp"
#include "amdtraj/scene.hpp"
#include "amdtraj/trainkit.hpp"

namespace amd::eval {

struct MetricRow {
  std::string subset;
  size_t count = 0;
  double min_ade = 0.0;
  double min_fde = 0.0;
  double miss_rate = 0.0;
};

struct LongTailReport {
  longtail::Criterion criterion = longtail::Criterion::kError;
  double horizon_s = 0.0;
  int k = 5;
  std::vector<MetricRow> rows;
};

// Model predictions for every scene, in dataset order. Scenes are normalized
// to the agent frame internally; deterministic and parallel across scenes.
std::vector<model::ModePrediction> predict_dataset(
    model::Predictor& predictor, const traj::Dataset& dataset);

// Per-subset metric table. The error criterion ranks samples by their own
// minFDE_k; risk ranks by TTC at the last observed step; state groups by
// maneuver labels over history plus ground-truth future.
LongTailReport longtail_report(const traj::Dataset& dataset,
                               const std::vector<model::ModePrediction>& preds,
                               const longtail::SubsetSpec& spec, int k,
                               double mr_threshold = 2.0);

void write_report_csv(const LongTailReport& report, const std::string& path);

// Overall metrics CSV: k,count,minADE,minFDE,MR.
void write_metrics_csv(const traj::Dataset& dataset,
                       const std::vector<model::ModePrediction>& preds, int k,
                       double mr_threshold, const std::string& path);

// Unit-normalized target features plus a k-means pseudo-label per scene:
// columns f0..f{d-1},label.
void export_features(model::Predictor& predictor,
                     const traj::Dataset& dataset, int k_clusters,
                     uint64_t seed, const std::string& path);

struct AblationVariant {
  std::string name;
  bool ta = true;
  bool moco = true;
  bool ic = true;
  bool dcl = true;
};

// The component grid: all-off, single-component-off variants, and full.
std::vector<AblationVariant> default_ablation_grid();
AblationVariant ablation_variant_from_name(const std::string& name);

struct AblationRow {
  AblationVariant variant;
  // minADE/minFDE per subset: Top f1..fn, Rest, All.
  std::vector<MetricRow> rows;
};

// Trains every variant from the same seed and reports error-criterion
// subset metrics over the dataset.
std::vector<AblationRow> run_ablation(const train::TrainConfig& base,
                                      const traj::Dataset& dataset,
                                      const std::vector<AblationVariant>& variants,
                                      const std::vector<double>& fractions);

void write_ablation_csv(const std::vector<AblationRow>& rows,
                        const std::string& path);

}  // namespace amd::eval
