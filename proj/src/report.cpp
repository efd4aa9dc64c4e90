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

#include "amdtraj/report.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "amdtraj/error.hpp"
#include "amdtraj/random.hpp"
#include "amdtraj/textio.hpp"

namespace amd::eval {

std::vector<model::ModePrediction> predict_dataset(
    model::Predictor& predictor, const traj::Dataset& dataset) {
  std::vector<traj::Scene> normalized(dataset.scenes.size());
  for (size_t i = 0; i < dataset.scenes.size(); ++i) {
    normalized[i] = traj::to_agent_frame(dataset.scenes[i]);
  }
  // The graph cache must be complete before the parallel region.
  traj::Dataset warm_set;
  warm_set.scenes = normalized;
  predictor.warm(warm_set);

  std::vector<model::ModePrediction> preds(normalized.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < static_cast<int64_t>(normalized.size()); ++i) {
    preds[i] = predictor.predict(normalized[i]);
  }
  return preds;
}

namespace {

// Ground truth in the same (agent) frame the predictions were made in.
std::vector<std::vector<traj::Point>> agent_frame_futures(
    const traj::Dataset& dataset) {
  std::vector<std::vector<traj::Point>> out(dataset.scenes.size());
  for (size_t i = 0; i < dataset.scenes.size(); ++i) {
    out[i] = traj::to_agent_frame(dataset.scenes[i]).future;
  }
  return out;
}

MetricRow subset_metrics(const std::string& name,
                         const std::vector<size_t>& members,
                         const std::vector<model::ModePrediction>& preds,
                         const std::vector<std::vector<traj::Point>>& gts,
                         int k, double mr_threshold) {
  MetricRow row;
  row.subset = name;
  row.count = members.size();
  if (members.empty()) return row;
  double sum_ade = 0.0, sum_fde = 0.0;
  size_t misses = 0;
  for (size_t i : members) {
    MinMetrics mm = min_over_modes(preds[i], gts[i], k);
    sum_ade += mm.min_ade;
    sum_fde += mm.min_fde;
    if (mm.min_fde > mr_threshold) ++misses;
  }
  row.min_ade = sum_ade / static_cast<double>(members.size());
  row.min_fde = sum_fde / static_cast<double>(members.size());
  row.miss_rate = static_cast<double>(misses) / static_cast<double>(members.size());
  return row;
}

std::string tier_name(double fraction) {
  // 0.01 -> "Top 1%", 0.015 -> "Top 1.5%"
  double pct = fraction * 100.0;
  std::string s = format_double(pct);
  return "Top " + s + "%";
}

}  // namespace

LongTailReport longtail_report(const traj::Dataset& dataset,
                               const std::vector<model::ModePrediction>& preds,
                               const longtail::SubsetSpec& spec, int k,
                               double mr_threshold) {
  if (preds.size() != dataset.scenes.size()) {
    throw UsageError("predictions misaligned with dataset (" +
                     std::to_string(preds.size()) + " vs " +
                     std::to_string(dataset.scenes.size()) + ")");
  }
  spec.validate();
  LongTailReport report;
  report.criterion = spec.criterion;
  report.k = k;
  report.horizon_s = dataset.scenes.empty()
                         ? 0.0
                         : dataset.scenes[0].dt * dataset.scenes[0].future.size();

  const std::vector<std::vector<traj::Point>> gts = agent_frame_futures(dataset);

  if (spec.criterion == longtail::Criterion::kState) {
    longtail::StateLabels none;
    std::vector<longtail::StateLabels> labels(dataset.scenes.size(), none);
    for (size_t i = 0; i < dataset.scenes.size(); ++i) {
      labels[i] = longtail::classify_vehicle_state(
          longtail::full_target_path(dataset.scenes[i]), dataset.scenes[i].dt,
          spec.thresholds);
    }
    auto members_of = [&](auto pred) {
      std::vector<size_t> members;
      for (size_t i = 0; i < labels.size(); ++i) {
        if (pred(labels[i])) members.push_back(i);
      }
      return members;
    };
    report.rows.push_back(subset_metrics(
        "RA", members_of([](const longtail::StateLabels& l) { return l.rapid_accel; }),
        preds, gts, k, mr_threshold));
    report.rows.push_back(subset_metrics(
        "RD", members_of([](const longtail::StateLabels& l) { return l.rapid_decel; }),
        preds, gts, k, mr_threshold));
    report.rows.push_back(subset_metrics(
        "SLC",
        members_of([](const longtail::StateLabels& l) { return l.sharp_lane_change; }),
        preds, gts, k, mr_threshold));
    report.rows.push_back(subset_metrics(
        "ST", members_of([](const longtail::StateLabels& l) { return l.sharp_turn; }),
        preds, gts, k, mr_threshold));
    report.rows.push_back(subset_metrics(
        "Normal", members_of([](const longtail::StateLabels& l) { return l.normal(); }),
        preds, gts, k, mr_threshold));
    std::vector<size_t> all(dataset.scenes.size());
    std::iota(all.begin(), all.end(), size_t{0});
    report.rows.push_back(subset_metrics("All", all, preds, gts, k, mr_threshold));
    return report;
  }

  longtail::Subsets subsets;
  if (spec.criterion == longtail::Criterion::kError) {
    std::vector<double> errors(preds.size());
    for (size_t i = 0; i < preds.size(); ++i) {
      errors[i] = min_over_modes(preds[i], gts[i], k).min_fde;
    }
    subsets = longtail::split_by_error(errors, spec.fractions);
  } else {
    subsets = longtail::rank_by_risk(dataset, spec.fractions);
  }
  for (size_t j = 0; j < spec.fractions.size(); ++j) {
    report.rows.push_back(subset_metrics(tier_name(spec.fractions[j]),
                                         subsets.tiers[j], preds, gts, k,
                                         mr_threshold));
  }
  report.rows.push_back(
      subset_metrics("Rest", subsets.rest, preds, gts, k, mr_threshold));
  report.rows.push_back(
      subset_metrics("All", subsets.all, preds, gts, k, mr_threshold));
  return report;
}

void write_report_csv(const LongTailReport& report, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << "criterion,horizon_s,k,subset,count,minADE,minFDE,MR\n";
  for (const MetricRow& row : report.rows) {
    os << longtail::criterion_name(report.criterion) << ','
       << format_double(report.horizon_s) << ',' << report.k << ','
       << row.subset << ',' << row.count << ',' << format_double(row.min_ade)
       << ',' << format_double(row.min_fde) << ','
       << format_double(row.miss_rate) << "\n";
  }
}

void write_metrics_csv(const traj::Dataset& dataset,
                       const std::vector<model::ModePrediction>& preds, int k,
                       double mr_threshold, const std::string& path) {
  const std::vector<std::vector<traj::Point>> gts = agent_frame_futures(dataset);
  std::vector<size_t> all(dataset.scenes.size());
  std::iota(all.begin(), all.end(), size_t{0});
  MetricRow row = subset_metrics("All", all, preds, gts, k, mr_threshold);
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << "k,count,minADE,minFDE,MR\n";
  os << k << ',' << row.count << ',' << format_double(row.min_ade) << ','
     << format_double(row.min_fde) << ',' << format_double(row.miss_rate)
     << "\n";
}

void export_features(model::Predictor& predictor,
                     const traj::Dataset& dataset, int k_clusters,
                     uint64_t seed, const std::string& path) {
  if (dataset.scenes.empty()) throw UsageError("empty dataset");
  std::vector<traj::Scene> normalized(dataset.scenes.size());
  for (size_t i = 0; i < dataset.scenes.size(); ++i) {
    normalized[i] = traj::to_agent_frame(dataset.scenes[i]);
  }
  traj::Dataset warm_set;
  warm_set.scenes = normalized;
  predictor.warm(warm_set);

  std::vector<std::vector<double>> features(normalized.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < static_cast<int64_t>(normalized.size()); ++i) {
    features[i] = predictor.target_feature(normalized[i]).data;
  }
  cl::KMeansResult km =
      cl::kmeans(features, k_clusters, mix_seed(seed, seed_purpose::kCluster, 0));

  const int d = static_cast<int>(features[0].size());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  for (int j = 0; j < d; ++j) os << "f" << j << ',';
  os << "label\n";
  for (size_t i = 0; i < features.size(); ++i) {
    for (int j = 0; j < d; ++j) os << format_double(features[i][j]) << ',';
    os << km.labels[i] << "\n";
  }
}

std::vector<AblationVariant> default_ablation_grid() {
  return {
      {"all_off", false, false, false, false},
      {"no_ta", false, true, true, true},
      {"no_moco", true, false, true, true},
      {"no_ic", true, true, false, true},
      {"no_dcl", true, true, true, false},
      {"full", true, true, true, true},
  };
}

AblationVariant ablation_variant_from_name(const std::string& name) {
  for (const AblationVariant& v : default_ablation_grid()) {
    if (v.name == name) return v;
  }
  throw ConfigError("unknown ablation variant '" + name + "'");
}

std::vector<AblationRow> run_ablation(const train::TrainConfig& base,
                                      const traj::Dataset& dataset,
                                      const std::vector<AblationVariant>& variants,
                                      const std::vector<double>& fractions) {
  std::vector<AblationRow> out;
  for (const AblationVariant& v : variants) {
    train::TrainConfig cfg = base;
    cfg.enable_augment = v.ta;
    cfg.enable_moco = v.moco;
    cfg.enable_iterative_clustering = v.ic;
    cfg.enable_dcl = v.dcl;
    if (!v.moco) cfg.weights.lambda1 = 0.0;
    if (!v.dcl) cfg.weights.lambda2 = 0.0;
    train::TrainResult result = train::train(cfg, dataset);

    model::Predictor predictor(cfg.arch, result.params);
    std::vector<model::ModePrediction> preds = predict_dataset(predictor, dataset);
    longtail::SubsetSpec spec;
    spec.criterion = longtail::Criterion::kError;
    spec.fractions = fractions;
    const int k = std::min(5, cfg.arch.k_modes);
    AblationRow row;
    row.variant = v;
    row.rows = longtail_report(dataset, preds, spec, k).rows;
    out.push_back(std::move(row));
  }
  return out;
}

void write_ablation_csv(const std::vector<AblationRow>& rows,
                        const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << "variant,ta,moco_dt,ic,dcl";
  if (!rows.empty()) {
    for (const MetricRow& r : rows[0].rows) {
      std::string tag = r.subset;
      for (char& ch : tag) {
        if (ch == ' ' || ch == '%') ch = '_';
      }
      os << ",minADE_" << tag << ",minFDE_" << tag;
    }
  }
  os << "\n";
  for (const AblationRow& row : rows) {
    os << row.variant.name << ',' << (row.variant.ta ? 1 : 0) << ','
       << (row.variant.moco ? 1 : 0) << ',' << (row.variant.ic ? 1 : 0) << ','
       << (row.variant.dcl ? 1 : 0);
    for (const MetricRow& r : row.rows) {
      os << ',' << format_double(r.min_ade) << ',' << format_double(r.min_fde);
    }
    os << "\n";
  }
}

}  // namespace amd::eval
