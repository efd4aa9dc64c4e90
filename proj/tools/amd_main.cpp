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

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "amdtraj/checkpoint.hpp"
#include "amdtraj/config.hpp"
#include "amdtraj/error.hpp"
#include "amdtraj/generate.hpp"
#include "amdtraj/jsonl.hpp"
#include "amdtraj/report.hpp"
#include "amdtraj/textio.hpp"
#include "amdtraj/trainkit.hpp"

namespace {

using namespace amd;

traj::Dataset filter_split(const traj::Dataset& dataset, const std::string& split) {
  if (split == "all") return dataset;
  traj::Split want = traj::Split::kTrain;
  if (split == "val") want = traj::Split::kVal;
  else if (split == "test") want = traj::Split::kTest;
  else if (split != "train") throw ConfigError("unknown split '" + split + "'");
  traj::Dataset out;
  for (size_t i = 0; i < dataset.scenes.size(); ++i) {
    if (dataset.split[i] == want) out.scenes.push_back(dataset.scenes[i]);
  }
  out.split.assign(out.scenes.size(), want);
  return out;
}

model::ModelConfig arch_from_config(const std::string& config_path) {
  if (config_path.empty()) return model::ModelConfig{};
  return model::ModelConfig::from_kv(KvConfig::parse_file(config_path));
}

longtail::StateThresholds thresholds_from(const std::vector<double>& values) {
  longtail::StateThresholds th;
  if (values.empty()) return th;
  if (values.size() != 4) {
    throw ConfigError("--thresholds needs accel,decel,lat_speed,yaw_rate");
  }
  th.accel_long = values[0];
  th.decel_long = values[1];
  th.lat_speed = values[2];
  th.yaw_rate = values[3];
  th.validate();
  return th;
}

int run_generate(const std::string& config_path, uint64_t seed,
                 const std::string& out) {
  traj::GenConfig cfg = traj::GenConfig::from_kv(KvConfig::parse_file(config_path));
  traj::Dataset dataset = traj::generate_synthetic(cfg, seed);
  traj::save_scenes(dataset, out);
  std::cout << "wrote " << dataset.scenes.size() << " scenes to " << out << "\n";
  return 0;
}

int run_train(const std::string& config_path, const std::string& out_dir) {
  KvConfig kv = KvConfig::parse_file(config_path);
  train::TrainConfig cfg = train::TrainConfig::from_kv(kv);
  if (cfg.data_path.empty()) throw ConfigError("config key 'data' is required");
  traj::Dataset dataset = traj::load_scenes(cfg.data_path);
  train::TrainResult result = train::train(cfg, dataset);
  std::filesystem::create_directories(out_dir);
  const std::string ckpt = out_dir + "/checkpoint.amdc";
  const std::string logf = out_dir + "/trainlog.csv";
  nd::save_checkpoint(result.params, ckpt);
  train::write_trainlog_csv(result.log, logf);
  const train::EpochLog& last = result.log.rows.back();
  std::cout << "trained " << cfg.epochs << " epochs; final l_task "
            << format_double(last.totals.l_task) << ", val minADE "
            << format_double(last.val_min_ade) << "\n"
            << "wrote " << ckpt << " and " << logf << "\n";
  return 0;
}

int run_evaluate(const std::string& ckpt, const std::string& data, int k,
                 double mr_threshold, const std::string& split,
                 const std::string& config_path, const std::string& out) {
  traj::Dataset dataset = filter_split(traj::load_scenes(data), split);
  if (dataset.scenes.empty()) throw UsageError("no scenes in selected split");
  model::Predictor predictor(arch_from_config(config_path), nd::load_checkpoint(ckpt));
  std::vector<model::ModePrediction> preds = eval::predict_dataset(predictor, dataset);
  eval::write_metrics_csv(dataset, preds, k, mr_threshold, out);
  std::cout << "wrote " << out << "\n";
  return 0;
}

int run_report(const std::string& ckpt, const std::string& data,
               const std::string& criterion, std::vector<double> fractions,
               const std::vector<double>& thresholds, int k, double mr_threshold,
               const std::string& config_path, const std::string& out) {
  traj::Dataset dataset = traj::load_scenes(data);
  longtail::SubsetSpec spec;
  spec.criterion = longtail::criterion_from_name(criterion);
  if (fractions.empty()) {
    fractions = spec.criterion == longtail::Criterion::kRisk
                    ? std::vector<double>{0.01, 0.02, 0.03}
                    : std::vector<double>{0.01, 0.02, 0.03, 0.04, 0.05};
  }
  spec.fractions = fractions;
  spec.thresholds = thresholds_from(thresholds);
  model::Predictor predictor(arch_from_config(config_path), nd::load_checkpoint(ckpt));
  std::vector<model::ModePrediction> preds = eval::predict_dataset(predictor, dataset);
  eval::LongTailReport report = eval::longtail_report(dataset, preds, spec, k,
                                                      mr_threshold);
  eval::write_report_csv(report, out);
  std::cout << "wrote " << out << "\n";
  return 0;
}

// Subset audit without (or with) a model: counts always, metrics when a
// checkpoint supplies predictions.
int run_audit(const std::string& data, const std::string& criterion,
              std::vector<double> fractions, const std::vector<double>& thresholds,
              const std::string& ckpt, int k, const std::string& config_path,
              const std::string& out) {
  traj::Dataset dataset = traj::load_scenes(data);
  longtail::SubsetSpec spec;
  spec.criterion = longtail::criterion_from_name(criterion);
  if (fractions.empty()) {
    fractions = spec.criterion == longtail::Criterion::kRisk
                    ? std::vector<double>{0.01, 0.02, 0.03}
                    : std::vector<double>{0.01, 0.02, 0.03, 0.04, 0.05};
  }
  spec.fractions = fractions;
  spec.thresholds = thresholds_from(thresholds);

  const bool have_model = !ckpt.empty();
  if (spec.criterion == longtail::Criterion::kError && !have_model) {
    throw UsageError("error criterion needs --checkpoint to score samples");
  }

  std::ofstream os(out, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + out + "' for writing");
  os << "subset,count,minADE,minFDE\n";
  if (have_model) {
    model::Predictor predictor(arch_from_config(config_path),
                               nd::load_checkpoint(ckpt));
    std::vector<model::ModePrediction> preds =
        eval::predict_dataset(predictor, dataset);
    eval::LongTailReport report = eval::longtail_report(dataset, preds, spec, k);
    for (const eval::MetricRow& row : report.rows) {
      os << row.subset << ',' << row.count << ',' << format_double(row.min_ade)
         << ',' << format_double(row.min_fde) << "\n";
    }
  } else if (spec.criterion == longtail::Criterion::kRisk) {
    longtail::Subsets subsets = longtail::rank_by_risk(dataset, spec.fractions);
    for (size_t j = 0; j < spec.fractions.size(); ++j) {
      os << "Top " << format_double(spec.fractions[j] * 100.0) << "%,"
         << subsets.tiers[j].size() << ",,\n";
    }
    os << "Rest," << subsets.rest.size() << ",,\n";
    os << "All," << subsets.all.size() << ",,\n";
  } else {
    size_t ra = 0, rd = 0, slc = 0, st = 0, normal = 0;
    for (const traj::Scene& scene : dataset.scenes) {
      longtail::StateLabels l = longtail::classify_vehicle_state(
          longtail::full_target_path(scene), scene.dt, spec.thresholds);
      ra += l.rapid_accel;
      rd += l.rapid_decel;
      slc += l.sharp_lane_change;
      st += l.sharp_turn;
      normal += l.normal();
    }
    os << "RA," << ra << ",,\n";
    os << "RD," << rd << ",,\n";
    os << "SLC," << slc << ",,\n";
    os << "ST," << st << ",,\n";
    os << "Normal," << normal << ",,\n";
    os << "All," << dataset.scenes.size() << ",,\n";
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}

int run_ablate(const std::string& config_path, const std::string& variants_csv,
               const std::string& out) {
  KvConfig kv = KvConfig::parse_file(config_path);
  train::TrainConfig cfg = train::TrainConfig::from_kv(kv);
  if (cfg.data_path.empty()) throw ConfigError("config key 'data' is required");
  traj::Dataset dataset = traj::load_scenes(cfg.data_path);

  std::vector<eval::AblationVariant> variants;
  if (variants_csv.empty()) {
    variants = eval::default_ablation_grid();
  } else {
    for (const std::string& name : split(variants_csv, ',')) {
      variants.push_back(eval::ablation_variant_from_name(trim(name)));
    }
  }
  std::vector<double> fractions =
      kv.get_list("ablate_fractions", {0.01, 0.02, 0.03, 0.04, 0.05});
  std::vector<eval::AblationRow> rows =
      eval::run_ablation(cfg, dataset, variants, fractions);
  eval::write_ablation_csv(rows, out);
  std::cout << "wrote " << out << "\n";
  return 0;
}

int run_export(const std::string& ckpt, const std::string& data, int k_clusters,
               uint64_t seed, const std::string& config_path,
               const std::string& out) {
  traj::Dataset dataset = traj::load_scenes(data);
  model::Predictor predictor(arch_from_config(config_path), nd::load_checkpoint(ckpt));
  eval::export_features(predictor, dataset, k_clusters, seed, out);
  std::cout << "wrote " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"long-tail trajectory prediction toolkit"};
  app.require_subcommand(1);

  std::string config_path, data_path, ckpt_path, out_path, criterion = "error";
  std::string split = "all", variants_csv;
  std::vector<double> fractions, thresholds;
  uint64_t seed = 0;
  int k = 5, k_clusters = 6;
  double mr_threshold = 2.0;

  auto* gen = app.add_subcommand("generate", "generate a synthetic dataset");
  gen->add_option("--config", config_path)->required();
  gen->add_option("--seed", seed)->required();
  gen->add_option("--out", out_path)->required();

  auto* tr = app.add_subcommand("train", "train a model");
  tr->add_option("--config", config_path)->required();
  tr->add_option("--out", out_path)->required();

  auto* ev = app.add_subcommand("evaluate", "overall metrics for a checkpoint");
  ev->add_option("--checkpoint", ckpt_path)->required();
  ev->add_option("--data", data_path)->required();
  ev->add_option("--k", k);
  ev->add_option("--mr-threshold", mr_threshold);
  ev->add_option("--split", split);
  ev->add_option("--config", config_path);
  ev->add_option("--out", out_path)->required();

  auto* rep = app.add_subcommand("report", "long-tail subset report");
  rep->add_option("--checkpoint", ckpt_path)->required();
  rep->add_option("--data", data_path)->required();
  rep->add_option("--criterion", criterion)->required();
  rep->add_option("--fractions", fractions)->delimiter(',');
  rep->add_option("--thresholds", thresholds)->delimiter(',');
  rep->add_option("--k", k);
  rep->add_option("--mr-threshold", mr_threshold);
  rep->add_option("--config", config_path);
  rep->add_option("--out", out_path)->required();

  auto* aud = app.add_subcommand("audit", "subset sizes (metrics if model given)");
  aud->add_option("--data", data_path)->required();
  aud->add_option("--criterion", criterion)->required();
  aud->add_option("--fractions", fractions)->delimiter(',');
  aud->add_option("--thresholds", thresholds)->delimiter(',');
  aud->add_option("--checkpoint", ckpt_path);
  aud->add_option("--k", k);
  aud->add_option("--config", config_path);
  aud->add_option("--out", out_path)->required();

  auto* abl = app.add_subcommand("ablate", "component on/off grid");
  abl->add_option("--config", config_path)->required();
  abl->add_option("--variants", variants_csv);
  abl->add_option("--out", out_path)->required();

  auto* ex = app.add_subcommand("export-features", "target features + labels CSV");
  ex->add_option("--checkpoint", ckpt_path)->required();
  ex->add_option("--data", data_path)->required();
  ex->add_option("--k-clusters", k_clusters);
  ex->add_option("--seed", seed);
  ex->add_option("--config", config_path);
  ex->add_option("--out", out_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return run_generate(config_path, seed, out_path);
    if (tr->parsed()) return run_train(config_path, out_path);
    if (ev->parsed()) {
      return run_evaluate(ckpt_path, data_path, k, mr_threshold, split,
                          config_path, out_path);
    }
    if (rep->parsed()) {
      return run_report(ckpt_path, data_path, criterion, fractions, thresholds,
                        k, mr_threshold, config_path, out_path);
    }
    if (aud->parsed()) {
      return run_audit(data_path, criterion, fractions, thresholds, ckpt_path,
                       k, config_path, out_path);
    }
    if (abl->parsed()) return run_ablate(config_path, variants_csv, out_path);
    if (ex->parsed()) {
      return run_export(ckpt_path, data_path, k_clusters, seed, config_path,
                        out_path);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
