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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "amdtraj/error.hpp"
#include "amdtraj/generate.hpp"
#include "amdtraj/random.hpp"
#include "amdtraj/textio.hpp"
#include "amdtraj/trainkit.hpp"

using namespace amd;
using model::ModePrediction;
using train::TrainConfig;

namespace {

ModePrediction make_pred(int k_modes, int t_f, const std::vector<double>& mu,
                         const std::vector<double>& b,
                         const std::vector<double>& pi) {
  ModePrediction p;
  p.k_modes = k_modes;
  p.t_f = t_f;
  p.mu = nd::Array({k_modes, t_f, 2}, mu);
  p.b = nd::Array({k_modes, t_f, 2}, b);
  p.pi = nd::Array({1, k_modes}, pi);
  return p;
}

TrainConfig fast_config(uint64_t seed = 1) {
  TrainConfig cfg;
  cfg.arch.d = 8;
  cfg.arch.heads = 2;
  cfg.arch.k_modes = 2;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  cfg.lr = 5e-3;
  cfg.seed = seed;
  cfg.top_k = 4;
  cfg.queue_capacity = 32;
  cfg.k_clusters = 3;
  cfg.split_mode = "all";
  return cfg;
}

traj::Dataset small_dataset(int scenes = 12, uint64_t seed = 5) {
  traj::GenConfig g;
  g.scenes = scenes;
  g.t_history = 4;
  g.t_future = 4;
  g.neighbors_min = 0;
  g.neighbors_max = 2;
  return traj::generate_synthetic(g, seed);
}

}  // namespace

TEST_CASE("laplace nll closed-form cases") {
  // mu == gt, b == 1 everywhere -> log 2
  std::vector<traj::Point> gt{{1, 2}, {3, 4}};
  ModePrediction p = make_pred(1, 2, {1, 2, 3, 4}, {1, 1, 1, 1}, {1});
  CHECK(train::laplace_nll(p, gt, 0) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // b == 0.5 -> log 1 == 0
  p.b = nd::Array({1, 2, 2}, {0.5, 0.5, 0.5, 0.5});
  CHECK(train::laplace_nll(p, gt, 0) == doctest::Approx(0.0).epsilon(1e-12));
  // |residual| == 1, b == 1 -> log 2 + 1
  p.b = nd::Array({1, 2, 2}, {1, 1, 1, 1});
  p.mu = nd::Array({1, 2, 2}, {0, 1, 2, 3});
  CHECK(train::laplace_nll(p, gt, 0) ==
        doctest::Approx(std::log(2.0) + 1.0).epsilon(1e-12));
}

TEST_CASE("mode classification loss cases") {
  std::vector<traj::Point> gt{{0, 0}};
  ModePrediction single = make_pred(1, 1, {0, 0}, {1, 1}, {1.0});
  CHECK(train::mode_cls_loss(single, gt) == doctest::Approx(0.0));

  ModePrediction uniform = make_pred(
      5, 1, {0, 0, 1, 1, 2, 2, 3, 3, 4, 4}, std::vector<double>(10, 1.0),
      std::vector<double>(5, 0.2));
  CHECK(train::mode_cls_loss(uniform, gt) ==
        doctest::Approx(std::log(5.0)).epsilon(1e-12));

  ModePrediction two = make_pred(2, 1, {0, 0, 5, 5}, {1, 1, 1, 1}, {0.7, 0.3});
  CHECK(train::mode_cls_loss(two, gt) ==
        doctest::Approx(0.35667494393873245).epsilon(1e-9));
}

TEST_CASE("target loss cases") {
  std::vector<traj::Point> gt{{1, 1}, {2, 2}};
  ModePrediction exact = make_pred(2, 2, {1, 1, 2, 2, 9, 9, 9, 9},
                                   std::vector<double>(8, 1.0), {0.8, 0.2});
  CHECK(train::target_loss(exact, gt) == doctest::Approx(0.0));

  // constant 1 m offset on the best-probability mode -> 1 m^2
  ModePrediction off = make_pred(2, 2, {2, 1, 3, 2, 0, 0, 0, 0},
                                 std::vector<double>(8, 1.0), {0.9, 0.1});
  CHECK(train::target_loss(off, gt) == doctest::Approx(1.0).epsilon(1e-12));

  // random case against direct arithmetic
  Rng rng(3);
  std::vector<double> mu(8);
  for (double& v : mu) v = rng.uniform(-3, 3);
  ModePrediction rnd = make_pred(2, 2, mu, std::vector<double>(8, 1.0),
                                 {0.4, 0.6});
  double expect = 0.0;
  for (int t = 0; t < 2; ++t) {
    const double dx = gt[t][0] - mu[4 + 2 * t];  // mode 1 is best
    const double dy = gt[t][1] - mu[4 + 2 * t + 1];
    expect += dx * dx + dy * dy;
  }
  expect /= 2.0;
  CHECK(train::target_loss(rnd, gt) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("total loss is the exact weighted sum") {
  train::LossWeights w;  // 1, 0.5, 1, 0.1
  train::LossComponents c{1, 1, 1, 1, 1};
  train::TaskTotal t = train::total_loss(c, w);
  CHECK(t.l_task == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(t.l_total == doctest::Approx(3.6).epsilon(1e-15));

  train::LossWeights zero{0, 0, 0, 0};
  train::LossComponents c2{0.37, 5, 5, 5, 5};
  CHECK(train::total_loss(c2, zero).l_total == doctest::Approx(0.37));

  train::LossComponents c3{0.2, 0.4, 0.6, 0.8, 1.0};
  train::TaskTotal t3 = train::total_loss(c3, w);
  CHECK(t3.l_task == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(t3.l_total == doctest::Approx(1.8).epsilon(1e-12));

  train::LossComponents bad{std::nan(""), 0, 0, 0, 0};
  CHECK_THROWS_WITH_AS(train::total_loss(bad, w),
                       doctest::Contains("l_target"), NumericError);
}

TEST_CASE("two runs with the same config and seed are identical") {
  traj::Dataset data = small_dataset();
  TrainConfig cfg = fast_config(9);
  train::TrainResult a = train::train(cfg, data);
  train::TrainResult b = train::train(cfg, data);
  REQUIRE(a.log.rows.size() == b.log.rows.size());
  for (size_t i = 0; i < a.log.rows.size(); ++i) {
    CHECK(a.log.rows[i].totals.l_total == b.log.rows[i].totals.l_total);
    CHECK(a.log.rows[i].val_min_ade == b.log.rows[i].val_min_ade);
  }
  for (const auto& [name, value] : a.params) {
    CHECK(value.data == b.params.at(name).data);
  }
  for (const auto& [name, value] : a.key_params) {
    CHECK(value.data == b.key_params.at(name).data);
  }
}

TEST_CASE("zero contrastive weights reduce to the plain supervised trace") {
  traj::Dataset data = small_dataset(10, 7);
  TrainConfig with_branches = fast_config(4);
  with_branches.weights.lambda1 = 0.0;
  with_branches.weights.lambda2 = 0.0;

  TrainConfig plain = with_branches;
  plain.enable_augment = false;
  plain.enable_moco = false;
  plain.enable_iterative_clustering = false;
  plain.enable_dcl = false;

  train::TrainResult a = train::train(with_branches, data);
  train::TrainResult b = train::train(plain, data);
  REQUIRE(a.log.rows.size() == b.log.rows.size());
  for (size_t i = 0; i < a.log.rows.size(); ++i) {
    CHECK(a.log.rows[i].totals.l_task == b.log.rows[i].totals.l_task);
    CHECK(a.log.rows[i].losses.l_target == b.log.rows[i].losses.l_target);
    CHECK(a.log.rows[i].losses.l_reg == b.log.rows[i].losses.l_reg);
    CHECK(a.log.rows[i].losses.l_cls == b.log.rows[i].losses.l_cls);
  }
  for (const auto& [name, value] : a.params) {
    CHECK(value.data == b.params.at(name).data);
  }
}

TEST_CASE("a frozen query encoder pins the key encoder at its start") {
  traj::Dataset data = small_dataset(8, 11);
  TrainConfig cfg = fast_config(2);
  cfg.lr = 1e-30;  // effectively frozen query
  cfg.epochs = 2;
  nd::ParamStore init = model::init_params(cfg.arch, cfg.seed);
  nd::ParamStore init_tar = model::target_encoder_subset(init);
  train::TrainResult r = train::train(cfg, data);
  for (const auto& [name, value] : r.key_params) {
    for (size_t i = 0; i < value.data.size(); ++i) {
      CHECK(value.data[i] ==
            doctest::Approx(init_tar.at(name).data[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("logged totals decompose into the logged components") {
  traj::Dataset data = small_dataset(10, 13);
  TrainConfig cfg = fast_config(6);
  train::TrainResult r = train::train(cfg, data);
  for (const train::EpochLog& row : r.log.rows) {
    train::TaskTotal again = train::total_loss(row.losses, cfg.weights);
    CHECK(std::fabs(again.l_task - row.totals.l_task) < 1e-12);
    CHECK(std::fabs(again.l_total - row.totals.l_total) < 1e-12);
  }
}

TEST_CASE("losses fall on a tiny overfit run") {
  traj::Dataset data = small_dataset(6, 17);
  TrainConfig cfg = fast_config(8);
  cfg.epochs = 40;
  cfg.batch_size = 2;
  cfg.lr = 2e-3;
  train::TrainResult r = train::train(cfg, data);
  CHECK(r.log.rows.back().totals.l_task < 0.8 * r.log.rows.front().totals.l_task);
}

TEST_CASE("empty dataset is rejected") {
  traj::Dataset empty;
  CHECK_THROWS_AS(train::train(fast_config(), empty), UsageError);
}

TEST_CASE("divergence aborts with epoch and scene context") {
  traj::Dataset data = small_dataset(6, 19);
  TrainConfig cfg = fast_config(3);
  cfg.lr = 1e18;  // guaranteed blow-up
  cfg.epochs = 4;
  CHECK_THROWS_WITH_AS(train::train(cfg, data), doctest::Contains("epoch"),
                       NumericError);
}

TEST_CASE("trainlog csv round-trips the logged values") {
  traj::Dataset data = small_dataset(8, 23);
  TrainConfig cfg = fast_config(12);
  train::TrainResult r = train::train(cfg, data);
  const std::string path = "trainlog_test.csv";
  train::write_trainlog_csv(r.log, path);
  std::ifstream is(path);
  std::string header;
  std::getline(is, header);
  CHECK(header ==
        "epoch,l_target,l_reg,l_cls,l_moco,l_dcl,l_task,l_total,val_min_ade,"
        "val_min_fde");
  std::string line;
  size_t rows = 0;
  while (std::getline(is, line)) {
    auto cols = amd::split(line, ',');
    REQUIRE(cols.size() == 10);
    CHECK(std::stod(cols[6]) == r.log.rows[rows].totals.l_task);
    ++rows;
  }
  CHECK(rows == r.log.rows.size());
  std::remove(path.c_str());
}
