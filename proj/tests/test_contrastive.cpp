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

#include "amdtraj/contrastive.hpp"
#include "amdtraj/error.hpp"
#include "amdtraj/random.hpp"
#include "mpfr_oracle.hpp"
#include "oracles.hpp"

using namespace amd;
using cl::MomentumQueue;
using cl::MomentumSchedule;

namespace {

std::vector<double> random_unit(Rng& rng, int d) {
  std::vector<double> v(d);
  for (double& x : v) x = rng.normal();
  return cl::unit(v);
}

}  // namespace

TEST_CASE("staged momentum coefficients") {
  MomentumSchedule sched;
  CHECK(cl::momentum_coefficient(0, 900, sched) == 0.95);
  CHECK(cl::momentum_coefficient(450, 900, sched) == 0.99);
  CHECK(cl::momentum_coefficient(900, 900, sched) == 0.999);
  CHECK(cl::momentum_coefficient(299, 900, sched) == 0.95);
  CHECK(cl::momentum_coefficient(300, 900, sched) == 0.99);
  CHECK_THROWS_AS(cl::momentum_coefficient(0, 0, sched), UsageError);
}

TEST_CASE("ema endpoints and midpoint") {
  nd::ParamStore key{{"w", nd::Array::row({2.0})}};
  nd::ParamStore query{{"w", nd::Array::row({4.0})}};
  cl::ema_update(key, query, 1.0);
  CHECK(key.at("w").data[0] == 2.0);
  cl::ema_update(key, query, 0.5);
  CHECK(key.at("w").data[0] == 3.0);
  cl::ema_update(key, query, 0.0);
  CHECK(key.at("w").data[0] == 4.0);
}

TEST_CASE("ema matches its closed form over many steps") {
  Rng rng(8);
  for (double m : {0.95, 0.99, 0.999}) {
    for (int n : {1, 10, 100}) {
      nd::Array k0 = nd::Array::zeros({3, 3});
      nd::Array q0 = nd::Array::zeros({3, 3});
      for (double& v : k0.data) v = rng.uniform(-1, 1);
      for (double& v : q0.data) v = rng.uniform(-1, 1);
      nd::ParamStore key{{"w", k0}};
      const nd::ParamStore query{{"w", q0}};
      for (int i = 0; i < n; ++i) cl::ema_update(key, query, m);
      const double mn = std::pow(m, n);
      for (size_t i = 0; i < k0.data.size(); ++i) {
        const double expect = mn * k0.data[i] + (1.0 - mn) * q0.data[i];
        CHECK(key.at("w").data[i] == doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("ema rejects misaligned stores") {
  nd::ParamStore key{{"w", nd::Array::row({1.0, 2.0})}};
  nd::ParamStore query{{"w", nd::Array::row({1.0})}};
  CHECK_THROWS_AS(cl::ema_update(key, query, 0.5), ShapeError);
}

TEST_CASE("queue evicts oldest first and never exceeds capacity") {
  MomentumQueue q(4);
  for (int i = 0; i < 5; ++i) q.push({static_cast<double>(i)});
  CHECK(q.size() == 4);
  CHECK(q.entry(0)[0] == 1.0);  // entry 0 evicted
  CHECK(q.entry(3)[0] == 4.0);
}

TEST_CASE("push below capacity keeps everything") {
  MomentumQueue q(8);
  for (int i = 0; i < 5; ++i) q.push({static_cast<double>(i)});
  CHECK(q.size() == 5);
  CHECK(q.entry(0)[0] == 0.0);
}

TEST_CASE("queue trace matches a reference ring buffer") {
  Rng rng(3);
  MomentumQueue q(16);
  oracle::RingBuffer ref(16);
  for (int op = 0; op < 10000; ++op) {
    std::vector<double> v{rng.uniform(-1, 1), rng.uniform(-1, 1)};
    q.push(v);
    ref.push(v);
    if (op % 97 == 0) {
      auto snap = ref.snapshot();
      REQUIRE(q.size() == static_cast<int>(snap.size()));
      for (int i = 0; i < q.size(); ++i) CHECK(q.entry(i) == snap[i]);
    }
  }
  auto snap = ref.snapshot();
  for (int i = 0; i < q.size(); ++i) CHECK(q.entry(i) == snap[i]);
}

TEST_CASE("top-k picks the most similar entries") {
  MomentumQueue q(8);
  q.push({0.9});
  q.push({0.5});
  q.push({0.3});
  auto picks = cl::topk_hard_negatives({1.0}, q, 2);
  CHECK(picks == std::vector<int>{0, 1});
  CHECK(cl::topk_hard_negatives({1.0}, q, 10).size() == 3);
}

TEST_CASE("top-k ties prefer older entries") {
  MomentumQueue q(4);
  q.push({0.7});
  q.push({0.7});
  q.push({0.9});
  auto picks = cl::topk_hard_negatives({1.0}, q, 2);
  CHECK(picks == std::vector<int>{2, 0});
}

TEST_CASE("top-k matches a full-sort oracle on random queues") {
  Rng rng(21);
  MomentumQueue q(64);
  for (int i = 0; i < 64; ++i) q.push(random_unit(rng, 8));
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> query = random_unit(rng, 8);
    std::vector<double> sims(64);
    for (int i = 0; i < 64; ++i) sims[i] = cl::dot(query, q.entry(i));
    CHECK(cl::topk_hard_negatives(query, q, 8) == oracle::topk_full_sort(sims, 8));
  }
}

TEST_CASE("empty queue mining is an error") {
  MomentumQueue q(4);
  CHECK_THROWS_AS(cl::topk_hard_negatives({1.0}, q, 2), UsageError);
}

TEST_CASE("single-negative contrastive loss value") {
  const double loss = cl::moco_dt_loss(1.0, {0.0}, 1.0);
  CHECK(loss == doctest::Approx(0.31326168751822286).epsilon(1e-12));
}

TEST_CASE("uniform similarities reduce to log(K+1)") {
  for (int k : {1, 4, 9}) {
    std::vector<double> negs(k, 0.42);
    CHECK(cl::moco_dt_loss(0.42, negs, 0.07) ==
          doctest::Approx(std::log(k + 1.0)).epsilon(1e-12));
  }
}

TEST_CASE("loss strictly decreases as the positive similarity rises") {
  Rng rng(5);
  std::vector<double> negs;
  for (int i = 0; i < 8; ++i) negs.push_back(rng.uniform(-1, 1));
  double prev = cl::moco_dt_loss(-1.0, negs, 0.07);
  for (double sp = -0.9; sp <= 1.0; sp += 0.1) {
    const double cur = cl::moco_dt_loss(sp, negs, 0.07);
    CHECK(cur < prev);
    prev = cur;
  }
}

#ifdef AMD_HAVE_MPFR
TEST_CASE("moco loss matches the 256-bit oracle on 100 random cases") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const double sp = rng.uniform(-1, 1);
    std::vector<double> negs(1 + rng.below(16));
    for (double& s : negs) s = rng.uniform(-1, 1);
    const double tau = rng.uniform(0.05, 1.0);
    const double mine = cl::moco_dt_loss(sp, negs, tau);
    const double ref = oracle::mpfr_info_nce(sp, negs, tau);
    CHECK(std::fabs(mine - ref) < 1e-9);
  }
}

TEST_CASE("dcl loss matches the 256-bit oracle on 100 random cases") {
  Rng rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 6;
    std::vector<double> q = random_unit(rng, d);
    std::vector<double> q_pos = random_unit(rng, d);
    std::vector<std::vector<double>> p_set(rng.below(6));
    for (auto& v : p_set) v = random_unit(rng, d);
    std::vector<std::vector<double>> u_set(1 + rng.below(10));
    for (auto& v : u_set) v = random_unit(rng, d);
    cl::DclConfig cfg;
    cfg.alpha = rng.uniform(0.0, 1.0);
    cfg.tau = rng.uniform(0.05, 1.0);

    std::vector<double> s_p, s_u;
    for (const auto& v : p_set) s_p.push_back(cl::dot(q, v));
    for (const auto& v : u_set) s_u.push_back(cl::dot(q, v));
    const double mine = cl::dcl_loss(q, q_pos, p_set, u_set, cfg);
    const double ref =
        oracle::mpfr_dcl(cl::dot(q, q_pos), s_p, s_u, cfg.alpha, cfg.tau);
    CHECK(std::fabs(mine - ref) < 1e-9);
  }
}
#endif

TEST_CASE("dcl weights from the definition") {
  CHECK(cl::dcl_weight(true, 3, 0.5) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(cl::dcl_weight(false, 3, 0.5) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(cl::dcl_weight(false, 0, 0.5), UsageError);
}

TEST_CASE("dcl weight sum identity") {
  for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    for (int p = 1; p <= 50; ++p) {
      const double total =
          cl::dcl_weight(true, p, alpha) + p * cl::dcl_weight(false, p, alpha);
      CHECK(total == doctest::Approx(p + 1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("dcl with no members reduces to weighted pair infonce") {
  Rng rng(41);
  std::vector<double> q = random_unit(rng, 4);
  std::vector<double> q_pos = random_unit(rng, 4);
  std::vector<double> neg = random_unit(rng, 4);
  cl::DclConfig cfg;
  cfg.alpha = 0.7;
  cfg.tau = 0.2;
  const double mine = cl::dcl_loss(q, q_pos, {}, {neg}, cfg);
  // direct: -(w_pos * s_pos / tau - log(exp(s_pos/tau) + exp(s_neg/tau)))
  const double sp = cl::dot(q, q_pos) / cfg.tau;
  const double sn = cl::dot(q, neg) / cfg.tau;
  const double expect = -(cfg.alpha * sp - std::log(std::exp(sp) + std::exp(sn)));
  CHECK(mine == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("identical features give log of the denominator size") {
  std::vector<double> v{1.0, 0.0};
  std::vector<std::vector<double>> p_set(3, v), u_set(5, v);
  cl::DclConfig cfg;
  cfg.alpha = 0.5;
  cfg.tau = 0.1;
  CHECK(cl::dcl_loss(v, v, p_set, u_set, cfg) ==
        doctest::Approx(std::log(6.0)).epsilon(1e-9));
}

TEST_CASE("dcl with nothing to compare against is an error") {
  std::vector<double> v{1.0, 0.0};
  CHECK_THROWS_AS(cl::dcl_loss(v, v, {}, {}, cl::DclConfig{}), UsageError);
}

TEST_CASE("kmeans separates two well-spaced blobs perfectly") {
  Rng rng(4);
  std::vector<std::vector<double>> feats;
  std::vector<int> truth;
  for (int i = 0; i < 60; ++i) {
    const bool second = i % 2 == 1;
    const double cx = second ? 10.0 : 0.0;
    feats.push_back({cx + rng.normal(0.0, 0.5), rng.normal(0.0, 0.5)});
    truth.push_back(second ? 1 : 0);
  }
  cl::KMeansResult km = cl::kmeans(feats, 2, 123);
  // purity: every true blob maps to exactly one cluster
  std::array<std::array<int, 2>, 2> counts{};
  for (size_t i = 0; i < feats.size(); ++i) counts[truth[i]][km.labels[i]] += 1;
  const int pure = std::max(counts[0][0] + counts[1][1],
                            counts[0][1] + counts[1][0]);
  CHECK(pure == 60);
}

TEST_CASE("k equal to the point count gives zero inertia") {
  std::vector<std::vector<double>> feats{{0, 0}, {1, 0}, {5, 5}, {-3, 2}};
  cl::KMeansResult km = cl::kmeans(feats, 4, 7);
  CHECK(km.inertia_trace.back() == 0.0);
  std::vector<int> sorted = km.labels;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("kmeans is deterministic per seed and canonical by first member") {
  Rng rng(9);
  std::vector<std::vector<double>> feats;
  for (int i = 0; i < 40; ++i) {
    feats.push_back({rng.uniform(-5, 5), rng.uniform(-5, 5)});
  }
  cl::KMeansResult a = cl::kmeans(feats, 5, 77);
  cl::KMeansResult b = cl::kmeans(feats, 5, 77);
  CHECK(a.labels == b.labels);
  CHECK(a.labels[0] == 0);  // first member defines cluster 0
}

TEST_CASE("lloyd inertia never increases across 50 seeds") {
  for (uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed + 1000);
    std::vector<std::vector<double>> feats;
    for (int i = 0; i < 64; ++i) {
      feats.push_back({rng.normal(), rng.normal(), rng.normal()});
    }
    cl::KMeansResult km = cl::kmeans(feats, 6, seed);
    for (size_t i = 1; i < km.inertia_trace.size(); ++i) {
      CHECK(km.inertia_trace[i] <= km.inertia_trace[i - 1] + 1e-12);
    }
  }
}

TEST_CASE("fewer features than clusters is an error") {
  std::vector<std::vector<double>> feats{{0, 0}, {1, 1}};
  CHECK_THROWS_AS(cl::kmeans(feats, 3, 0), UsageError);
}

TEST_CASE("pseudo-label store refresh snapshots the epoch buffer") {
  cl::PseudoLabelStore store(2, 1);
  Rng rng(6);
  for (size_t i = 0; i < 20; ++i) {
    const double cx = i < 10 ? 0.0 : 8.0;
    store.record(i, {cx + rng.normal(0.0, 0.3), rng.normal(0.0, 0.3)});
  }
  CHECK_FALSE(store.has_labels());
  store.refresh(5);
  CHECK(store.has_labels());
  CHECK(store.buffered() == 0);
  CHECK(store.snapshot().size() == 20);
  CHECK(store.label_of(0) == store.label_of(5));
  CHECK(store.label_of(0) != store.label_of(15));
  CHECK(store.label_of(999) == -1);
}
