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

// Compares the serial reference kernels against the OpenMP variants and
// checks that both produce bit-identical results while timing them.

#include <chrono>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "amdtraj/generate.hpp"
#include "amdtraj/kernels.hpp"
#include "amdtraj/longtail.hpp"
#include "amdtraj/random.hpp"

using namespace amd;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

template <typename F>
double time_best_of(int reps, F&& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, ms_since(t0));
  }
  return best;
}

void bench_matmul() {
  const int m = 384, k = 384, n = 384;
  Rng rng(7);
  std::vector<double> a(static_cast<size_t>(m) * k), b(static_cast<size_t>(k) * n);
  for (double& v : a) v = rng.uniform(-1.0, 1.0);
  for (double& v : b) v = rng.uniform(-1.0, 1.0);
  std::vector<double> c_serial(static_cast<size_t>(m) * n);
  std::vector<double> c_omp(c_serial.size());

  const double t_serial = time_best_of(3, [&] {
    nd::kernels::matmul_serial(a.data(), b.data(), c_serial.data(), m, k, n,
                               false, false);
  });
  const double t_omp = time_best_of(3, [&] {
    nd::kernels::matmul_omp(a.data(), b.data(), c_omp.data(), m, k, n, false,
                            false);
  });
  const bool equal = c_serial == c_omp;
  std::printf("matmul %dx%dx%d      serial %8.2f ms   omp %8.2f ms   x%.2f   bit-equal %s\n",
              m, k, n, t_serial, t_omp, t_serial / t_omp, equal ? "yes" : "NO");
}

void bench_assign() {
  const int n = 60000, d = 32, k = 16;
  Rng rng(11);
  std::vector<double> pts(static_cast<size_t>(n) * d), cen(static_cast<size_t>(k) * d);
  for (double& v : pts) v = rng.uniform(-1.0, 1.0);
  for (double& v : cen) v = rng.uniform(-1.0, 1.0);
  std::vector<int> l_serial(n), l_omp(n);

  const double t_serial = time_best_of(3, [&] {
    nd::kernels::assign_nearest_serial(pts.data(), n, d, cen.data(), k,
                                       l_serial.data());
  });
  const double t_omp = time_best_of(3, [&] {
    nd::kernels::assign_nearest_omp(pts.data(), n, d, cen.data(), k,
                                    l_omp.data());
  });
  const bool equal = l_serial == l_omp;
  std::printf("assign %dx%d k=%d  serial %8.2f ms   omp %8.2f ms   x%.2f   bit-equal %s\n",
              n, d, k, t_serial, t_omp, t_serial / t_omp, equal ? "yes" : "NO");
}

void bench_ttc() {
  traj::GenConfig cfg;
  cfg.scenes = 4000;
  cfg.neighbors_min = 3;
  cfg.neighbors_max = 6;
  traj::Dataset data = traj::generate_synthetic(cfg, 3);
  std::vector<double> fractions{0.01, 0.02, 0.03};

  std::vector<double> serial_ttc(data.scenes.size());
  const double t_serial = time_best_of(3, [&] {
    for (size_t i = 0; i < data.scenes.size(); ++i) {
      const int last = static_cast<int>(data.scenes[i].target.states.size()) - 1;
      serial_ttc[i] = longtail::compute_ttc(data.scenes[i], last).ttc;
    }
  });
  // rank_by_risk runs the same per-scene computation under omp.
  const double t_omp = time_best_of(3, [&] {
    longtail::rank_by_risk(data, fractions);
  });
  std::printf("ttc scan %zu scenes   serial %8.2f ms   omp %8.2f ms   x%.2f\n",
              data.scenes.size(), t_serial, t_omp, t_serial / t_omp);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("openmp enabled, max threads %d\n", omp_get_max_threads());
#else
  std::printf("openmp disabled; omp variants run serially\n");
#endif
  bench_matmul();
  bench_assign();
  bench_ttc();
  return 0;
}
