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

#include "amdtraj/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace amd::nd::kernels {

namespace {

// Work below these thresholds is cheaper than the fork/join overhead.
constexpr int64_t kMatmulParallelFlops = 1 << 16;
constexpr int64_t kAssignParallelOps = 1 << 14;

// One output row of op_a(a) * op_b(b). a is stored (k x m) when ta, b is
// stored (n x k) when tb; m, k, n are the logical post-transpose dims.
inline void matmul_row(const double* a, const double* b, double* c, int i,
                       int m, int k, int n, bool ta, bool tb) {
  double* crow = c + static_cast<int64_t>(i) * n;
  std::fill(crow, crow + n, 0.0);
  if (!ta && !tb) {
    const double* arow = a + static_cast<int64_t>(i) * k;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + static_cast<int64_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  } else if (!ta && tb) {
    const double* arow = a + static_cast<int64_t>(i) * k;
    for (int j = 0; j < n; ++j) {
      const double* brow = b + static_cast<int64_t>(j) * k;
      double acc = 0.0;
      for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
      crow[j] = acc;
    }
  } else if (ta && !tb) {
    for (int p = 0; p < k; ++p) {
      const double av = a[static_cast<int64_t>(p) * m + i];
      const double* brow = b + static_cast<int64_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  } else {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < k; ++p) {
        acc += a[static_cast<int64_t>(p) * m + i] *
               b[static_cast<int64_t>(j) * k + p];
      }
      crow[j] = acc;
    }
  }
}

}  // namespace

void matmul_serial(const double* a, const double* b, double* c, int m, int k,
                   int n, bool ta, bool tb) {
  for (int i = 0; i < m; ++i) matmul_row(a, b, c, i, m, k, n, ta, tb);
}

void matmul_omp(const double* a, const double* b, double* c, int m, int k,
                int n, bool ta, bool tb) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) matmul_row(a, b, c, i, m, k, n, ta, tb);
}

void matmul(const double* a, const double* b, double* c, int m, int k, int n,
            bool ta, bool tb) {
  const int64_t flops = static_cast<int64_t>(m) * k * n;
  if (flops >= kMatmulParallelFlops && m > 1) {
    matmul_omp(a, b, c, m, k, n, ta, tb);
  } else {
    matmul_serial(a, b, c, m, k, n, ta, tb);
  }
}

namespace {

inline int nearest_centroid(const double* point, int d, const double* centroids,
                            int k) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int c = 0; c < k; ++c) {
    const double* cen = centroids + static_cast<int64_t>(c) * d;
    double dist = 0.0;
    for (int j = 0; j < d; ++j) {
      const double diff = point[j] - cen[j];
      dist += diff * diff;
    }
    if (dist < best_d) {
      best_d = dist;
      best = c;
    }
  }
  return best;
}

}  // namespace

void assign_nearest_serial(const double* points, int n, int d,
                           const double* centroids, int k, int* labels) {
  for (int i = 0; i < n; ++i) {
    labels[i] = nearest_centroid(points + static_cast<int64_t>(i) * d, d,
                                 centroids, k);
  }
}

void assign_nearest_omp(const double* points, int n, int d,
                        const double* centroids, int k, int* labels) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    labels[i] = nearest_centroid(points + static_cast<int64_t>(i) * d, d,
                                 centroids, k);
  }
}

void assign_nearest(const double* points, int n, int d, const double* centroids,
                    int k, int* labels) {
  if (static_cast<int64_t>(n) * k * d >= kAssignParallelOps) {
    assign_nearest_omp(points, n, d, centroids, k, labels);
  } else {
    assign_nearest_serial(points, n, d, centroids, k, labels);
  }
}

void softmax_rows(const double* in, double* out, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    const double* x = in + static_cast<int64_t>(r) * cols;
    double* y = out + static_cast<int64_t>(r) * cols;
    double m = x[0];
    for (int j = 1; j < cols; ++j) m = std::max(m, x[j]);
    double sum = 0.0;
    for (int j = 0; j < cols; ++j) {
      y[j] = std::exp(x[j] - m);
      sum += y[j];
    }
    const double inv = 1.0 / sum;
    for (int j = 0; j < cols; ++j) y[j] *= inv;
  }
}

}  // namespace amd::nd::kernels
