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

#include "amdtraj/array.hpp"

// Dense kernels backing the computation graph. Each kernel has a serial
// reference implementation; the dispatching entry point switches to the
// OpenMP variant above a size threshold. The parallel decomposition is
// element-independent (one thread owns each output row), so serial and
// parallel paths produce bit-identical results — tests assert exact
// equality and the bench tool compares their throughput.

namespace amd::nd::kernels {

// c = op_a(a) * op_b(b), where op is an optional transpose.
// m, k, n are the logical (post-transpose) dimensions: (m x k) * (k x n).
void matmul_serial(const double* a, const double* b, double* c, int m, int k,
                   int n, bool ta, bool tb);
void matmul_omp(const double* a, const double* b, double* c, int m, int k,
                int n, bool ta, bool tb);
void matmul(const double* a, const double* b, double* c, int m, int k, int n,
            bool ta, bool tb);

// Nearest-centroid assignment for k-means. points: (n x d), centroids:
// (k x d), labels out: n. Ties resolve to the lowest centroid index.
void assign_nearest_serial(const double* points, int n, int d,
                           const double* centroids, int k, int* labels);
void assign_nearest_omp(const double* points, int n, int d,
                        const double* centroids, int k, int* labels);
void assign_nearest(const double* points, int n, int d, const double* centroids,
                    int k, int* labels);

// Row-wise softmax with max-subtraction, out may alias in.
void softmax_rows(const double* in, double* out, int rows, int cols);

}  // namespace amd::nd::kernels
