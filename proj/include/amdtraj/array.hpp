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
#include <string>
#include <vector>

namespace amd::nd {

using Shape = std::vector<int>;

int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major double array. Graph ops work on rank-1/rank-2 arrays;
// higher ranks are storage-only (e.g. stacked mode trajectories).
struct Array {
  Shape shape;
  std::vector<double> data;

  Array() = default;
  Array(Shape s, std::vector<double> d);
  static Array zeros(const Shape& s);
  static Array full(const Shape& s, double v);
  static Array row(std::vector<double> d);  // [1, n]
  static Array scalar(double v);            // [1, 1]

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  // 2D view: rank-1 arrays count as a single row.
  int rows() const;
  int cols() const;

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
  double at(int r, int c) const {
    return data[static_cast<size_t>(r) * cols() + c];
  }

  bool all_finite() const;
  bool same_shape(const Array& o) const { return shape == o.shape; }
};

bool operator==(const Array& a, const Array& b);

}  // namespace amd::nd
