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

#include "amdtraj/array.hpp"

#include <cmath>

#include "amdtraj/error.hpp"

namespace amd::nd {

int64_t shape_numel(const Shape& shape) {
  int64_t n = 1;
  for (int e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Array::Array(Shape s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  for (int e : shape) {
    if (e < 0) throw ShapeError("negative extent in shape " + shape_str(shape));
  }
  if (shape_numel(shape) != static_cast<int64_t>(data.size())) {
    throw ShapeError("shape " + shape_str(shape) + " does not match " +
                     std::to_string(data.size()) + " values");
  }
}

Array Array::zeros(const Shape& s) {
  return Array(s, std::vector<double>(shape_numel(s), 0.0));
}

Array Array::full(const Shape& s, double v) {
  return Array(s, std::vector<double>(shape_numel(s), v));
}

Array Array::row(std::vector<double> d) {
  int n = static_cast<int>(d.size());
  return Array({1, n}, std::move(d));
}

Array Array::scalar(double v) { return Array({1, 1}, {v}); }

int Array::rows() const { return rank() >= 2 ? shape[0] : 1; }

int Array::cols() const {
  if (rank() == 0) return 1;
  return rank() >= 2 ? shape[1] : shape[0];
}

bool Array::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

bool operator==(const Array& a, const Array& b) {
  return a.shape == b.shape && a.data == b.data;
}

}  // namespace amd::nd
