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

#include <stdexcept>
#include <string>

namespace amd {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration (proportions, thresholds, fractions).
struct ConfigError : Error {
  using Error::Error;
};

// Operand shapes incompatible with an op, or misaligned parameter sets.
struct ShapeError : Error {
  using Error::Error;
};

// A computation produced NaN/Inf; message names the offending node.
struct NumericError : Error {
  using Error::Error;
};

// File/serialization problems; message carries path and line where known.
struct IoError : Error {
  using Error::Error;
};

// API misuse (backward before forward, empty inputs, invalid indices).
struct UsageError : Error {
  using Error::Error;
};

}  // namespace amd
