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

#include <map>
#include <string>
#include <vector>

#include "amdtraj/array.hpp"

namespace amd::nd {

enum class Op {
  kInput,
  kParameter,
  kConstant,
  kMatMul,
  kAdd,
  kMul,
  kTanh,
  kSigmoid,
  kRelu,
  kSoftmax,
  kLog,
  kExp,
  kConcat,
  kSlice,
  kReduceSum,
  kReduceMean,
  kLayerNorm,
  kReshape,
};

const char* op_name(Op op);

struct Node {
  Op op;
  Shape shape;
  std::vector<int> args;
  std::string name;  // inputs and parameters only
  bool trans_a = false;
  bool trans_b = false;
  int axis = 0;
  int start = 0;
  int len = 0;
  Array payload;  // constants only
};

// Named parameter values, iterated in key order everywhere so that
// checkpoints, EMA updates and gradient steps are deterministic.
using ParamStore = std::map<std::string, Array>;

struct GradTape {
  std::map<std::string, Array> grads;  // one entry per parameter node
  const Array& grad(const std::string& name) const;
};

// Dense computation graph. Nodes are appended in topological order by
// construction (an op can only reference existing ids), and the graph is
// immutable once handed to an Executor. Shape checking happens at build
// time; value computation is deferred to Executor.
class Graph {
 public:
  int input(const std::string& name, Shape shape);
  int parameter(const std::string& name, Shape shape);
  int constant(Array value);

  // c = op_a(a) * op_b(b); flags transpose the stored operand.
  int matmul(int a, int b, bool trans_a = false, bool trans_b = false);
  int add(int a, int b);    // elementwise, same shape
  int mul(int a, int b);    // elementwise, same shape
  int tanh(int a);
  int sigmoid(int a);
  int relu(int a);
  int softmax(int a);       // row-wise, max-subtracted
  int log(int a);
  int exp(int a);
  int concat(const std::vector<int>& parts, int axis);
  int slice(int a, int axis, int start, int len);
  int reduce_sum(int a);    // full reduction to [1,1]
  int reduce_mean(int a);
  int layer_norm(int x, int gain, int bias);  // per row; gain/bias [1,d]
  int reshape(int a, Shape shape);

  void mark_output(const std::string& name, int node);

  // Composites built from the primitive set.
  int scale(int a, double factor);
  int neg(int a) { return scale(a, -1.0); }
  int sub(int a, int b) { return add(a, neg(b)); }
  int add_scalar(int a, double v);
  int abs(int a);       // relu(x) + relu(-x)
  int softplus(int a);  // relu(x) + log1p(exp(-|x|)), overflow-safe
  int unit_row(int a);  // L2-normalize a [1,d] vector
  int dot(int a, int b) { return matmul(a, b, false, true); }  // [1,d]x[1,d]

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  const Node& node(int id) const { return nodes_[id]; }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<std::vector<int>>& users() const { return users_; }
  const std::map<std::string, int>& inputs() const { return input_ids_; }
  const std::map<std::string, int>& parameters() const { return param_ids_; }
  const std::map<std::string, int>& outputs() const { return output_ids_; }
  int output_id(const std::string& name) const;

 private:
  int push(Node n);
  const Node& arg(int id) const;

  std::vector<Node> nodes_;
  std::vector<std::vector<int>> users_;
  std::map<std::string, int> input_ids_;
  std::map<std::string, int> param_ids_;
  std::map<std::string, int> output_ids_;
};

// Runs a graph: bind inputs, run a forward pass against a parameter store,
// then read node values or pull gradients. rebind() re-evaluates only the
// nodes downstream of the changed input, which the training loop uses after
// winner-take-all mode selection.
class Executor {
 public:
  explicit Executor(const Graph& g);

  void bind(const std::string& input_name, Array value);
  void run(const ParamStore& params);
  void rebind(const std::string& input_name, Array value);

  bool has_run() const { return ran_; }
  const Array& value(int node) const;
  const Array& output(const std::string& name) const;

  // Reverse-mode gradients of the named output seeded with seed_grad.
  // Accumulates over fan-out; returns one gradient per parameter node.
  GradTape backward(const std::string& output_name,
                    const Array& seed_grad) const;

 private:
  void compute(int id);

  const Graph* g_;
  std::map<std::string, Array> bound_;
  std::vector<Array> vals_;
  bool ran_ = false;
};

// One-shot convenience: evaluate all marked outputs.
std::map<std::string, Array> evaluate(const Graph& g, const ParamStore& params,
                                      const std::map<std::string, Array>& inputs);

// Central finite differences over every parameter element of a scalar
// output. Returns max over parameters of |analytic - numeric| / max(1,
// |analytic|). step must lie in (0, 1e-2].
double grad_check(const Graph& g, const std::string& output_name,
                  const std::map<std::string, Array>& inputs,
                  const ParamStore& params, double step);

}  // namespace amd::nd
