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

#include "amdtraj/graph.hpp"

#include <cmath>
#include <deque>

#include "amdtraj/error.hpp"
#include "amdtraj/kernels.hpp"

namespace amd::nd {

namespace {

constexpr double kLayerNormEps = 1e-5;

struct Dims2 {
  int rows;
  int cols;
};

Dims2 as2d(const Shape& s) {
  if (s.size() == 1) return {1, s[0]};
  if (s.size() == 2) return {s[0], s[1]};
  throw ShapeError("op requires rank 1 or 2, got " + shape_str(s));
}

std::string node_label(int id, const Node& n) {
  std::string s = "node " + std::to_string(id) + " (" + op_name(n.op);
  if (!n.name.empty()) s += " '" + n.name + "'";
  return s + ")";
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::kInput: return "input";
    case Op::kParameter: return "parameter";
    case Op::kConstant: return "constant";
    case Op::kMatMul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kMul: return "mul";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kRelu: return "relu";
    case Op::kSoftmax: return "softmax";
    case Op::kLog: return "log";
    case Op::kExp: return "exp";
    case Op::kConcat: return "concat";
    case Op::kSlice: return "slice";
    case Op::kReduceSum: return "reduce-sum";
    case Op::kReduceMean: return "reduce-mean";
    case Op::kLayerNorm: return "layer-norm";
    case Op::kReshape: return "reshape";
  }
  return "?";
}

const Array& GradTape::grad(const std::string& name) const {
  auto it = grads.find(name);
  if (it == grads.end()) throw UsageError("no parameter named '" + name + "'");
  return it->second;
}

int Graph::push(Node n) {
  for (int a : n.args) {
    if (a < 0 || a >= num_nodes()) {
      throw UsageError("operand id out of range");
    }
  }
  nodes_.push_back(std::move(n));
  users_.emplace_back();
  int id = num_nodes() - 1;
  for (int a : nodes_[id].args) users_[a].push_back(id);
  return id;
}

const Node& Graph::arg(int id) const {
  if (id < 0 || id >= num_nodes()) throw UsageError("operand id out of range");
  return nodes_[id];
}

int Graph::input(const std::string& name, Shape shape) {
  auto it = input_ids_.find(name);
  if (it != input_ids_.end()) {
    if (nodes_[it->second].shape != shape) {
      throw ShapeError("input '" + name + "' redeclared with different shape");
    }
    return it->second;
  }
  Node n{Op::kInput, std::move(shape), {}, name};
  int id = push(std::move(n));
  input_ids_[name] = id;
  return id;
}

int Graph::parameter(const std::string& name, Shape shape) {
  auto it = param_ids_.find(name);
  if (it != param_ids_.end()) {
    if (nodes_[it->second].shape != shape) {
      throw ShapeError("parameter '" + name + "' redeclared with different shape");
    }
    return it->second;
  }
  Node n{Op::kParameter, std::move(shape), {}, name};
  int id = push(std::move(n));
  param_ids_[name] = id;
  return id;
}

int Graph::constant(Array value) {
  Node n{Op::kConstant, value.shape, {}, ""};
  n.payload = std::move(value);
  return push(std::move(n));
}

int Graph::matmul(int a, int b, bool trans_a, bool trans_b) {
  Dims2 da = as2d(arg(a).shape);
  Dims2 db = as2d(arg(b).shape);
  int m = trans_a ? da.cols : da.rows;
  int ka = trans_a ? da.rows : da.cols;
  int kb = trans_b ? db.cols : db.rows;
  int nn = trans_b ? db.rows : db.cols;
  if (ka != kb) {
    throw ShapeError("matmul inner dims differ: " + shape_str(arg(a).shape) +
                     (trans_a ? "^T" : "") + " x " + shape_str(arg(b).shape) +
                     (trans_b ? "^T" : ""));
  }
  Node n{Op::kMatMul, {m, nn}, {a, b}};
  n.trans_a = trans_a;
  n.trans_b = trans_b;
  return push(std::move(n));
}

int Graph::add(int a, int b) {
  if (arg(a).shape != arg(b).shape) {
    throw ShapeError("add shapes differ: " + shape_str(arg(a).shape) + " vs " +
                     shape_str(arg(b).shape));
  }
  return push(Node{Op::kAdd, arg(a).shape, {a, b}});
}

int Graph::mul(int a, int b) {
  if (arg(a).shape != arg(b).shape) {
    throw ShapeError("mul shapes differ: " + shape_str(arg(a).shape) + " vs " +
                     shape_str(arg(b).shape));
  }
  return push(Node{Op::kMul, arg(a).shape, {a, b}});
}

int Graph::tanh(int a) { return push(Node{Op::kTanh, arg(a).shape, {a}}); }
int Graph::sigmoid(int a) { return push(Node{Op::kSigmoid, arg(a).shape, {a}}); }
int Graph::relu(int a) { return push(Node{Op::kRelu, arg(a).shape, {a}}); }

int Graph::softmax(int a) {
  as2d(arg(a).shape);
  return push(Node{Op::kSoftmax, arg(a).shape, {a}});
}

int Graph::log(int a) { return push(Node{Op::kLog, arg(a).shape, {a}}); }
int Graph::exp(int a) { return push(Node{Op::kExp, arg(a).shape, {a}}); }

int Graph::concat(const std::vector<int>& parts, int axis) {
  if (parts.empty()) throw UsageError("concat needs at least one part");
  if (axis != 0 && axis != 1) throw UsageError("concat axis must be 0 or 1");
  Dims2 first = as2d(arg(parts[0]).shape);
  int total = axis == 0 ? first.rows : first.cols;
  for (size_t i = 1; i < parts.size(); ++i) {
    Dims2 d = as2d(arg(parts[i]).shape);
    if (axis == 0 ? d.cols != first.cols : d.rows != first.rows) {
      throw ShapeError("concat operand " + std::to_string(i) +
                       " incompatible: " + shape_str(arg(parts[i]).shape));
    }
    total += axis == 0 ? d.rows : d.cols;
  }
  Shape out = axis == 0 ? Shape{total, first.cols} : Shape{first.rows, total};
  Node n{Op::kConcat, out, parts};
  n.axis = axis;
  return push(std::move(n));
}

int Graph::slice(int a, int axis, int start, int len) {
  if (axis != 0 && axis != 1) throw UsageError("slice axis must be 0 or 1");
  Dims2 d = as2d(arg(a).shape);
  int extent = axis == 0 ? d.rows : d.cols;
  if (start < 0 || len <= 0 || start + len > extent) {
    throw UsageError("slice [" + std::to_string(start) + ", " +
                     std::to_string(start + len) + ") out of range for axis " +
                     std::to_string(axis) + " of " + shape_str(arg(a).shape));
  }
  Shape out = axis == 0 ? Shape{len, d.cols} : Shape{d.rows, len};
  Node n{Op::kSlice, out, {a}};
  n.axis = axis;
  n.start = start;
  n.len = len;
  return push(std::move(n));
}

int Graph::reduce_sum(int a) { return push(Node{Op::kReduceSum, {1, 1}, {a}}); }
int Graph::reduce_mean(int a) { return push(Node{Op::kReduceMean, {1, 1}, {a}}); }

int Graph::layer_norm(int x, int gain, int bias) {
  Dims2 d = as2d(arg(x).shape);
  Dims2 dg = as2d(arg(gain).shape);
  Dims2 db = as2d(arg(bias).shape);
  if (dg.rows != 1 || db.rows != 1 || dg.cols != d.cols || db.cols != d.cols) {
    throw ShapeError("layer-norm gain/bias must be [1," + std::to_string(d.cols) +
                     "]");
  }
  return push(Node{Op::kLayerNorm, arg(x).shape, {x, gain, bias}});
}

int Graph::reshape(int a, Shape shape) {
  if (shape_numel(shape) != shape_numel(arg(a).shape)) {
    throw ShapeError("reshape " + shape_str(arg(a).shape) + " -> " +
                     shape_str(shape) + " changes element count");
  }
  Node n{Op::kReshape, std::move(shape), {a}};
  return push(std::move(n));
}

void Graph::mark_output(const std::string& name, int node) {
  arg(node);
  output_ids_[name] = node;
}

int Graph::output_id(const std::string& name) const {
  auto it = output_ids_.find(name);
  if (it == output_ids_.end()) {
    throw UsageError("no output named '" + name + "'");
  }
  return it->second;
}

int Graph::scale(int a, double factor) {
  return mul(a, constant(Array::full(arg(a).shape, factor)));
}

int Graph::add_scalar(int a, double v) {
  return add(a, constant(Array::full(arg(a).shape, v)));
}

int Graph::abs(int a) { return add(relu(a), relu(neg(a))); }

int Graph::softplus(int a) {
  // softplus(x) = relu(x) + log(1 + exp(-|x|)); the exp argument is <= 0 so
  // this form never overflows.
  int t = exp(neg(abs(a)));
  return add(relu(a), log(add_scalar(t, 1.0)));
}

int Graph::unit_row(int a) {
  Dims2 d = as2d(arg(a).shape);
  if (d.rows != 1) throw ShapeError("unit_row expects a [1,d] vector");
  int sq = reduce_sum(mul(a, a));
  int inv_norm = exp(scale(log(sq), -0.5));  // (sum x^2)^(-1/2)
  return matmul(inv_norm, a);                // [1,1] x [1,d]
}

// ---------------------------------------------------------------------------

Executor::Executor(const Graph& g) : g_(&g), vals_(g.num_nodes()) {}

void Executor::bind(const std::string& input_name, Array value) {
  auto it = g_->inputs().find(input_name);
  if (it == g_->inputs().end()) {
    throw UsageError("no input named '" + input_name + "'");
  }
  if (g_->node(it->second).shape != value.shape) {
    throw ShapeError("input '" + input_name + "' expects " +
                     shape_str(g_->node(it->second).shape) + ", got " +
                     shape_str(value.shape));
  }
  bound_[input_name] = std::move(value);
}

void Executor::compute(int id) {
  const Node& n = g_->node(id);
  Array& out = vals_[id];
  switch (n.op) {
    case Op::kInput: {
      auto it = bound_.find(n.name);
      if (it == bound_.end()) {
        throw UsageError("input '" + n.name + "' not bound");
      }
      out = it->second;
      break;
    }
    case Op::kParameter:
      break;  // filled by run() from the store
    case Op::kConstant:
      out = n.payload;
      break;
    case Op::kMatMul: {
      const Array& a = vals_[n.args[0]];
      const Array& b = vals_[n.args[1]];
      out = Array::zeros(n.shape);
      int m = n.shape[0], nn = n.shape[1];
      int k = n.trans_a ? as2d(a.shape).rows : as2d(a.shape).cols;
      kernels::matmul(a.data.data(), b.data.data(), out.data.data(), m, k, nn,
                      n.trans_a, n.trans_b);
      break;
    }
    case Op::kAdd: {
      const Array& a = vals_[n.args[0]];
      const Array& b = vals_[n.args[1]];
      out = a;
      for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
      break;
    }
    case Op::kMul: {
      const Array& a = vals_[n.args[0]];
      const Array& b = vals_[n.args[1]];
      out = a;
      for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
      break;
    }
    case Op::kTanh: {
      out = vals_[n.args[0]];
      for (double& v : out.data) v = std::tanh(v);
      break;
    }
    case Op::kSigmoid: {
      out = vals_[n.args[0]];
      for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
      break;
    }
    case Op::kRelu: {
      out = vals_[n.args[0]];
      for (double& v : out.data) v = v > 0.0 ? v : 0.0;
      break;
    }
    case Op::kSoftmax: {
      const Array& a = vals_[n.args[0]];
      Dims2 d = as2d(a.shape);
      out = Array::zeros(a.shape);
      kernels::softmax_rows(a.data.data(), out.data.data(), d.rows, d.cols);
      break;
    }
    case Op::kLog: {
      out = vals_[n.args[0]];
      for (double& v : out.data) v = std::log(v);
      break;
    }
    case Op::kExp: {
      out = vals_[n.args[0]];
      for (double& v : out.data) v = std::exp(v);
      break;
    }
    case Op::kConcat: {
      out = Array::zeros(n.shape);
      Dims2 od = as2d(n.shape);
      if (n.axis == 0) {
        size_t off = 0;
        for (int a : n.args) {
          const Array& part = vals_[a];
          std::copy(part.data.begin(), part.data.end(), out.data.begin() + off);
          off += part.data.size();
        }
      } else {
        int col = 0;
        for (int a : n.args) {
          const Array& part = vals_[a];
          Dims2 pd = as2d(part.shape);
          for (int r = 0; r < pd.rows; ++r) {
            for (int c = 0; c < pd.cols; ++c) {
              out.data[static_cast<size_t>(r) * od.cols + col + c] =
                  part.data[static_cast<size_t>(r) * pd.cols + c];
            }
          }
          col += pd.cols;
        }
      }
      break;
    }
    case Op::kSlice: {
      const Array& a = vals_[n.args[0]];
      Dims2 ad = as2d(a.shape);
      out = Array::zeros(n.shape);
      if (n.axis == 0) {
        std::copy(a.data.begin() + static_cast<size_t>(n.start) * ad.cols,
                  a.data.begin() + static_cast<size_t>(n.start + n.len) * ad.cols,
                  out.data.begin());
      } else {
        for (int r = 0; r < ad.rows; ++r) {
          for (int c = 0; c < n.len; ++c) {
            out.data[static_cast<size_t>(r) * n.len + c] =
                a.data[static_cast<size_t>(r) * ad.cols + n.start + c];
          }
        }
      }
      break;
    }
    case Op::kReduceSum:
    case Op::kReduceMean: {
      const Array& a = vals_[n.args[0]];
      double s = 0.0;
      for (double v : a.data) s += v;
      if (n.op == Op::kReduceMean) s /= static_cast<double>(a.data.size());
      out = Array::scalar(s);
      break;
    }
    case Op::kLayerNorm: {
      const Array& x = vals_[n.args[0]];
      const Array& gain = vals_[n.args[1]];
      const Array& bias = vals_[n.args[2]];
      Dims2 d = as2d(x.shape);
      out = Array::zeros(x.shape);
      for (int r = 0; r < d.rows; ++r) {
        const double* xr = x.data.data() + static_cast<size_t>(r) * d.cols;
        double* yr = out.data.data() + static_cast<size_t>(r) * d.cols;
        double mean = 0.0;
        for (int c = 0; c < d.cols; ++c) mean += xr[c];
        mean /= d.cols;
        double var = 0.0;
        for (int c = 0; c < d.cols; ++c) {
          const double dv = xr[c] - mean;
          var += dv * dv;
        }
        var /= d.cols;
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        for (int c = 0; c < d.cols; ++c) {
          yr[c] = (xr[c] - mean) * inv * gain.data[c] + bias.data[c];
        }
      }
      break;
    }
    case Op::kReshape: {
      out = vals_[n.args[0]];
      out.shape = n.shape;
      break;
    }
  }
  if (n.op != Op::kParameter && !out.all_finite()) {
    throw NumericError(node_label(id, n) + " produced a non-finite value");
  }
}

void Executor::run(const ParamStore& params) {
  for (const auto& [name, pid] : g_->parameters()) {
    auto it = params.find(name);
    if (it == params.end()) {
      throw UsageError("parameter '" + name + "' missing from store");
    }
    if (it->second.shape != g_->node(pid).shape) {
      throw ShapeError("parameter '" + name + "' expects " +
                       shape_str(g_->node(pid).shape) + ", got " +
                       shape_str(it->second.shape));
    }
    vals_[pid] = it->second;
  }
  for (int id = 0; id < g_->num_nodes(); ++id) compute(id);
  ran_ = true;
}

void Executor::rebind(const std::string& input_name, Array value) {
  if (!ran_) throw UsageError("rebind before run");
  auto it = g_->inputs().find(input_name);
  if (it == g_->inputs().end()) {
    throw UsageError("no input named '" + input_name + "'");
  }
  bind(input_name, std::move(value));
  // Recompute only nodes downstream of the changed input, in topo order.
  std::vector<char> dirty(g_->num_nodes(), 0);
  std::deque<int> queue{it->second};
  dirty[it->second] = 1;
  while (!queue.empty()) {
    int u = queue.front();
    queue.pop_front();
    for (int v : g_->users()[u]) {
      if (!dirty[v]) {
        dirty[v] = 1;
        queue.push_back(v);
      }
    }
  }
  for (int id = 0; id < g_->num_nodes(); ++id) {
    if (dirty[id]) compute(id);
  }
}

const Array& Executor::value(int node) const {
  if (!ran_) throw UsageError("value() before run");
  return vals_[node];
}

const Array& Executor::output(const std::string& name) const {
  return value(g_->output_id(name));
}

namespace {

// adjoint += op_a(a) * op_b(b)
void matmul_acc(Array& adjoint, const Array& a, const Array& b, bool ta,
                bool tb) {
  Dims2 da = as2d(a.shape);
  int m = ta ? da.cols : da.rows;
  int k = ta ? da.rows : da.cols;
  Dims2 dd = as2d(adjoint.shape);
  Array scratch = Array::zeros({dd.rows, dd.cols});
  kernels::matmul(a.data.data(), b.data.data(), scratch.data.data(), m, k,
                  dd.cols, ta, tb);
  for (size_t i = 0; i < adjoint.data.size(); ++i) {
    adjoint.data[i] += scratch.data[i];
  }
}

}  // namespace

GradTape Executor::backward(const std::string& output_name,
                            const Array& seed_grad) const {
  if (!ran_) throw UsageError("backward called before evaluate");
  int root = g_->output_id(output_name);
  if (seed_grad.shape != g_->node(root).shape) {
    throw ShapeError("seed gradient shape " + shape_str(seed_grad.shape) +
                     " does not match output shape " +
                     shape_str(g_->node(root).shape));
  }

  std::vector<Array> adj(g_->num_nodes());
  std::vector<char> live(g_->num_nodes(), 0);
  adj[root] = seed_grad;
  live[root] = 1;

  auto touch = [&](int id) -> Array& {
    if (!live[id]) {
      adj[id] = Array::zeros(g_->node(id).shape);
      live[id] = 1;
    }
    return adj[id];
  };

  for (int id = g_->num_nodes() - 1; id >= 0; --id) {
    if (!live[id]) continue;
    const Node& n = g_->node(id);
    const Array& g = adj[id];
    switch (n.op) {
      case Op::kInput:
      case Op::kParameter:
      case Op::kConstant:
        break;
      case Op::kMatMul: {
        const Array& a = vals_[n.args[0]];
        const Array& b = vals_[n.args[1]];
        Array& da = touch(n.args[0]);
        Array& db = touch(n.args[1]);
        if (!n.trans_a && !n.trans_b) {
          matmul_acc(da, g, b, false, true);
          matmul_acc(db, a, g, true, false);
        } else if (n.trans_a && !n.trans_b) {
          matmul_acc(da, b, g, false, true);
          matmul_acc(db, a, g, false, false);
        } else if (!n.trans_a && n.trans_b) {
          matmul_acc(da, g, b, false, false);
          matmul_acc(db, g, a, true, false);
        } else {
          matmul_acc(da, b, g, true, true);
          matmul_acc(db, g, a, true, true);
        }
        break;
      }
      case Op::kAdd: {
        Array& da = touch(n.args[0]);
        Array& db = touch(n.args[1]);
        for (size_t i = 0; i < g.data.size(); ++i) {
          da.data[i] += g.data[i];
          db.data[i] += g.data[i];
        }
        break;
      }
      case Op::kMul: {
        const Array& a = vals_[n.args[0]];
        const Array& b = vals_[n.args[1]];
        Array& da = touch(n.args[0]);
        Array& db = touch(n.args[1]);
        for (size_t i = 0; i < g.data.size(); ++i) {
          da.data[i] += g.data[i] * b.data[i];
          db.data[i] += g.data[i] * a.data[i];
        }
        break;
      }
      case Op::kTanh: {
        const Array& y = vals_[id];
        Array& da = touch(n.args[0]);
        for (size_t i = 0; i < g.data.size(); ++i) {
          da.data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
        }
        break;
      }
      case Op::kSigmoid: {
        const Array& y = vals_[id];
        Array& da = touch(n.args[0]);
        for (size_t i = 0; i < g.data.size(); ++i) {
          da.data[i] += g.data[i] * y.data[i] * (1.0 - y.data[i]);
        }
        break;
      }
      case Op::kRelu: {
        const Array& x = vals_[n.args[0]];
        Array& da = touch(n.args[0]);
        for (size_t i = 0; i < g.data.size(); ++i) {
          if (x.data[i] > 0.0) da.data[i] += g.data[i];
        }
        break;
      }
      case Op::kSoftmax: {
        const Array& y = vals_[id];
        Dims2 d = as2d(y.shape);
        Array& da = touch(n.args[0]);
        for (int r = 0; r < d.rows; ++r) {
          const size_t off = static_cast<size_t>(r) * d.cols;
          double dot = 0.0;
          for (int c = 0; c < d.cols; ++c) {
            dot += g.data[off + c] * y.data[off + c];
          }
          for (int c = 0; c < d.cols; ++c) {
            da.data[off + c] += y.data[off + c] * (g.data[off + c] - dot);
          }
        }
        break;
      }
      case Op::kLog: {
        const Array& x = vals_[n.args[0]];
        Array& da = touch(n.args[0]);
        for (size_t i = 0; i < g.data.size(); ++i) {
          da.data[i] += g.data[i] / x.data[i];
        }
        break;
      }
      case Op::kExp: {
        const Array& y = vals_[id];
        Array& da = touch(n.args[0]);
        for (size_t i = 0; i < g.data.size(); ++i) {
          da.data[i] += g.data[i] * y.data[i];
        }
        break;
      }
      case Op::kConcat: {
        Dims2 od = as2d(n.shape);
        if (n.axis == 0) {
          size_t off = 0;
          for (int aid : n.args) {
            Array& da = touch(aid);
            for (size_t i = 0; i < da.data.size(); ++i) {
              da.data[i] += g.data[off + i];
            }
            off += da.data.size();
          }
        } else {
          int col = 0;
          for (int aid : n.args) {
            Array& da = touch(aid);
            Dims2 pd = as2d(da.shape);
            for (int r = 0; r < pd.rows; ++r) {
              for (int c = 0; c < pd.cols; ++c) {
                da.data[static_cast<size_t>(r) * pd.cols + c] +=
                    g.data[static_cast<size_t>(r) * od.cols + col + c];
              }
            }
            col += pd.cols;
          }
        }
        break;
      }
      case Op::kSlice: {
        const Array& a = vals_[n.args[0]];
        Dims2 ad = as2d(a.shape);
        Array& da = touch(n.args[0]);
        if (n.axis == 0) {
          const size_t off = static_cast<size_t>(n.start) * ad.cols;
          for (size_t i = 0; i < g.data.size(); ++i) {
            da.data[off + i] += g.data[i];
          }
        } else {
          for (int r = 0; r < ad.rows; ++r) {
            for (int c = 0; c < n.len; ++c) {
              da.data[static_cast<size_t>(r) * ad.cols + n.start + c] +=
                  g.data[static_cast<size_t>(r) * n.len + c];
            }
          }
        }
        break;
      }
      case Op::kReduceSum: {
        Array& da = touch(n.args[0]);
        for (double& v : da.data) v += g.data[0];
        break;
      }
      case Op::kReduceMean: {
        Array& da = touch(n.args[0]);
        const double s = g.data[0] / static_cast<double>(da.data.size());
        for (double& v : da.data) v += s;
        break;
      }
      case Op::kLayerNorm: {
        const Array& x = vals_[n.args[0]];
        const Array& gain = vals_[n.args[1]];
        Dims2 d = as2d(x.shape);
        Array& dx = touch(n.args[0]);
        Array& dgain = touch(n.args[1]);
        Array& dbias = touch(n.args[2]);
        for (int r = 0; r < d.rows; ++r) {
          const double* xr = x.data.data() + static_cast<size_t>(r) * d.cols;
          const double* gr = g.data.data() + static_cast<size_t>(r) * d.cols;
          double mean = 0.0;
          for (int c = 0; c < d.cols; ++c) mean += xr[c];
          mean /= d.cols;
          double var = 0.0;
          for (int c = 0; c < d.cols; ++c) {
            const double dv = xr[c] - mean;
            var += dv * dv;
          }
          var /= d.cols;
          const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
          // dxhat = g * gain; dx = inv*(dxhat - mean(dxhat) - xhat*mean(dxhat*xhat))
          double mean_dxh = 0.0, mean_dxh_xh = 0.0;
          for (int c = 0; c < d.cols; ++c) {
            const double xh = (xr[c] - mean) * inv;
            const double dxh = gr[c] * gain.data[c];
            mean_dxh += dxh;
            mean_dxh_xh += dxh * xh;
          }
          mean_dxh /= d.cols;
          mean_dxh_xh /= d.cols;
          for (int c = 0; c < d.cols; ++c) {
            const double xh = (xr[c] - mean) * inv;
            const double dxh = gr[c] * gain.data[c];
            dx.data[static_cast<size_t>(r) * d.cols + c] +=
                inv * (dxh - mean_dxh - xh * mean_dxh_xh);
            dgain.data[c] += gr[c] * xh;
            dbias.data[c] += gr[c];
          }
        }
        break;
      }
      case Op::kReshape: {
        Array& da = touch(n.args[0]);
        for (size_t i = 0; i < g.data.size(); ++i) da.data[i] += g.data[i];
        break;
      }
    }
  }

  GradTape tape;
  for (const auto& [name, pid] : g_->parameters()) {
    Array grad = live[pid] ? adj[pid] : Array::zeros(g_->node(pid).shape);
    if (!grad.all_finite()) {
      throw NumericError("gradient of parameter '" + name + "' is non-finite");
    }
    tape.grads.emplace(name, std::move(grad));
  }
  return tape;
}

std::map<std::string, Array> evaluate(const Graph& g, const ParamStore& params,
                                      const std::map<std::string, Array>& inputs) {
  Executor ex(g);
  for (const auto& [name, v] : inputs) ex.bind(name, v);
  ex.run(params);
  std::map<std::string, Array> out;
  for (const auto& [name, id] : g.outputs()) out[name] = ex.value(id);
  return out;
}

double grad_check(const Graph& g, const std::string& output_name,
                  const std::map<std::string, Array>& inputs,
                  const ParamStore& params, double step) {
  if (!(step > 0.0 && step <= 1e-2)) {
    throw UsageError("grad_check step must lie in (0, 1e-2]");
  }
  int root = g.output_id(output_name);
  if (shape_numel(g.node(root).shape) != 1) {
    throw UsageError("grad_check requires a scalar output");
  }

  Executor ex(g);
  for (const auto& [name, v] : inputs) ex.bind(name, v);
  ex.run(params);
  GradTape tape = ex.backward(output_name, Array::scalar(1.0));

  auto eval_at = [&](const ParamStore& p) {
    Executor e(g);
    for (const auto& [name, v] : inputs) e.bind(name, v);
    e.run(p);
    return e.output(output_name).data[0];
  };

  double max_rel = 0.0;
  ParamStore probe = params;
  for (auto& [name, values] : probe) {
    const Array& analytic = tape.grad(name);
    for (size_t i = 0; i < values.data.size(); ++i) {
      const double saved = values.data[i];
      values.data[i] = saved + step;
      const double fp = eval_at(probe);
      values.data[i] = saved - step;
      const double fm = eval_at(probe);
      values.data[i] = saved;
      const double numeric = (fp - fm) / (2.0 * step);
      const double rel = std::fabs(analytic.data[i] - numeric) /
                         std::max(1.0, std::fabs(analytic.data[i]));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace amd::nd
