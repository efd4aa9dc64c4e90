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

#include "amdtraj/checkpoint.hpp"
#include "amdtraj/error.hpp"
#include "amdtraj/graph.hpp"
#include "amdtraj/random.hpp"

using namespace amd;
using nd::Array;
using nd::Graph;

namespace {

Array random_array(nd::Shape shape, Rng& rng, double lo = -2.0, double hi = 2.0) {
  Array a = Array::zeros(shape);
  for (double& v : a.data) v = rng.uniform(lo, hi);
  return a;
}

}  // namespace

TEST_CASE("matmul against identity") {
  Graph g;
  int x = g.input("x", {1, 2});
  int w = g.parameter("w", {2, 2});
  g.mark_output("y", g.matmul(x, w));
  nd::ParamStore params{{"w", Array({2, 2}, {1, 0, 0, 1})}};
  auto out = nd::evaluate(g, params, {{"x", Array::row({1, 2})}});
  CHECK(out["y"].data == std::vector<double>{1, 2});
}

TEST_CASE("softmax of equal logits is uniform") {
  Graph g;
  int x = g.input("x", {1, 2});
  g.mark_output("y", g.softmax(x));
  auto out = nd::evaluate(g, {}, {{"x", Array::row({0, 0})}});
  CHECK(out["y"].data[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out["y"].data[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("sum of squares forward and gradient") {
  Graph g;
  int x = g.parameter("x", {1, 3});
  g.mark_output("y", g.reduce_sum(g.mul(x, x)));
  nd::ParamStore params{{"x", Array::row({1, 2, 3})}};
  nd::Executor ex(g);
  ex.run(params);
  CHECK(ex.output("y").data[0] == doctest::Approx(14.0).epsilon(1e-15));
  nd::GradTape tape = ex.backward("y", Array::scalar(1.0));
  CHECK(tape.grad("x").data == std::vector<double>{2, 4, 6});
}

TEST_CASE("gradient of a constant w.r.t. any parameter is zero") {
  Graph g;
  g.parameter("w", {2, 2});
  g.mark_output("y", g.reduce_sum(g.constant(Array::row({5, 5}))));
  nd::ParamStore params{{"w", Array::zeros({2, 2})}};
  nd::Executor ex(g);
  ex.run(params);
  nd::GradTape tape = ex.backward("y", Array::scalar(1.0));
  CHECK(tape.grad("w").data == std::vector<double>(4, 0.0));
}

TEST_CASE("two-layer tanh mlp matches finite differences") {
  Graph g;
  int x = g.input("x", {1, 4});
  int h = g.tanh(g.add(g.matmul(x, g.parameter("w1", {4, 8})),
                       g.parameter("b1", {1, 8})));
  int y = g.tanh(g.add(g.matmul(h, g.parameter("w2", {8, 2})),
                       g.parameter("b2", {1, 2})));
  g.mark_output("loss", g.reduce_sum(g.mul(y, y)));

  Rng rng(17);
  nd::ParamStore params{{"w1", random_array({4, 8}, rng)},
                        {"b1", random_array({1, 8}, rng)},
                        {"w2", random_array({8, 2}, rng)},
                        {"b2", random_array({1, 2}, rng)}};
  double err = nd::grad_check(g, "loss", {{"x", random_array({1, 4}, rng)}},
                              params, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("grad_check is near-exact for a linear graph") {
  Graph g;
  int x = g.input("x", {1, 3});
  int w = g.parameter("w", {3, 1});
  g.mark_output("y", g.reduce_sum(g.matmul(x, w)));
  Rng rng(3);
  nd::ParamStore params{{"w", random_array({3, 1}, rng)}};
  double err = nd::grad_check(g, "y", {{"x", random_array({1, 3}, rng)}},
                              params, 1e-5);
  CHECK(err < 1e-10);
}

TEST_CASE("grad_check on a width-8 depth-2 random mlp") {
  Graph g;
  int x = g.input("x", {1, 8});
  int h1 = g.tanh(g.add(g.matmul(x, g.parameter("w1", {8, 8})),
                        g.parameter("b1", {1, 8})));
  int h2 = g.sigmoid(g.add(g.matmul(h1, g.parameter("w2", {8, 8})),
                           g.parameter("b2", {1, 8})));
  g.mark_output("loss", g.reduce_mean(g.mul(h2, h2)));
  Rng rng(11);
  nd::ParamStore params{{"w1", random_array({8, 8}, rng)},
                        {"b1", random_array({1, 8}, rng)},
                        {"w2", random_array({8, 8}, rng)},
                        {"b2", random_array({1, 8}, rng)}};
  CHECK(nd::grad_check(g, "loss", {{"x", random_array({1, 8}, rng)}}, params,
                       1e-5) < 1e-4);
}

TEST_CASE("grad_check through softmax + log composite") {
  Graph g;
  int x = g.input("x", {1, 6});
  int w = g.parameter("w", {6, 6});
  int logits = g.matmul(x, w);
  g.mark_output("loss", g.neg(g.reduce_mean(g.log(g.softmax(logits)))));
  Rng rng(23);
  nd::ParamStore params{{"w", random_array({6, 6}, rng)}};
  CHECK(nd::grad_check(g, "loss", {{"x", random_array({1, 6}, rng)}}, params,
                       1e-5) < 1e-4);
}

TEST_CASE("every op matches finite differences on random inputs") {
  Rng rng(99);
  // Each lambda embeds one op into a scalar graph over parameter p.
  // Inputs to log are shifted positive.
  struct Case {
    const char* name;
    std::function<int(Graph&, int)> body;
    double lo, hi;
  };
  std::vector<Case> cases = {
      {"matmul", [](Graph& g, int p) {
         return g.matmul(p, g.constant(Array({3, 2}, {1, 2, -1, 0.5, 3, -2})));
       }, -2, 2},
      {"matmul_ta", [](Graph& g, int p) {
         return g.matmul(p, g.constant(Array({3, 2}, {1, 2, -1, 0.5, 3, -2})),
                         true, false);
       }, -2, 2},
      {"matmul_tb", [](Graph& g, int p) {
         return g.matmul(p, g.constant(Array({4, 3}, {1, 2, -1, 0.5, 3, -2, 0.1,
                                                      1.5, -0.7, 2, 0, 1})),
                         false, true);
       }, -2, 2},
      {"matmul_tatb", [](Graph& g, int p) {
         return g.matmul(p, g.constant(Array({4, 2}, {1, 2, -1, 0.5, 3, -2, 0, 1})),
                         true, true);
       }, -2, 2},
      {"add", [](Graph& g, int p) { return g.add(p, p); }, -2, 2},
      {"mul", [](Graph& g, int p) { return g.mul(p, p); }, -2, 2},
      {"tanh", [](Graph& g, int p) { return g.tanh(p); }, -2, 2},
      {"sigmoid", [](Graph& g, int p) { return g.sigmoid(p); }, -2, 2},
      {"relu", [](Graph& g, int p) { return g.relu(p); }, -2, 2},
      {"softmax", [](Graph& g, int p) { return g.softmax(p); }, -2, 2},
      {"log", [](Graph& g, int p) { return g.log(p); }, 0.5, 2.5},
      {"exp", [](Graph& g, int p) { return g.exp(p); }, -2, 2},
      {"concat0", [](Graph& g, int p) {
         return g.concat({p, g.constant(Array({1, 3}, {1, 2, 3}))}, 0);
       }, -2, 2},
      {"concat1", [](Graph& g, int p) {
         return g.concat({p, g.mul(p, p)}, 1);
       }, -2, 2},
      {"slice", [](Graph& g, int p) { return g.slice(p, 1, 1, 2); }, -2, 2},
      {"reduce_sum", [](Graph& g, int p) { return g.reduce_sum(p); }, -2, 2},
      {"reduce_mean", [](Graph& g, int p) { return g.reduce_mean(p); }, -2, 2},
      {"layer_norm", [](Graph& g, int p) {
         return g.layer_norm(p, g.constant(Array::row({1.5, 0.5, 2.0})),
                             g.constant(Array::row({0.1, -0.2, 0.3})));
       }, -2, 2},
      {"reshape", [](Graph& g, int p) { return g.reshape(p, {3, 1}); }, -2, 2},
  };
  for (const Case& c : cases) {
    CAPTURE(c.name);
    nd::Shape shape = std::string(c.name).rfind("matmul", 0) == 0
                          ? nd::Shape{2, 3}
                          : nd::Shape{1, 3};
    if (std::string(c.name) == "matmul_ta") shape = {3, 2};
    if (std::string(c.name) == "matmul_tatb") shape = {2, 3};
    Graph g;
    int p = g.parameter("p", shape);
    int y = c.body(g, p);
    // tanh keeps the scalar reduction well-conditioned for large outputs
    g.mark_output("loss", g.reduce_sum(g.tanh(y)));
    nd::ParamStore params{{"p", random_array(shape, rng, c.lo, c.hi)}};
    const double err = nd::grad_check(g, "loss", {}, params, 1e-5);
    CHECK_MESSAGE(err < 1e-4, c.name);
  }
}

TEST_CASE("evaluate is pure: identical inputs give bit-identical outputs") {
  Graph g;
  int x = g.input("x", {2, 4});
  int w = g.parameter("w", {4, 4});
  int h = g.layer_norm(g.tanh(g.matmul(x, w)),
                       g.constant(Array::full({1, 4}, 1.0)),
                       g.constant(Array::zeros({1, 4})));
  g.mark_output("y", g.softmax(h));
  Rng rng(5);
  nd::ParamStore params{{"w", random_array({4, 4}, rng)}};
  Array in = random_array({2, 4}, rng);
  auto a = nd::evaluate(g, params, {{"x", in}});
  auto b = nd::evaluate(g, params, {{"x", in}});
  CHECK(a["y"].data == b["y"].data);
}

TEST_CASE("backward of a sum equals the sum of separate gradients") {
  Rng rng(31);
  Array w0 = random_array({3, 3}, rng);
  Array x = random_array({1, 3}, rng);

  auto build_branch = [&](int which, Graph& g, int p) {
    int xc = g.constant(x);
    int h = g.matmul(xc, p);
    return which == 0 ? g.reduce_sum(g.tanh(h)) : g.reduce_sum(g.mul(h, h));
  };

  std::vector<Array> grads;
  for (int which = 0; which < 2; ++which) {
    Graph g;
    int p = g.parameter("w", {3, 3});
    g.mark_output("y", build_branch(which, g, p));
    nd::Executor ex(g);
    ex.run({{"w", w0}});
    grads.push_back(ex.backward("y", Array::scalar(1.0)).grad("w"));
  }

  Graph g;
  int p = g.parameter("w", {3, 3});
  g.mark_output("y", g.add(build_branch(0, g, p), build_branch(1, g, p)));
  nd::Executor ex(g);
  ex.run({{"w", w0}});
  Array combined = ex.backward("y", Array::scalar(1.0)).grad("w");
  for (size_t i = 0; i < combined.data.size(); ++i) {
    CHECK(combined.data[i] ==
          doctest::Approx(grads[0].data[i] + grads[1].data[i]).epsilon(1e-12));
  }
}

TEST_CASE("shape mismatch reports the offending construction") {
  Graph g;
  int a = g.input("a", {1, 3});
  int b = g.input("b", {1, 4});
  CHECK_THROWS_AS(g.add(a, b), ShapeError);
  CHECK_THROWS_AS(g.matmul(a, b), ShapeError);
}

TEST_CASE("non-finite values raise a numeric error naming the node") {
  Graph g;
  int x = g.input("x", {1, 2});
  g.mark_output("y", g.log(x));
  nd::Executor ex(g);
  ex.bind("x", Array::row({-1.0, 1.0}));  // log of a negative -> NaN
  CHECK_THROWS_WITH_AS(ex.run({}),
                       doctest::Contains("log"), NumericError);
}

TEST_CASE("backward before evaluate is a usage error") {
  Graph g;
  int x = g.parameter("x", {1, 2});
  g.mark_output("y", g.reduce_sum(x));
  nd::Executor ex(g);
  CHECK_THROWS_AS(ex.backward("y", Array::scalar(1.0)), UsageError);
}

TEST_CASE("grad_check rejects an out-of-range step") {
  Graph g;
  int x = g.parameter("x", {1, 1});
  g.mark_output("y", g.reduce_sum(x));
  nd::ParamStore params{{"x", Array::scalar(1.0)}};
  CHECK_THROWS_AS(nd::grad_check(g, "y", {}, params, 0.0), UsageError);
  CHECK_THROWS_AS(nd::grad_check(g, "y", {}, params, 0.1), UsageError);
}

TEST_CASE("rebind recomputes exactly like a fresh run") {
  Graph g;
  int x = g.input("x", {1, 3});
  int gate = g.input("gate", {1, 1});
  int w = g.parameter("w", {3, 3});
  int h = g.tanh(g.matmul(x, w));
  g.mark_output("y", g.mul(g.reduce_sum(g.mul(h, h)), gate));
  Rng rng(41);
  nd::ParamStore params{{"w", random_array({3, 3}, rng)}};
  Array xin = random_array({1, 3}, rng);

  nd::Executor ex(g);
  ex.bind("x", xin);
  ex.bind("gate", Array::scalar(0.0));
  ex.run(params);
  ex.rebind("gate", Array::scalar(1.0));

  nd::Executor fresh(g);
  fresh.bind("x", xin);
  fresh.bind("gate", Array::scalar(1.0));
  fresh.run(params);
  CHECK(ex.output("y").data == fresh.output("y").data);

  nd::GradTape t1 = ex.backward("y", Array::scalar(1.0));
  nd::GradTape t2 = fresh.backward("y", Array::scalar(1.0));
  CHECK(t1.grad("w").data == t2.grad("w").data);
}

TEST_CASE("checkpoint round-trips a parameter store byte-exactly") {
  Rng rng(53);
  nd::ParamStore params{{"enc.w", random_array({4, 6}, rng)},
                        {"enc.b", random_array({1, 6}, rng)},
                        {"head", random_array({6, 2}, rng)}};
  const std::string path = "ckpt_test.amdc";
  nd::save_checkpoint(params, path);
  nd::ParamStore loaded = nd::load_checkpoint(path);
  REQUIRE(loaded.size() == params.size());
  for (const auto& [name, value] : params) {
    CHECK(loaded.at(name) == value);
  }
  std::remove(path.c_str());
}

TEST_CASE("truncated checkpoint is rejected") {
  nd::ParamStore params{{"w", Array::row({1, 2, 3})}};
  const std::string path = "ckpt_trunc.amdc";
  nd::save_checkpoint(params, path);
  // chop the file mid-record
  {
    std::ifstream is(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(is)),
                      std::istreambuf_iterator<char>());
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 7));
  }
  CHECK_THROWS_AS(nd::load_checkpoint(path), IoError);
  std::remove(path.c_str());
}
