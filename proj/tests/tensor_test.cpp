#include "hgn/tensor.hpp"

#include <cmath>

#include "doctest.h"

using namespace hgn;

namespace {

Tensor random_tensor(std::size_t r, std::size_t c, Rng& rng, bool rg = true) {
  Tensor t = Tensor::uniform(r, c, -1.0, 1.0, rng);
  t.requires_grad = rg;
  return t;
}

// reduce an arbitrary matrix to a scalar as sum_ij c_ij m_ij with fixed
// distinct coefficients, so constant-sum outputs (softmax rows) still get a
// non-trivial gradient
Var tape_sum(Tape& t, Var v) {
  const Tensor& m = t.value(v);
  Tensor coeff(m.rows, m.cols);
  for (std::size_t i = 0; i < coeff.size(); ++i)
    coeff.data[i] = 0.25 + 0.37 * static_cast<double>(i);
  Var weighted = t.mul(v, t.constant(coeff));
  Var left = t.constant(Tensor(1, m.rows, 1.0));
  Var right = t.constant(Tensor(m.cols, 1, 1.0));
  return t.matmul(t.matmul(left, weighted), right);
}

}  // namespace

TEST_CASE("matmul identity leaves input unchanged") {
  Tape tape;
  Rng rng(1);
  Tensor I(3, 3);
  for (std::size_t i = 0; i < 3; ++i) I.at(i, i) = 1.0;
  Tensor X = random_tensor(3, 4, rng, false);
  Var out = tape.matmul(tape.constant(I), tape.constant(X));
  for (std::size_t i = 0; i < X.size(); ++i)
    CHECK(tape.value(out).data[i] == doctest::Approx(X.data[i]).epsilon(1e-15));
}

TEST_CASE("matmul 3x2 * 2x4 against hand multiplication") {
  Tape tape;
  Var a = tape.constant(Tensor::from({{1, 2}, {3, 4}, {5, 6}}));
  Var b = tape.constant(Tensor::from({{1, 0, 2, 1}, {0, 1, 1, 2}}));
  Var c = tape.matmul(a, b);
  Tensor expected = Tensor::from({{1, 2, 4, 5}, {3, 4, 10, 11}, {5, 6, 16, 17}});
  REQUIRE(tape.value(c).rows == 3);
  REQUIRE(tape.value(c).cols == 4);
  for (std::size_t i = 0; i < expected.size(); ++i)
    CHECK(tape.value(c).data[i] == expected.data[i]);
}

TEST_CASE("matmul rejects mismatched shapes with shapes in the message") {
  Tape tape;
  Var a = tape.constant(Tensor(3, 2));
  Var b = tape.constant(Tensor(4, 4));
  try {
    tape.matmul(a, b);
    FAIL("expected throw");
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    CHECK(msg.find("3x2") != std::string::npos);
    CHECK(msg.find("4x4") != std::string::npos);
  }
}

TEST_CASE("concat_cols sums widths, concat_rows sums heights") {
  Tape tape;
  Var a = tape.constant(Tensor(2, 3, 1.0));
  Var b = tape.constant(Tensor(2, 5, 2.0));
  Var c = tape.concat_cols(a, b);
  CHECK(tape.value(c).rows == 2);
  CHECK(tape.value(c).cols == 8);
  CHECK(tape.value(c).at(0, 2) == 1.0);
  CHECK(tape.value(c).at(0, 3) == 2.0);

  Var d = tape.concat_rows(tape.constant(Tensor(2, 3, 1.0)), tape.constant(Tensor(4, 3, 2.0)));
  CHECK(tape.value(d).rows == 6);
  CHECK(tape.value(d).cols == 3);
}

TEST_CASE("weighted_sum combines rows by the given weights") {
  Tape tape;
  Var w = tape.constant(Tensor::from({{0.25, 0.75}}));
  Var rows = tape.constant(Tensor::from({{2.0, 4.0}, {6.0, 8.0}}));
  Var out = tape.weighted_sum(w, rows);
  CHECK(tape.value(out).at(0, 0) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(tape.value(out).at(0, 1) == doctest::Approx(7.0).epsilon(1e-15));
}

TEST_CASE("softmax of a constant row is uniform") {
  Tape tape;
  Var s = tape.softmax_row(tape.constant(Tensor::from({{2.5, 2.5, 2.5}})));
  for (std::size_t j = 0; j < 3; ++j)
    CHECK(tape.value(s).data[j] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("softmax([0, ln 3]) = [0.25, 0.75]") {
  Tape tape;
  Var s = tape.softmax_row(tape.constant(Tensor::from({{0.0, std::log(3.0)}})));
  CHECK(tape.value(s).data[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(tape.value(s).data[1] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one and are shift invariant") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    Tape tape;
    Tensor x = random_tensor(1, 7, rng, false);
    Tensor shifted = x;
    const double c = rng.uniform(-100.0, 100.0);
    for (double& v : shifted.data) v += c;
    Var s1 = tape.softmax_row(tape.constant(x));
    Var s2 = tape.softmax_row(tape.constant(shifted));
    double sum = 0.0;
    for (std::size_t j = 0; j < 7; ++j) {
      sum += tape.value(s1).data[j];
      CHECK(std::abs(tape.value(s1).data[j] - tape.value(s2).data[j]) < 1e-12);
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("leaky_relu on the negative side uses the slope") {
  Tape tape;
  Var y = tape.leaky_relu(tape.constant(Tensor::from({{-1.0, 2.0}})), 0.01);
  CHECK(tape.value(y).data[0] == doctest::Approx(-0.01).epsilon(1e-15));
  CHECK(tape.value(y).data[1] == 2.0);
}

TEST_CASE("d(x*y)/dx equals y") {
  Tape tape;
  Tensor tx(1, 1, 3.0);
  tx.requires_grad = true;
  Tensor ty(1, 1, -2.5);
  ty.requires_grad = true;
  Var x = tape.leaf(tx);
  Var y = tape.leaf(ty);
  Var p = tape.mul(x, y);
  tape.backward(p);
  CHECK(tape.grad(x).data[0] == -2.5);
  CHECK(tape.grad(y).data[0] == 3.0);
}

TEST_CASE("softmax cross-entropy gradient at uniform logits is p - onehot") {
  Tape tape;
  Tensor logits(1, 4, 0.0);
  logits.requires_grad = true;
  Var z = tape.leaf(logits);
  Var lp = tape.log(tape.softmax_row(z));
  Tensor onehot(4, 1);
  onehot.data[0] = 1.0;
  Var loss = tape.neg(tape.matmul(lp, tape.constant(onehot)));
  CHECK(tape.value(loss).data[0] == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  tape.backward(loss);
  Tensor g = tape.grad(z);
  CHECK(g.data[0] == doctest::Approx(-0.75).epsilon(1e-12));
  for (int j = 1; j < 4; ++j) CHECK(g.data[j] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("parameter not on the loss path gets zero gradient") {
  Tape tape;
  Tensor a(1, 1, 2.0);
  a.requires_grad = true;
  Tensor unused(2, 2, 1.0);
  unused.requires_grad = true;
  Var x = tape.leaf(a);
  Var u = tape.leaf(unused);
  Var loss = tape.mul(x, x);
  tape.backward(loss);
  CHECK(tape.grad(x).data[0] == 4.0);
  for (double v : tape.grad(u).data) CHECK(v == 0.0);
}

TEST_CASE("backward rejects non-scalar loss") {
  Tape tape;
  Tensor t(1, 3, 1.0);
  t.requires_grad = true;
  Var x = tape.leaf(t);
  CHECK_THROWS_AS(tape.backward(x), std::invalid_argument);
}

TEST_CASE("gather_rows with duplicate indices scatter-adds gradients") {
  Tape tape;
  Tensor t(3, 2, 1.0);
  t.requires_grad = true;
  Var x = tape.leaf(t);
  Var g = tape.gather_rows(x, {1, 1, 2});
  Var loss = tape.matmul(tape.mean_rows(g), tape.constant(Tensor(2, 1, 1.0)));
  tape.backward(loss);
  Tensor dx = tape.grad(x);
  CHECK(dx.at(0, 0) == 0.0);
  CHECK(dx.at(1, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(dx.at(2, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("grad_check on quadratic matches to machine precision") {
  Tensor theta = Tensor::from({{0.5, -1.25, 2.0}});
  theta.requires_grad = true;
  auto eval = [&]() {
    double s = 0.0;
    for (double v : theta.data) s += v * v;
    return s;
  };
  // analytic gradient of theta^T theta is 2 theta
  Tensor ana(1, 3);
  for (std::size_t i = 0; i < 3; ++i) ana.data[i] = 2.0 * theta.data[i];
  auto report = grad_check(eval, {{"theta", &theta}}, {{"theta", ana}}, 1e-4, 1e-10);
  CHECK(report.pass);
  CHECK(report.max_rel_err < 1e-10);
}

TEST_CASE("grad_check flags a corrupted gradient") {
  Tensor theta = Tensor::from({{0.5, -1.25}});
  auto eval = [&]() { return theta.data[0] * theta.data[0] + theta.data[1] * theta.data[1]; };
  Tensor ana(1, 2);
  ana.data[0] = 2.0 * theta.data[0] + 0.5;  // corrupted on purpose
  ana.data[1] = 2.0 * theta.data[1];
  auto report = grad_check(eval, {{"theta", &theta}}, {{"theta", ana}}, 1e-4, 1e-4);
  CHECK_FALSE(report.pass);
}

TEST_CASE("every op passes finite-difference checks in isolation") {
  Rng rng(7);
  auto check_unary = [&](const std::string& name, auto&& apply, std::size_t r, std::size_t c) {
    Tensor x = random_tensor(r, c, rng);
    auto eval = [&]() {
      Tape t;
      Var v = apply(t, t.leaf(x));
      // reduce to scalar by summing via matmul with ones
      Var flatsum =
          tape_sum(t, v);
      return t.value(flatsum).data[0];
    };
    Tape t;
    Var xv = t.leaf(x);
    Var out = apply(t, xv);
    Var loss = tape_sum(t, out);
    t.backward(loss);
    auto report = grad_check(eval, {{name, &x}}, {{name, t.grad(xv)}}, 1e-5, 1e-6);
    INFO(name);
    CHECK(report.pass);
  };
  check_unary("transpose", [](Tape& t, Var v) { return t.transpose(v); }, 3, 4);
  check_unary("mean_rows", [](Tape& t, Var v) { return t.mean_rows(v); }, 4, 3);
  check_unary("softmax", [](Tape& t, Var v) { return t.softmax_row(v); }, 2, 5);
  check_unary("tanh", [](Tape& t, Var v) { return t.tanh(v); }, 2, 3);
  check_unary("sigmoid", [](Tape& t, Var v) { return t.sigmoid(v); }, 2, 3);
  check_unary("exp", [](Tape& t, Var v) { return t.exp(v); }, 2, 3);
  check_unary("scale", [](Tape& t, Var v) { return t.scale(v, -1.7); }, 2, 3);
  check_unary("leaky", [](Tape& t, Var v) { return t.leaky_relu(v, 0.01); }, 3, 3);
  check_unary("gather", [](Tape& t, Var v) { return t.gather_rows(v, {0, 2, 2}); }, 3, 3);

  // binary ops
  Tensor a = random_tensor(3, 2, rng);
  Tensor b = random_tensor(2, 4, rng);
  auto eval_mm = [&]() {
    Tape t;
    Var out = t.matmul(t.leaf(a), t.leaf(b));
    return t.value(tape_sum(t, out)).data[0];
  };
  Tape t;
  Var av = t.leaf(a);
  Var bv = t.leaf(b);
  Var loss = tape_sum(t, t.matmul(av, bv));
  t.backward(loss);
  auto report = grad_check(eval_mm, {{"a", &a}, {"b", &b}},
                           {{"a", t.grad(av)}, {"b", t.grad(bv)}}, 1e-5, 1e-6);
  CHECK(report.pass);
}

TEST_CASE("composed expression matches finite differences") {
  Rng rng(99);
  Tensor w1 = random_tensor(4, 3, rng);
  Tensor w2 = random_tensor(3, 1, rng);
  Tensor x = random_tensor(2, 4, rng, false);
  auto forward = [&](Tape& t, Var& w1v, Var& w2v) {
    w1v = t.leaf(w1);
    w2v = t.leaf(w2);
    Var h = t.tanh(t.matmul(t.constant(x), w1v));
    Var o = t.sigmoid(t.matmul(h, w2v));
    return t.matmul(t.transpose(o), o);  // scalar
  };
  auto eval = [&]() {
    Tape t;
    Var a, b;
    return t.value(forward(t, a, b)).data[0];
  };
  Tape t;
  Var w1v, w2v;
  Var loss = forward(t, w1v, w2v);
  t.backward(loss);
  auto report = grad_check(eval, {{"w1", &w1}, {"w2", &w2}},
                           {{"w1", t.grad(w1v)}, {"w2", t.grad(w2v)}}, 1e-5, 1e-6);
  CHECK(report.pass);
}
