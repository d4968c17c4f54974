#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "mgcn/errors.hpp"
#include "mgcn/gradcheck.hpp"
#include "mgcn/graph.hpp"
#include "mgcn/optim.hpp"
#include "mgcn/rng.hpp"
#include "mgcn/tensor.hpp"
#include "oracles.hpp"

using namespace mgcn;

namespace {

// Finite-difference oracle over a single leaf through sum(fn(x)).
double fd_check(Mat x0, const std::function<DiffValue(const DiffValue&)>& fn,
                double eps = 1e-4) {
  std::vector<Parameter> params = {{"x", DiffValue::leaf(x0, true)}};
  auto loss_fn = [&]() { return sum_all(fn(params[0].value)); };
  return finite_diff_check(loss_fn, params, eps).max_rel_error;
}

}  // namespace

TEST_CASE("matmul forward matches hand arithmetic and the identity") {
  Mat a(2, 2);
  a << 1, 2, 3, 4;
  Mat ones(2, 1);
  ones << 1, 1;
  DiffValue r = matmul(DiffValue::leaf(a), DiffValue::leaf(ones));
  CHECK(r.data()(0, 0) == 3.0);
  CHECK(r.data()(1, 0) == 7.0);

  Mat x = oracle::random_mat(2, 5, 1);
  DiffValue rx = matmul(DiffValue::leaf(Mat::Identity(2, 2)), DiffValue::leaf(x));
  CHECK((rx.data() - x).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("matmul matches the scalar oracle and finite differences") {
  Mat a = oracle::random_mat(4, 3, 2), b = oracle::random_mat(3, 2, 3);
  DiffValue r = matmul(DiffValue::leaf(a), DiffValue::leaf(b));
  CHECK((r.data() - oracle::matmul(a, b)).cwiseAbs().maxCoeff() < 1e-14);

  std::vector<Parameter> params = {{"a", DiffValue::leaf(a, true)},
                                   {"b", DiffValue::leaf(b, true)}};
  auto loss_fn = [&]() {
    return sum_all(matmul(params[0].value, params[1].value));
  };
  CHECK(finite_diff_check(loss_fn, params, 1e-4).max_rel_error < 1e-6);
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
  CHECK_THROWS_AS(matmul(DiffValue::leaf(Mat::Zero(2, 3)),
                         DiffValue::leaf(Mat::Zero(2, 3))),
                  ConfigError);
}

TEST_CASE("spmm on an isolated node is the identity") {
  Graph g = Graph::from_edges(1, {});
  NormAdj s = normalize_adjacency(g);
  Mat x(1, 1);
  x << 7;
  DiffValue r = spmm(s, DiffValue::leaf(x));
  CHECK(r.data()(0, 0) == 7.0);
}

TEST_CASE("spmm equals the densified product and passes finite differences") {
  Graph g = oracle::random_graph(10, 0.3, 21);
  NormAdj s = normalize_adjacency(g);
  Mat x = oracle::random_mat(10, 4, 22);
  DiffValue r = spmm(s, DiffValue::leaf(x));
  Mat ref = oracle::matmul(oracle::densify(s), x);
  CHECK((r.data() - ref).cwiseAbs().maxCoeff() < 1e-12);

  Graph g8 = oracle::random_graph(8, 0.4, 23);
  NormAdj s8 = normalize_adjacency(g8);
  CHECK(fd_check(oracle::random_mat(8, 3, 24),
                 [&](const DiffValue& v) { return spmm(s8, v); }) < 1e-6);
}

TEST_CASE("add broadcasts a bias row and differentiates both routes") {
  Mat x = oracle::random_mat(5, 3, 30), b = oracle::random_mat(1, 3, 31);
  DiffValue r = add(DiffValue::leaf(x), DiffValue::leaf(b));
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 3; ++j) CHECK(r.data()(i, j) == x(i, j) + b(0, j));

  std::vector<Parameter> params = {{"x", DiffValue::leaf(x, true)},
                                   {"b", DiffValue::leaf(b, true)}};
  auto loss_fn = [&]() { return sum_all(add(params[0].value, params[1].value)); };
  CHECK(finite_diff_check(loss_fn, params, 1e-4).max_rel_error < 1e-9);

  CHECK_THROWS_AS(add(DiffValue::leaf(Mat::Zero(2, 3)),
                      DiffValue::leaf(Mat::Zero(4, 3))),
                  ConfigError);
}

TEST_CASE("relu clips negatives and differentiates off the kink") {
  Mat x(1, 3);
  x << -1, 0, 2;
  DiffValue r = relu(DiffValue::leaf(x));
  CHECK(r.data()(0, 0) == 0.0);
  CHECK(r.data()(0, 1) == 0.0);
  CHECK(r.data()(0, 2) == 2.0);

  // Jitter test points away from 0 so central differences are meaningful.
  Mat y = oracle::random_mat(4, 4, 32);
  for (Index i = 0; i < y.size(); ++i)
    if (std::abs(y.data()[i]) < 1e-2) y.data()[i] = 0.1;
  CHECK(fd_check(y, [](const DiffValue& v) { return relu(v); }) < 1e-6);
}

TEST_CASE("scale multiplies and differentiates") {
  Mat x = oracle::random_mat(3, 3, 33);
  DiffValue r = scale(DiffValue::leaf(x), -2.5);
  // FMA contraction can leave a one-ulp residual in the compound check.
  CHECK((r.data() + 2.5 * x).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(fd_check(x, [](const DiffValue& v) { return scale(v, -2.5); }) < 1e-9);
}

TEST_CASE("dropout at rate zero is the identity and draws nothing") {
  Rng rng(1);
  double sentinel_next = Rng(1).uniform();
  Mat x = oracle::random_mat(3, 3, 34);
  DiffValue v = DiffValue::leaf(x);
  DiffValue r = dropout(v, 0.0, rng, true);
  CHECK(r.node() == v.node());  // same graph node, not a copy
  CHECK(rng.uniform() == sentinel_next);
}

TEST_CASE("dropout in eval mode is the identity and draws nothing") {
  Rng rng(2);
  double sentinel_next = Rng(2).uniform();
  DiffValue v = DiffValue::leaf(oracle::random_mat(3, 3, 35));
  DiffValue r = dropout(v, 0.5, rng, false);
  CHECK(r.node() == v.node());
  CHECK(rng.uniform() == sentinel_next);
}

TEST_CASE("dropout keeps about half the entries and preserves the mean") {
  Rng rng(3);
  Mat x = Mat::Ones(100, 100);
  DiffValue r = dropout(DiffValue::leaf(x), 0.5, rng, true);
  int survivors = 0;
  double sum = 0;
  for (Index i = 0; i < r.data().size(); ++i) {
    double e = r.data().data()[i];
    if (e != 0.0) {
      ++survivors;
      CHECK(e == 2.0);  // survivors rescaled by 1/(1-rate)
    }
    sum += e;
  }
  double frac = survivors / 1e4;
  CHECK(frac > 0.45);
  CHECK(frac < 0.55);
  CHECK(std::abs(sum / 1e4 - 1.0) < 0.05);
}

TEST_CASE("dropout rejects rates outside [0,1)") {
  Rng rng(4);
  DiffValue v = DiffValue::leaf(Mat::Zero(1, 1));
  CHECK_THROWS_AS(dropout(v, 1.0, rng, true), ConfigError);
  CHECK_THROWS_AS(dropout(v, -0.1, rng, true), ConfigError);
}

TEST_CASE("row normalization matches hand values and guards zero rows") {
  Mat x(2, 2);
  x << 3, 4, 0, 0;
  DiffValue r = row_l2_normalize(DiffValue::leaf(x));
  CHECK(r.data()(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(r.data()(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(r.data()(1, 0) == 0.0);
  CHECK(r.data()(1, 1) == 0.0);
  CHECK(std::isfinite(r.data().sum()));

  CHECK(fd_check(oracle::random_mat(5, 4, 36),
                 [](const DiffValue& v) { return row_l2_normalize(v); }) < 1e-5);
}

TEST_CASE("softmax is stable, uniform on zeros, and rows sum to one") {
  Mat zeros = Mat::Zero(1, 2);
  DiffValue u = softmax_rows(DiffValue::leaf(zeros));
  CHECK(u.data()(0, 0) == 0.5);
  CHECK(u.data()(0, 1) == 0.5);

  Mat big(1, 2);
  big << 1000, 0;
  DiffValue s = softmax_rows(DiffValue::leaf(big));
  CHECK(std::isfinite(s.data()(0, 0)));
  CHECK(s.data()(0, 0) > 1.0 - 1e-12);
  CHECK(s.data()(0, 1) < 1e-12);

  Mat x = oracle::random_mat(6, 5, 37, -3, 3);
  DiffValue r = softmax_rows(DiffValue::leaf(x));
  for (Index i = 0; i < 6; ++i)
    CHECK(std::abs(r.data().row(i).sum() - 1.0) < 1e-12);
}

TEST_CASE("cross entropy matches hand arithmetic") {
  Mat hit(1, 2);
  hit << 1, 0;
  DiffValue zero_loss = cross_entropy(DiffValue::leaf(hit), hit);
  CHECK(std::abs(zero_loss.scalar_value()) < 1e-11);

  Mat half(1, 2);
  half << 0.5, 0.5;
  DiffValue ln2 = cross_entropy(DiffValue::leaf(half), hit);
  // The log guard adds 1e-12 inside the log, shifting ln 2 by ~3e-12 relative.
  CHECK(ln2.scalar_value() == doctest::Approx(std::log(2.0)).epsilon(1e-10));
  CHECK(ln2.scalar_value() >= -1e-9);  // nonnegative up to the log guard

  CHECK_THROWS_AS(cross_entropy(DiffValue::leaf(Mat::Zero(2, 2)), Mat::Zero(3, 2)),
                  ConfigError);
}

TEST_CASE("softmax plus cross entropy passes finite differences") {
  Mat logits = oracle::random_mat(6, 3, 38, -2, 2);
  Mat target = Mat::Zero(6, 3);
  for (Index i = 0; i < 6; ++i) target(i, i % 3) = 1.0;
  std::vector<Parameter> params = {{"logits", DiffValue::leaf(logits, true)}};
  auto loss_fn = [&]() {
    return cross_entropy(softmax_rows(params[0].value), target);
  };
  CHECK(finite_diff_check(loss_fn, params, 1e-4).max_rel_error < 1e-5);
}

TEST_CASE("select_rows gathers and accumulates duplicate ids") {
  Mat x = oracle::random_mat(5, 2, 39);
  DiffValue v = DiffValue::leaf(x, true);
  DiffValue r = select_rows(v, {4, 0, 4});
  CHECK(r.rows() == 3);
  CHECK((r.data().row(0) - x.row(4)).cwiseAbs().maxCoeff() == 0.0);
  DiffValue loss = sum_all(r);
  backward(loss);
  CHECK(v.grad()(4, 0) == 2.0);  // row 4 selected twice
  CHECK(v.grad()(0, 0) == 1.0);
  CHECK(v.grad()(1, 0) == 0.0);

  CHECK_THROWS_AS(select_rows(v, {9}), ConfigError);
}

TEST_CASE("backward of a plain sum seeds ones") {
  DiffValue x = DiffValue::leaf(oracle::random_mat(3, 4, 40), true);
  backward(sum_all(x));
  CHECK((x.grad() - Mat::Ones(3, 4)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backward of half the squared norm returns the point itself") {
  Mat x0 = oracle::random_mat(1, 6, 41);
  DiffValue x = DiffValue::leaf(x0, true);
  DiffValue loss = scale(matmul_nt(x, x), 0.5);  // 0.5 * x xT = 0.5 sum xi^2
  backward(loss);
  CHECK((x.grad() - x0).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("diamond graphs accumulate both paths") {
  Mat x0 = oracle::random_mat(2, 3, 42);
  for (Index i = 0; i < x0.size(); ++i)
    if (std::abs(x0.data()[i]) < 1e-2) x0.data()[i] = 0.2;
  DiffValue x = DiffValue::leaf(x0, true);
  DiffValue loss = sum_all(add(scale(x, 2.0), relu(x)));
  backward(loss);
  for (Index i = 0; i < 2; ++i)
    for (Index j = 0; j < 3; ++j)
      CHECK(x.grad()(i, j) == 2.0 + (x0(i, j) > 0 ? 1.0 : 0.0));

  std::vector<Parameter> params = {{"x", DiffValue::leaf(x0, true)}};
  auto loss_fn = [&]() {
    return sum_all(add(scale(params[0].value, 2.0), relu(params[0].value)));
  };
  CHECK(finite_diff_check(loss_fn, params, 1e-4).max_rel_error < 1e-6);
}

TEST_CASE("backward rejects non-scalars and repeated invocation") {
  DiffValue x = DiffValue::leaf(oracle::random_mat(2, 2, 43), true);
  CHECK_THROWS_AS(backward(x), ConfigError);
  DiffValue loss = sum_all(x);
  backward(loss);
  CHECK_THROWS_AS(backward(loss), ConfigError);
}

TEST_CASE("scalar_value rejects non-singleton tensors") {
  CHECK_THROWS_AS(DiffValue::leaf(Mat::Zero(2, 1)).scalar_value(), ConfigError);
}

TEST_CASE("adam leaves parameters alone when gradients vanish") {
  Mat w0 = oracle::random_mat(2, 2, 50);
  std::vector<Parameter> params = {{"w", DiffValue::leaf(w0, true)}};
  AdamState adam;
  params[0].value.grad();  // allocate zero gradient
  adam.step(params, 0.1, 0.0);
  CHECK((params[0].value.data() - w0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("the first adam step has magnitude lr in the large-gradient regime") {
  Mat w0(1, 1);
  w0 << 1.0;
  std::vector<Parameter> params = {{"w", DiffValue::leaf(w0, true)}};
  params[0].value.grad()(0, 0) = 0.5;
  AdamState adam;
  adam.step(params, 0.1, 0.0);
  CHECK(std::abs(1.0 - params[0].value.data()(0, 0) - 0.1) < 1e-6);
  CHECK(adam.step_count() == 1);
  // Gradients are zeroed after the step.
  CHECK(params[0].value.grad()(0, 0) == 0.0);
}

TEST_CASE("adam minimizes a quadratic within 200 steps") {
  Mat target = oracle::random_mat(1, 6, 51);
  std::vector<Parameter> params = {
      {"w", DiffValue::leaf(oracle::random_mat(1, 6, 52), true)}};
  AdamState adam;
  for (int t = 0; t < 200; ++t) {
    DiffValue d = add(params[0].value, DiffValue::leaf(-target));
    DiffValue loss = matmul_nt(d, d);
    backward(loss);
    adam.step(params, 0.05, 0.0);
  }
  CHECK((params[0].value.data() - target).norm() < 1e-2);
}

TEST_CASE("weight decay pulls toward zero and honors the opt-out") {
  Mat w0(1, 1);
  w0 << 4.0;
  std::vector<Parameter> params = {
      {"decayed", DiffValue::leaf(w0, true)},
      {"exempt", DiffValue::leaf(w0, true), true, /*decay=*/false}};
  params[0].value.grad();  // zero gradient: only decay acts
  params[1].value.grad();
  AdamState adam;
  adam.step(params, 0.1, 5e-4);
  CHECK(params[0].value.data()(0, 0) < 4.0);
  CHECK(params[1].value.data()(0, 0) == 4.0);
}

TEST_CASE("duplicate parameter names are rejected") {
  std::vector<Parameter> params = {{"w", DiffValue::leaf(Mat::Zero(1, 1), true)},
                                   {"w", DiffValue::leaf(Mat::Zero(1, 1), true)}};
  CHECK_THROWS_AS(check_unique_names(params), ConfigError);
}

TEST_CASE("the finite-difference checker is exact on quadratics") {
  Mat x0 = oracle::random_mat(1, 5, 53);
  std::vector<Parameter> params = {{"x", DiffValue::leaf(x0, true)}};
  auto loss_fn = [&]() { return matmul_nt(params[0].value, params[0].value); };
  CHECK(finite_diff_check(loss_fn, params, 1e-4).max_rel_error < 1e-9);
}

TEST_CASE("the finite-difference checker flags a doubled gradient") {
  Mat x0 = oracle::random_mat(1, 5, 54);
  std::vector<Parameter> params = {{"x", DiffValue::leaf(x0, true)}};
  auto loss_fn = [&]() { return matmul_nt(params[0].value, params[0].value); };
  double err = finite_diff_check(loss_fn, params, 1e-4, 2.0).max_rel_error;
  CHECK(err > 0.45);
  CHECK(err < 0.55);
}
