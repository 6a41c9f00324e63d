#include <doctest.h>

#include <functional>

#include "hawkes/autodiff.hpp"
#include "hawkes/rng.hpp"

using namespace hawkes;
using ad::Matrix;
using ad::Var;

namespace {

Matrix random_matrix(long r, long c, std::uint64_t seed) {
  BaseNoise noise(seed);
  Matrix m(r, c);
  std::uint64_t idx = 0;
  for (long i = 0; i < r; ++i)
    for (long j = 0; j < c; ++j) m(i, j) = 2.0 * noise.uniform(Channel::Generic, idx++) - 1.0;
  return m;
}

// Central finite differences of a scalar-valued function of one matrix.
Matrix fd_gradient(const std::function<double(const Matrix&)>& f, Matrix at, double h = 1e-6) {
  Matrix g(at.rows(), at.cols());
  for (long i = 0; i < at.rows(); ++i)
    for (long j = 0; j < at.cols(); ++j) {
      double keep = at(i, j);
      at(i, j) = keep + h;
      double fp = f(at);
      at(i, j) = keep - h;
      double fm = f(at);
      at(i, j) = keep;
      g(i, j) = (fp - fm) / (2.0 * h);
    }
  return g;
}

void check_close(const Matrix& a, const Matrix& b, double tol) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  for (long i = 0; i < a.rows(); ++i)
    for (long j = 0; j < a.cols(); ++j)
      CHECK(std::abs(a(i, j) - b(i, j)) <= tol * std::max(1.0, std::abs(b(i, j))));
}

// A small expression exercising every op used by the critic.
Var test_expression(const Var& a, const Var& b) {
  Var m = ad::matmul(a, b);                       // 3x2
  Var s = ad::sigmoid(m);
  Var t = ad::tanh_(m);
  Var prod = ad::cmul(s, t);
  Var row = ad::constant(Matrix::Ones(1, 2) * 0.3);
  Var br = ad::add_row(prod, row);
  Var sq = ad::sqrt_(ad::add_scalar(ad::cmul(br, br), 1e-3));
  Var rs = ad::row_sum(sq);                       // 3x1
  Var div = ad::cdiv(rs, ad::add_scalar(rs, 2.0));
  return ad::sum_all(ad::sub(ad::scale(div, 1.7), ad::neg(ad::scale(rs, 0.1))));
}

}  // namespace

TEST_CASE("op values") {
  Var a = ad::constant((Matrix(2, 2) << 1, 2, 3, 4).finished());
  Var b = ad::constant((Matrix(2, 2) << 5, 6, 7, 8).finished());
  CHECK(ad::add(a, b)->value(0, 0) == 6);
  CHECK(ad::sub(a, b)->value(1, 1) == -4);
  CHECK(ad::matmul(a, b)->value(0, 0) == 19);
  CHECK(ad::cmul(a, b)->value(1, 0) == 21);
  CHECK(ad::sum_all(a)->value(0, 0) == 10);
  CHECK(ad::row_sum(a)->value(0, 0) == 3);
  CHECK(ad::col_sum(a)->value(0, 1) == 6);
  CHECK(ad::transpose(a)->value(0, 1) == 3);
  CHECK(ad::sigmoid(ad::scalar(0.0))->value(0, 0) == doctest::Approx(0.5));
  CHECK(ad::tanh_(ad::scalar(100.0))->value(0, 0) == doctest::Approx(1.0));
  CHECK(ad::sqrt_(ad::scalar(9.0))->value(0, 0) == doctest::Approx(3.0));
}

TEST_CASE("shape mismatches are structural errors") {
  Var a = ad::constant(Matrix::Zero(2, 3));
  Var b = ad::constant(Matrix::Zero(2, 2));
  CHECK_THROWS_AS((void)ad::add(a, b), DataError);
  CHECK_THROWS_AS((void)ad::matmul(a, b), DataError);
  CHECK_THROWS_AS((void)ad::backward(ad::constant(Matrix::Zero(2, 2)), {}), DataError);
}

TEST_CASE("first-order gradients match finite differences") {
  Matrix a0 = random_matrix(3, 4, 11);
  Matrix b0 = random_matrix(4, 2, 12);

  auto value_at = [&](const Matrix& a, const Matrix& b) {
    Var va = ad::leaf(a), vb = ad::leaf(b);
    return test_expression(va, vb)->value(0, 0);
  };

  Var va = ad::leaf(a0), vb = ad::leaf(b0);
  Var root = test_expression(va, vb);
  auto grads = ad::backward(root, {va, vb});

  check_close(grads[0]->value,
              fd_gradient([&](const Matrix& a) { return value_at(a, b0); }, a0), 2e-6);
  check_close(grads[1]->value,
              fd_gradient([&](const Matrix& b) { return value_at(a0, b); }, b0), 2e-6);
}

TEST_CASE("gradient of a gradient (double backward) matches finite differences") {
  Matrix a0 = random_matrix(2, 3, 21);
  Matrix b0 = random_matrix(3, 2, 22);

  // s(a) = sum of squares of d f / d a; differentiate s w.r.t. a again.
  auto s_at = [&](const Matrix& a) {
    Var va = ad::leaf(a), vb = ad::leaf(b0);
    Var f = test_expression(va, vb);
    Var g = ad::backward(f, {va})[0];
    return ad::sum_all(ad::cmul(g, g))->value(0, 0);
  };

  Var va = ad::leaf(a0), vb = ad::leaf(b0);
  Var f = test_expression(va, vb);
  Var g = ad::backward(f, {va})[0];
  Var s = ad::sum_all(ad::cmul(g, g));
  Var dsda = ad::backward(s, {va})[0];

  check_close(dsda->value, fd_gradient(s_at, a0, 1e-5), 5e-5);
}

TEST_CASE("gradients accumulate across shared subexpressions") {
  Matrix x0 = random_matrix(2, 2, 31);
  Var x = ad::leaf(x0);
  Var y = ad::add(ad::cmul(x, x), ad::scale(x, 3.0));  // y = x^2 + 3x elementwise
  Var root = ad::sum_all(y);
  Matrix g = ad::backward(root, {x})[0]->value;
  for (long i = 0; i < 2; ++i)
    for (long j = 0; j < 2; ++j)
      CHECK(g(i, j) == doctest::Approx(2.0 * x0(i, j) + 3.0));
}

TEST_CASE("backward returns zeros for unreachable leaves") {
  Var x = ad::leaf(Matrix::Ones(2, 2));
  Var unrelated = ad::leaf(Matrix::Ones(3, 3));
  Var root = ad::sum_all(x);
  Matrix g = ad::backward(root, {unrelated})[0]->value;
  CHECK(g.rows() == 3);
  CHECK(g.norm() == 0.0);
}
