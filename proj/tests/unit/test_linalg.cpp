#include <doctest.h>

#include <cmath>
#include <random>

#include "geostate/linalg.hpp"
#include "oracles.hpp"

using namespace geostate;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST_CASE("det_abs_pow examples") {
  CHECK(det_abs_pow(Matrix::Identity(3, 3), 0.5) == Complex(1.0));
  CHECK(std::abs(det_abs_pow(mat({{2, 0}, {0, 3}}), 0.5) - std::sqrt(6.0)) < 1e-15);
  CHECK(det_abs_pow(mat({{1, 0}, {0, 0}}), 1.0) == Complex(0.0));
}

TEST_CASE("det_abs_pow rejects singular frames at nonpositive degree") {
  const Matrix singular = mat({{1, 2}, {2, 4}});
  CHECK_THROWS_AS(det_abs_pow(singular, 0.0), Error);
  CHECK_THROWS_AS(det_abs_pow(singular, -0.5), Error);
  try {
    det_abs_pow(singular, Complex(0.0, 1.0));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularFrame);
  }
}

TEST_CASE("det_abs_pow supports complex degrees") {
  const Matrix m = mat({{2, 0}, {0, 1}});
  const Complex alpha(0.5, 0.25);
  CHECK(std::abs(det_abs_pow(m, alpha) - std::exp(alpha * std::log(2.0))) < 1e-15);
}

TEST_CASE("det_abs_pow is multiplicative and additive in the degree") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> deg(-1.5, 2.5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 5;
    const Matrix m = oracles::random_nonsingular(rng, n);
    const Matrix k = oracles::random_nonsingular(rng, n);
    const Complex a(deg(rng), trial % 3 == 0 ? deg(rng) : 0.0);
    const Complex b(deg(rng), 0.0);
    const Complex lhs = det_abs_pow(m * k, a);
    const Complex rhs = det_abs_pow(m, a) * det_abs_pow(k, a);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(rhs));
    const Complex sum = det_abs_pow(m, a + b);
    const Complex prod = det_abs_pow(m, a) * det_abs_pow(m, b);
    CHECK(std::abs(sum - prod) <= 1e-12 * std::abs(prod));
  }
}

TEST_CASE("change_of_basis examples") {
  CHECK(change_of_basis(Frame::standard(2), Frame::standard(2)).isApprox(Matrix::Identity(2, 2)));
  const Matrix b = change_of_basis(Frame::tangent(Matrix::Identity(2, 2)), Frame::tangent(mat({{2, 0}, {0, 3}})));
  CHECK(b.isApprox(mat({{2, 0}, {0, 3}})));
  try {
    change_of_basis(Frame::tangent(mat({{1}, {0}})), Frame::tangent(mat({{0}, {1}})));
    FAIL("expected SpanMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SpanMismatch);
  }
}

TEST_CASE("change_of_basis within a proper subspace") {
  // Two frames of the plane z = 0 in R^3.
  const Matrix from = mat({{1, 0}, {0, 1}, {0, 0}});
  const Matrix to = mat({{1, 1}, {2, -1}, {0, 0}});
  const Matrix b = change_of_basis(Frame::tangent(from), Frame::tangent(to));
  CHECK((from * b - to).norm() < 1e-14);
}

TEST_CASE("dual_normal_frame examples") {
  const Frame x_axis = Frame::tangent(mat({{1}, {0}}));
  const Matrix n1 = dual_normal_frame(Frame::covector(mat({{0, 1}})), x_axis).data();
  CHECK(std::abs(n1(1, 0) - 1.0) < 1e-15);
  const Matrix n2 = dual_normal_frame(Frame::covector(mat({{0, 2}})), x_axis).data();
  CHECK(std::abs(n2(1, 0) - 0.5) < 1e-15);
  const Matrix n3 = dual_normal_frame(Frame::covector(mat({{1, 1}, {1, -1}})), Frame::tangent(Matrix(2, 0))).data();
  CHECK(n3.isApprox(mat({{0.5, 0.5}, {0.5, -0.5}})));
}

TEST_CASE("dual_normal_frame rejects dependent covectors") {
  CHECK_THROWS_AS(Frame::covector(mat({{0, 1, 0}, {0, 2, 0}})), Error);
  try {
    dual_normal_frame(Frame::covector(mat({{1, 0}})), Frame::tangent(mat({{1}, {0}})));
    FAIL("covector does not annihilate tangent");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateCovectors);
  }
}

TEST_CASE("dual_normal_frame solutions differ by tangent vectors only") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 4;
    const int k = trial % n;
    Matrix t(n, k);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < k; ++j) t(i, j) = normal(rng);
    const Matrix comp = complete_to_ambient(Frame::tangent(t)).data();
    const Matrix recomb = oracles::random_nonsingular(rng, n - k);
    const Matrix nu = recomb * comp.transpose();
    const Matrix dual = dual_normal_frame(Frame::covector(nu), Frame::tangent(t)).data();
    CHECK((nu * dual - Matrix::Identity(n - k, n - k)).norm() < 1e-12);
    Matrix shift(k, n - k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < n - k; ++j) shift(i, j) = normal(rng);
    const Matrix other = dual + t * shift;
    CHECK((nu * other - Matrix::Identity(n - k, n - k)).norm() < 1e-11);
    // Difference lies in span(t): projecting it off t leaves nothing.
    const Matrix diff = other - dual;
    const Matrix residual = diff - t * least_squares(t, diff);
    CHECK(residual.norm() < 1e-11);
    const double d1 = hcat(t, dual).determinant();
    const double d2 = hcat(t, other).determinant();
    CHECK(std::abs(d1 - d2) <= 1e-12 * std::abs(d1));
  }
}

TEST_CASE("complete_to_ambient examples") {
  const Matrix a = complete_to_ambient(Frame::tangent(mat({{1}, {0}}))).data();
  CHECK(a.isApprox(mat({{0}, {1}})));
  const Matrix b = complete_to_ambient(Frame::tangent(mat({{1, 0}, {0, 1}, {0, 0}}))).data();
  CHECK(b.isApprox(mat({{0}, {0}, {1}})));
  const Matrix c = complete_to_ambient(Frame::tangent(mat({{1}, {1}}))).data();
  CHECK(c.isApprox(mat({{-1 / std::sqrt(2.0)}, {1 / std::sqrt(2.0)}})));
  CHECK_THROWS_AS(complete_to_ambient(Frame::tangent(mat({{1, 2}, {1, 2}, {0, 0}}))), Error);
}

TEST_CASE("DensityValue re-expression round trip") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> deg(-1.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 4;
    const Frame e = Frame::tangent(oracles::random_nonsingular(rng, n));
    const Frame e2 = Frame::tangent(e.data() * oracles::random_nonsingular(rng, n));
    const DensityValue v(Complex(1.3, -0.4), Complex(deg(rng), trial % 2 ? 0.3 : 0.0), e);
    const DensityValue back = v.reexpress(e2).reexpress(e);
    CHECK(std::abs(back.value() - v.value()) <= 1e-12 * std::abs(v.value()));
  }
}

TEST_CASE("DensityValue scales by |det B|^alpha") {
  const DensityValue v(2.0, 0.5, Frame::standard(2));
  const DensityValue w = v.reexpress(Frame::tangent(mat({{2, 0}, {0, 8}})));
  CHECK(std::abs(w.value() - 8.0) < 1e-14);
}
