#include <doctest.h>

#include <cmath>
#include <random>

#include "generators.hpp"
#include "geostate/density.hpp"
#include "oracles.hpp"

using namespace geostate;
using expr::ComplexExpr;
using expr::parse;

namespace {

Matrix col(double a, double b) {
  Matrix m(2, 1);
  m << a, b;
  return m;
}

}  // namespace

TEST_CASE("restrict examples") {
  const AmbientDensity one(2, 1.0, ComplexExpr::parse("1"));
  const auto x_axis = Submanifold::affine("x", Vector::Zero(2), col(1, 0));
  const std::vector<double> u{0.0};
  CHECK(restrict(one, x_axis, u).value() == Complex(1.0));
  CHECK(std::abs(restrict(one, x_axis, u, col(1, 2)).value() - 2.0) < 1e-15);

  const AmbientDensity half(2, 0.5, ComplexExpr::parse("1"));
  const auto diagonal = Submanifold::chart("diag", 2, {parse("u1"), parse("u1")}, Box{{Interval{-1, 1}}});
  const DensityValue v = restrict(half, diagonal, u);
  CHECK(std::abs(v.value() - std::pow(2.0, 0.25)) < 1e-15);
  CHECK(v.frame().data().isApprox(
      (Matrix(2, 2) << 1, -1 / std::sqrt(2.0), 1, 1 / std::sqrt(2.0)).finished()));
}

TEST_CASE("restrict to the ambient space is the coefficient itself") {
  const AmbientDensity phi(2, 0.7, ComplexExpr::parse("exp(-x1^2)*cos(x2)", "x1*x2"));
  const auto x = Submanifold::ambient("X", 2);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    const auto p = generators::uniform_point(rng, 2, -2.0, 2.0);
    const Vector px = Eigen::Map<const Vector>(p.data(), 2);
    CHECK(restrict(phi, x, p).value() == phi.coefficient(px));
  }
}

TEST_CASE("restrict is invariant under tangential shifts of normal representatives") {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> normal;
  const AmbientDensity phi(3, Complex(0.4, 0.2), ComplexExpr::parse("1+x1^2+x2*x3"));
  const auto surface = Submanifold::chart("s", 3, {parse("u1"), parse("u2"), parse("sin(u1)*cos(u2)")},
                                          Box{{Interval{-1, 1}, Interval{-1, 1}}});
  for (int trial = 0; trial < 100; ++trial) {
    const auto u = generators::uniform_point(rng, 2);
    const Matrix t = surface.tangent_at(u);
    const Matrix n = complete_to_ambient(Frame::tangent(t)).data();
    Matrix k(2, 1);
    k << normal(rng), normal(rng);
    const Complex base = restrict(phi, surface, u, n).value();
    const Complex shifted = restrict(phi, surface, u, Matrix(n + t * k)).value();
    CHECK(std::abs(shifted - base) <= 1e-12 * std::abs(base));
  }
}

TEST_CASE("restrict is additive in the degree") {
  std::mt19937_64 rng(13);
  const auto curve = Submanifold::chart("c", 2, {parse("u1"), parse("u1^3-u1")}, Box{{Interval{-2, 2}}});
  const AmbientDensity phi(2, 0.3, ComplexExpr::parse("exp(-x1^2)"));
  const AmbientDensity psi(2, 0.9, ComplexExpr::parse("2+sin(x2)"));
  const AmbientDensity both(2, 1.2, ComplexExpr::parse("exp(-x1^2)*(2+sin(x2))"));
  for (int trial = 0; trial < 50; ++trial) {
    const auto u = generators::uniform_point(rng, 1, -2.0, 2.0);
    const Complex lhs = restrict(both, curve, u).value();
    const Complex rhs = restrict(phi, curve, u).value() * restrict(psi, curve, u).value();
    CHECK(std::abs(lhs - rhs) <= 1e-13 * std::abs(rhs));
  }
}

TEST_CASE("ambient density values transform with the frame") {
  const AmbientDensity phi(2, 0.5, ComplexExpr::parse("3"));
  const Vector x = Vector::Zero(2);
  const Matrix b = (Matrix(2, 2) << 2, 1, 0, 8).finished();
  CHECK(std::abs(phi.value_on(x, b) - 12.0) < 1e-14);
  CHECK(phi.value_on(x, Matrix::Identity(2, 2)) == Complex(3.0));
}
