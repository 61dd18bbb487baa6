#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "geostate/oracle.hpp"
#include "geostate/product.hpp"
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

Box interval(double lo, double hi) { return Box{{Interval{lo, hi}}}; }

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::SceneError;
}

const std::vector<double> kSchedule{0.2, 0.1, 0.05};

std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

TEST_CASE("the mollifier has unit mass at every width") {
  for (double eps : {1.0, 0.2, 0.05, 1e-3}) {
    const double mass = oracles::adaptive_simpson([eps](double t) { return gaussian_mollifier(t, eps); }, -12 * eps,
                                                  12 * eps, 1e-14);
    CHECK(std::abs(mass - 1.0) < 1e-12);
  }
}

TEST_CASE("mollify examples") {
  const auto axis = Submanifold::affine("x", Vector::Zero(2), col(1, 0), interval(-1, 1));
  const auto s = make_state(axis, 0.5, ComplexExpr::parse("2.5"));
  const auto tube = mollify(s, 0.1);
  Vector p(2);
  p << 0.3, 0.07;
  CHECK(std::abs(tube.density.coefficient(p) - 2.5 * gaussian_mollifier(0.07, 0.1)) < 1e-13);
  CHECK(tube.width == 0.1);

  Vector o(1);
  o << 0.0;
  const auto pt = make_state(Submanifold::point("o", o), 0.0, ComplexExpr::parse("3"));
  const auto f = mollify(pt, 0.2).density;
  Vector q(1);
  q << 0.15;
  CHECK(std::abs(f.coefficient(q) - 3.0 * gaussian_mollifier(0.15, 0.2)) < 1e-14);

  // Mass along the core: the tube integrates to c times the core length.
  const AmbientDensity one(2, 0.5, ComplexExpr::parse("1"));
  QuadratureOptions tight;
  tight.rel_tol = 1e-13;
  for (double eps : kSchedule) {
    const auto t = mollify(s, eps);
    const auto mass = smooth_pair(t.density, one, *t.density.support(), tight);
    CHECK(std::abs(mass.value - 5.0) < 1e-12);
  }
}

TEST_CASE("mollify converts declared frames to orthonormal ones") {
  // Tangent (2,0) and conormal 3 dy: g relative to them, alpha = 0.5.
  const auto axis = Submanifold::affine("x", Vector::Zero(2), col(2, 0), interval(-3, 3));
  ConormalSpec spec;
  spec.convention = ConormalConvention::Declared;
  spec.rows = {{parse("0"), parse("3")}};
  const auto s = make_state(axis, 0.5, ComplexExpr::parse("exp(-u1^2)"), spec);
  const AmbientDensity test(2, 0.5, ComplexExpr::parse("exp(-x1^2/8)*(1+x2)"));
  const Complex geometric = pair_with_test(s, test).value;
  const auto values = oracle_pairing(s, test, kSchedule);
  const auto report = converge_check(geometric, kSchedule, values, 1e-9 * std::abs(geometric));
  CHECK(report.final_relative_error <= 1e-2);
}

TEST_CASE("mollify errors") {
  const auto curve = Submanifold::chart("c", 2, {parse("u1"), parse("u1^2")}, interval(-1, 1));
  CHECK(code_of([&] { mollify(make_state(curve, 0.5, ComplexExpr::parse("1")), 0.1); }) == ErrorCode::NonAffineCore);
  const auto axis = Submanifold::affine("x", Vector::Zero(2), col(1, 0), interval(-1, 1));
  const GeometricState opaque(axis, 0.5, [](std::span<const double>) { return Complex(1.0); },
                              ConormalConvention::Orthonormal, conormal_family(axis, {}));
  CHECK(code_of([&] { mollify(opaque, 0.1); }) == ErrorCode::MissingExpression);
}

TEST_CASE("smooth_pair examples") {
  const AmbientDensity g(1, 0.5, ComplexExpr::parse("(2/pi)^0.25*exp(-x1^2)"));
  CHECK(std::abs(smooth_pair(g, g, interval(-10, 10)).value - 1.0) < 1e-13);

  const AmbientDensity one(2, 0.5, ComplexExpr::parse("1"));
  CHECK(std::abs(smooth_pair(one, one, Box{{Interval{0, 1}, Interval{0, 1}}}).value - 1.0) < 1e-15);

  QuadratureOptions tight;
  tight.rel_tol = 1e-13;
  for (double phi : {std::numbers::pi / 2, std::numbers::pi / 3, std::numbers::pi / 6}) {
    const double eps = 0.1;
    const std::string d = exact(1.0 / std::sqrt(2 * std::numbers::pi * eps * eps));
    const AmbientDensity f1(2, 0.5, ComplexExpr::parse(d + "*exp(-x2^2/0.02)"));
    const AmbientDensity f2(
        2, 0.5,
        ComplexExpr::parse(d + "*exp(-(-x1*" + exact(std::sin(phi)) + "+x2*" + exact(std::cos(phi)) + ")^2/0.02)"));
    const double l = 3.0 / std::sin(phi);
    const auto r = smooth_pair(f1, f2, Box{{Interval{-l, l}, Interval{-1, 1}}}, tight);
    CHECK(oracles::rel_err(r.value.real(), oracles::tilted_tube_integral(phi)) < 1e-12);
  }

  const AmbientDensity bad(2, 0.7, ComplexExpr::parse("1"));
  CHECK(code_of([&] { smooth_pair(one, bad, Box{{Interval{0, 1}, Interval{0, 1}}}); }) == ErrorCode::DegreeMismatch);
}

TEST_CASE("converge_check examples") {
  const double phi = std::numbers::pi / 3;
  const auto x = Submanifold::affine("x", Vector::Zero(2), col(1, 0), interval(-4, 4));
  const auto l = Submanifold::affine("l", Vector::Zero(2), col(std::cos(phi), std::sin(phi)), interval(-4, 4));
  const auto s1 = make_state(x, 0.5, ComplexExpr::parse("1"));
  const auto s2 = make_state(l, 0.5, ComplexExpr::parse("1"));
  const auto e = intersect(x, l);
  const Complex geometric = inner_product(s1, s2, e).value;
  CHECK(oracles::rel_err(geometric.real(), 2.0 / std::sqrt(3.0)) < 1e-14);
  const auto values = oracle_inner(s1, s2, *e.core, kSchedule);
  const double floor = 1e-9 * std::abs(geometric);
  const auto report = converge_check(geometric, kSchedule, values, floor);
  CHECK(report.final_relative_error <= 1e-2);

  CHECK(code_of([&] { converge_check(1.1 * geometric, kSchedule, values, floor); }) == ErrorCode::NonConvergent);

  // C = D = X: no tube, the oracle is the geometric value itself.
  const auto big = Submanifold::ambient("X", 1, interval(-8, 8));
  const auto a = make_state(big, 0.5, ComplexExpr::parse("exp(-u1^2)"));
  const auto b = make_state(big, 0.5, ComplexExpr::parse("exp(-u1^2/2)"));
  const Complex smooth = inner_product(a, b, big).value;
  const auto same = oracle_inner(a, b, big, kSchedule);
  for (const Complex& v : same) CHECK(std::abs(v - smooth) <= 1e-13 * std::abs(smooth));
  CHECK(converge_check(smooth, kSchedule, same, 1e-9 * std::abs(smooth)).converged);
}

TEST_CASE("analyze_convergence bookkeeping") {
  const std::vector<double> eps{0.4, 0.2, 0.1, 0.05};
  const std::vector<Complex> vals{1.4, 1.1, 1.025, 1.00625};
  const auto r = analyze_convergence(1.0, eps, vals, 1e-12);
  CHECK(r.converged);
  REQUIRE(r.orders.size() == 3);
  CHECK(std::abs(r.orders[1] - 2.0) < 1e-12);
  CHECK(std::abs(r.final_relative_error - 0.00625) < 1e-12);
  const std::vector<Complex> bumpy{1.4, 1.1, 1.2, 1.0};
  CHECK_FALSE(analyze_convergence(1.0, eps, bumpy, 1e-12).converged);
  const std::vector<Complex> regrow{1.0, 1.0, 1.2, 1.0};
  CHECK_FALSE(analyze_convergence(1.0, eps, regrow, 1e-12).converged);
  CHECK(code_of([&] { analyze_convergence(1.0, {0.1, 0.2, 0.3}, {1.0, 1.0, 1.0}, 0.0); }) == ErrorCode::NonConvergent);
  CHECK(code_of([&] { analyze_convergence(1.0, {0.2, 0.1}, {1.0, 1.0}, 0.0); }) == ErrorCode::NonConvergent);
}

TEST_CASE("tube oracle reproduces inner products of non-constant states") {
  Matrix t1(3, 2);
  t1 << 1, 0, 0, 1, 0, 0;
  Matrix t2(3, 2);
  t2 << 1, 0, 0, 0.6, 0, 0.8;
  const Box sq{{Interval{-6, 6}, Interval{-6, 6}}};
  const auto c = Submanifold::affine("c", Vector::Zero(3), t1, sq);
  const auto d = Submanifold::affine("d", Vector::Zero(3), t2, sq);
  const auto s1 = make_state(c, 0.5, ComplexExpr::parse("exp(-u1^2-u2^2)"));
  const auto s2 = make_state(d, 0.5, ComplexExpr::parse("exp(-u1^2)*(1+u2)"));
  const auto e = intersect(c, d);
  const auto r = inner_product(s1, s2, e);
  Submanifold core = *e.core;
  core = core.with_domain(*derive_intersection_box(s1, s2, core));
  const auto values = oracle_inner(s1, s2, core, kSchedule);
  const auto report = converge_check(r.value, kSchedule, values, 1e-9 * std::abs(r.value));
  CHECK(report.final_relative_error <= 1e-2);
}
