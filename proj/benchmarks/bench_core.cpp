#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "geostate/product.hpp"
#include "geostate/states.hpp"

using namespace geostate;

namespace {

const char* kSource = "exp(-u1^2-u2^2)*(1+0.3*sin(2*u1)*cos(u2))/(2+cos(u1*u2))";

void BM_Parse(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(expr::parse(kSource));
}
BENCHMARK(BM_Parse);

void BM_TreeEval(benchmark::State& state) {
  const expr::Expr e = expr::parse(kSource);
  const expr::Bindings b{{"u1", 0.3}, {"u2", -0.7}};
  for (auto _ : state) benchmark::DoNotOptimize(expr::eval(e, b));
}
BENCHMARK(BM_TreeEval);

void BM_CompiledEval(benchmark::State& state) {
  const std::vector<std::string> vars{"u1", "u2"};
  const expr::CompiledExpr f(expr::parse(kSource), vars);
  const double point[2] = {0.3, -0.7};
  for (auto _ : state) benchmark::DoNotOptimize(f(point));
}
BENCHMARK(BM_CompiledEval);

void BM_DetAbsPow(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const Matrix m = Matrix::Random(n, n) + Matrix::Identity(n, n) * 2.0;
  for (auto _ : state) benchmark::DoNotOptimize(det_abs_pow(m, 0.5));
}
BENCHMARK(BM_DetAbsPow)->Arg(2)->Arg(4)->Arg(10);

void BM_PairWithTest(benchmark::State& state) {
  Matrix t(2, 1);
  t << 1, 0.5;
  const auto line = Submanifold::affine("l", Vector::Zero(2), t, Box{{Interval{-5, 5}}});
  const auto theta = make_state(line, 0.5, expr::ComplexExpr::parse("exp(-u1^2)*(1+u1/3)"));
  const AmbientDensity test(2, 0.5, expr::ComplexExpr::parse("exp(-x1^2/4)*(2+cos(x2))"));
  for (auto _ : state) benchmark::DoNotOptimize(pair_with_test(theta, test).value);
}
BENCHMARK(BM_PairWithTest)->Unit(benchmark::kMicrosecond);

void BM_InnerProductPlanes(benchmark::State& state) {
  Matrix tz(3, 2);
  tz << 1, 0, 0, 1, 0, 0;
  Matrix tp(3, 2);
  tp << 1, 0, 0, 0.6, 0, 0.8;
  const Box square{{Interval{-6, 6}, Interval{-6, 6}}};
  const auto c = Submanifold::affine("c", Vector::Zero(3), tz, square);
  const auto d = Submanifold::affine("d", Vector::Zero(3), tp, square);
  const auto s1 = make_state(c, 0.5, expr::ComplexExpr::parse("exp(-u1^2-u2^2)"));
  const auto s2 = make_state(d, 0.5, expr::ComplexExpr::parse("exp(-u1^2)*(1+u2)"));
  const auto e = intersect(c, d);
  for (auto _ : state) benchmark::DoNotOptimize(inner_product(s1, s2, e).value);
}
BENCHMARK(BM_InnerProductPlanes)->Unit(benchmark::kMicrosecond);

void BM_ProductAtPoint(benchmark::State& state) {
  const double phi = std::numbers::pi / 6;
  Matrix tx(2, 1);
  tx << 1, 0;
  Matrix tl(2, 1);
  tl << std::cos(phi), std::sin(phi);
  const auto s1 = make_state(Submanifold::affine("x", Vector::Zero(2), tx), 0.5, expr::ComplexExpr::parse("1"));
  const auto s2 = make_state(Submanifold::affine("l", Vector::Zero(2), tl), 0.5, expr::ComplexExpr::parse("1"));
  const auto origin = Submanifold::point("o", Vector::Zero(2));
  for (auto _ : state) benchmark::DoNotOptimize(product_at_point(s1, s2, origin, {}));
}
BENCHMARK(BM_ProductAtPoint);

}  // namespace

BENCHMARK_MAIN();
