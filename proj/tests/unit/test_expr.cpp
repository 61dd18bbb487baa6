#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "generators.hpp"
#include "geostate/expr.hpp"
#include "golden_corpus.hpp"
#include "oracles.hpp"

using namespace geostate;
using namespace geostate::expr;

TEST_CASE("parse examples") {
  const Expr one = parse("1");
  CHECK(one.op() == Op::Number);
  CHECK(one.number_value() == 1.0);

  const Expr g = parse("exp(-u1^2)");
  REQUIRE(g.op() == Op::Call);
  CHECK(g.function() == Function::Exp);
  REQUIRE(g.lhs().op() == Op::Negate);
  REQUIRE(g.lhs().lhs().op() == Op::Pow);
  CHECK(g.lhs().lhs().lhs().name() == "u1");

  try {
    parse("2*+3");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.offset() == 2);
    CHECK(e.code() == ErrorCode::SyntaxError);
    CHECK(std::string(e.what()).find("expected") != std::string::npos);
  }
}

TEST_CASE("parse precedence and associativity") {
  CHECK(eval(parse("2^3^2"), {}) == 512.0);
  CHECK(eval(parse("-2^2"), {}) == -4.0);
  CHECK(eval(parse("2^-1"), {}) == 0.5);
  CHECK(eval(parse("1-2-3"), {}) == -4.0);
  CHECK(eval(parse("8/4/2"), {}) == 1.0);
  CHECK(eval(parse("1+2*3^2"), {}) == 19.0);
  CHECK(eval(parse("(1+2)*3"), {}) == 9.0);
  CHECK(eval(parse("2*-3"), {}) == -6.0);
  CHECK(eval(parse(" 1.5e1 + .5 "), {}) == 15.5);
}

TEST_CASE("parse errors") {
  auto offset_of = [](const char* src) {
    try {
      parse(src);
    } catch (const SyntaxError& e) {
      return static_cast<long>(e.offset());
    }
    return -1L;
  };
  CHECK(offset_of("") == 0);
  CHECK(offset_of("1+") == 2);
  CHECK(offset_of("(1") == 2);
  CHECK(offset_of("1 2") == 2);
  CHECK(offset_of("1e") == 2);
  CHECK(offset_of("sin(") == 4);
  try {
    parse("tan(u1)");
    FAIL("expected UnknownFunction");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownFunction);
  }
}

TEST_CASE("eval examples") {
  CHECK(eval(parse("u1^2"), {{"u1", 3.0}}) == 9.0);
  CHECK(std::abs(eval(parse("sin(pi)"), {})) <= 1e-15);
  auto code_of = [](const char* src, const Bindings& b) {
    try {
      eval(parse(src), b);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::SceneError;
  };
  CHECK(code_of("log(x1)", {{"x1", -1.0}}) == ErrorCode::DomainError);
  CHECK(code_of("log(0)", {}) == ErrorCode::DomainError);
  CHECK(code_of("0^(-1)", {}) == ErrorCode::DomainError);
  CHECK(code_of("sqrt(-1)", {}) == ErrorCode::DomainError);
  CHECK(code_of("u2", {{"u1", 1.0}}) == ErrorCode::UnboundIdentifier);
}

TEST_CASE("identifiers and substitution") {
  const Expr e = parse("a*u1 + sin(pi*x2)");
  CHECK(e.identifiers() == std::set<std::string>{"a", "u1", "x2"});
  const Expr s = e.substitute({{"a", Expr::number(2.0)}, {"u1", parse("v1^3+v1")}});
  CHECK(s.identifiers() == std::set<std::string>{"v1", "x2"});
  CHECK(eval(s, {{"v1", 1.0}, {"x2", 0.0}}) == 4.0);
}

TEST_CASE("compiled evaluation matches tree evaluation") {
  std::mt19937_64 rng(3);
  generators::ExpressionGenerator gen(rng, 3);
  const auto vars = coordinate_names("u", 3);
  for (int i = 0; i < 100; ++i) {
    const Expr e = parse(gen());
    const CompiledExpr c(e, vars);
    const auto p = generators::uniform_point(rng, 3);
    const double tree = eval(e, {{"u1", p[0]}, {"u2", p[1]}, {"u3", p[2]}});
    CHECK(c(p) == tree);
  }
}

TEST_CASE("compiled expressions fold parameters and reject unbound names") {
  const std::vector<std::string> vars{"u1"};
  const CompiledExpr c(parse("k*u1"), vars, {{"k", 3.0}});
  const std::vector<double> p{2.0};
  CHECK(c(p) == 6.0);
  CHECK_THROWS_AS(CompiledExpr(parse("k*u1"), vars), Error);
}

TEST_CASE("jacobian examples") {
  const std::vector<Expr> parabola{parse("u1"), parse("u1^2")};
  const std::vector<double> two{2.0};
  const Matrix j1 = jacobian(parabola, two);
  REQUIRE(j1.rows() == 2);
  REQUIRE(j1.cols() == 1);
  CHECK(j1(0, 0) == 1.0);
  CHECK(j1(1, 0) == 4.0);

  const std::vector<Expr> identity{parse("u1"), parse("u2")};
  const std::vector<double> origin{0.0, 0.0};
  CHECK(jacobian(identity, origin) == Matrix::Identity(2, 2));

  const std::vector<Expr> s{parse("sin(u1)")};
  const std::vector<double> zero{0.0};
  CHECK(jacobian(s, zero)(0, 0) == 1.0);
}

TEST_CASE("dual numbers follow the chain rule for every primitive") {
  const std::vector<std::string> vars{"u1"};
  const std::vector<double> p{0.7};
  struct Case {
    const char* src;
    double d;
  };
  const double u = 0.7;
  const Case cases[] = {
      {"exp(u1)", std::exp(u)},
      {"sin(u1)", std::cos(u)},
      {"cos(u1)", -std::sin(u)},
      {"sqrt(u1)", 0.5 / std::sqrt(u)},
      {"log(u1)", 1.0 / u},
      {"u1^3", 3.0 * u * u},
      {"2^u1", std::log(2.0) * std::pow(2.0, u)},
      {"u1^u1", std::pow(u, u) * (std::log(u) + 1.0)},
      {"1/u1", -1.0 / (u * u)},
      {"-u1*u1", -2.0 * u},
  };
  for (const auto& c : cases) {
    const Dual d = CompiledExpr(parse(c.src), vars).eval_dual(p);
    CHECK_MESSAGE(std::abs(d.d[0] - c.d) <= 1e-14 * std::max(1.0, std::abs(c.d)), c.src);
  }
}

TEST_CASE("jacobian agrees with central differences on random expressions") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + trial % 3;
    const int n = 1 + (trial / 3) % 3;
    generators::ExpressionGenerator gen(rng, k);
    std::vector<Expr> map;
    for (int i = 0; i < n; ++i) map.push_back(parse(gen()));
    const auto point = generators::uniform_point(rng, k);
    const Matrix exact = jacobian(map, point);
    const auto vars = coordinate_names("u", k);
    const auto f = [&](const Eigen::VectorXd& u) {
      Eigen::VectorXd out(n);
      Bindings b;
      for (int i = 0; i < k; ++i) b[vars[static_cast<std::size_t>(i)]] = u(i);
      for (int i = 0; i < n; ++i) out(i) = eval(map[static_cast<std::size_t>(i)], b);
      return out;
    };
    const Matrix fd = oracles::central_jacobian(f, Eigen::Map<const Eigen::VectorXd>(point.data(), k));
    const double scale = std::max(fd.norm(), 1e-3);
    CHECK((exact - fd).norm() / scale <= 1e-6);
  }
}

TEST_CASE("golden corpus prints to its canonical form") {
  for (const auto& entry : golden::corpus) {
    const Expr e = parse(entry.source);
    CHECK_MESSAGE(e.to_string() == entry.canonical, entry.source);
  }
}

TEST_CASE("parse-print-parse is idempotent and bit-exact") {
  for (const auto& entry : golden::corpus) {
    const Expr first = parse(entry.source);
    const Expr second = parse(first.to_string());
    CHECK_MESSAGE(first == second, entry.source);
    CHECK(second.to_string() == first.to_string());
  }
  std::mt19937_64 rng(99);
  generators::ExpressionGenerator gen(rng, 3);
  for (int i = 0; i < 200; ++i) {
    const Expr e = parse(gen(4));
    CHECK(parse(e.to_string()) == e);
  }
}

TEST_CASE("printer keeps structure of constructed trees") {
  const Expr a = Expr::identifier("a");
  const Expr b = Expr::identifier("b");
  const Expr c = Expr::identifier("c");
  const std::vector<Expr> trees{
      a - (b - c), a / (b * c), -(a + b), Expr::pow(Expr::pow(a, b), c), Expr::pow(-a, b),
      Expr::number(-2.0) * a, Expr::pow(Expr::number(-2.0), a), a - Expr::number(-1.0), -(-a),
      Expr::pow(a, -b), Expr::number(1e-300) + Expr::number(0.1)};
  for (const auto& t : trees) CHECK_MESSAGE(parse(t.to_string()) == t, t.to_string());
}

TEST_CASE("complex coefficient expressions") {
  const ComplexExpr z = ComplexExpr::parse("u1", "2*u1");
  const std::vector<std::string> vars{"u1"};
  const CompiledComplexExpr cz(z, vars);
  const std::vector<double> p{3.0};
  CHECK(cz(p) == Complex(3.0, 6.0));
  const CompiledComplexExpr scaled(z.scaled(Complex(0.0, 1.0)), vars);
  CHECK(std::abs(scaled(p) - Complex(-6.0, 3.0)) < 1e-15);
  const CompiledComplexExpr real(ComplexExpr::parse("u1"), vars);
  CHECK(real(p) == Complex(3.0, 0.0));
}
