#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geostate/linalg.hpp"

namespace geostate::expr {

enum class Op { Number, Identifier, Negate, Add, Sub, Mul, Div, Pow, Call };
enum class Function { Exp, Sin, Cos, Sqrt, Log };

std::string_view function_name(Function f);
std::optional<Function> function_from_name(std::string_view name);

struct Node;

/// Immutable expression tree. Copies share structure.
///
/// Grammar (highest precedence first): atoms (numbers, identifiers, `pi`,
/// `f(expr)`, parenthesised), `^` (right-associative, exponent may carry a
/// unary minus), unary `-`, `* /`, `+ -`.
class Expr {
 public:
  static Expr number(double value);
  static Expr identifier(std::string name);
  static Expr call(Function f, Expr argument);
  static Expr pow(Expr base, Expr exponent);

  Op op() const;
  double number_value() const;
  const std::string& name() const;
  Function function() const;
  /// Left operand, or the only operand of Negate/Call.
  Expr lhs() const;
  Expr rhs() const;

  /// Canonical text with minimal parentheses; parses back to an equal tree.
  std::string to_string() const;

  std::set<std::string> identifiers() const;
  Expr substitute(const std::map<std::string, Expr>& replacements) const;

  friend bool operator==(const Expr& a, const Expr& b);

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  static Expr make(Op op, const Expr* lhs, const Expr* rhs);
  std::shared_ptr<const Node> node_;
};

Expr parse(std::string_view source);

using Bindings = std::map<std::string, double>;

/// Tree-walking evaluation; throws UnboundIdentifier / DomainError.
double eval(const Expr& e, const Bindings& bindings);

/// "u1".."uk" style names.
std::vector<std::string> coordinate_names(std::string_view prefix, int count);

/// Forward-mode dual number with one derivative slot per active variable.
struct Dual {
  double value = 0.0;
  std::vector<double> d;

  static Dual constant(double v, std::size_t slots) { return {v, std::vector<double>(slots, 0.0)}; }
  static Dual variable(double v, std::size_t slots, std::size_t index) {
    Dual r = constant(v, slots);
    r.d[index] = 1.0;
    return r;
  }
};

/// Expression with identifiers resolved to variable slots or parameter
/// constants, flattened to a stack program for fast repeated evaluation.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  CompiledExpr(const Expr& e, std::span<const std::string> variables, const Bindings& parameters = {});

  double operator()(std::span<const double> vars) const;
  Dual eval_dual(std::span<const double> vars) const;

  const Expr& source() const { return source_; }
  std::size_t arity() const { return arity_; }

 private:
  enum class Code : unsigned char { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Exp, Sin, Cos, Sqrt, Log };
  struct Instruction {
    Code code;
    double constant = 0.0;
    std::size_t slot = 0;
  };
  void emit(const Expr& e, std::span<const std::string> variables, const Bindings& parameters);

  Expr source_ = Expr::number(0.0);
  std::vector<Instruction> program_;
  std::size_t arity_ = 0;
  std::size_t max_depth_ = 0;
};

/// n x k Jacobian of a k -> n map over variables u1..uk (exact, forward mode).
Matrix jacobian(std::span<const CompiledExpr> map, std::span<const double> point);
Matrix jacobian(std::span<const Expr> map, std::span<const double> point, const Bindings& parameters = {});

/// Complex-valued coefficient as a (real part, optional imaginary part) pair.
struct ComplexExpr {
  Expr re = Expr::number(0.0);
  std::optional<Expr> im;

  static ComplexExpr parse(std::string_view re_source, std::string_view im_source = {});
  ComplexExpr substitute(const std::map<std::string, Expr>& replacements) const;
  /// Multiply by a complex constant, keeping the result an expression pair.
  ComplexExpr scaled(Complex factor) const;
};

class CompiledComplexExpr {
 public:
  CompiledComplexExpr() = default;
  CompiledComplexExpr(const ComplexExpr& e, std::span<const std::string> variables,
                      const Bindings& parameters = {});
  Complex operator()(std::span<const double> vars) const;
  const ComplexExpr& source() const { return source_; }

 private:
  ComplexExpr source_;
  CompiledExpr re_;
  std::optional<CompiledExpr> im_;
};

}  // namespace geostate::expr
