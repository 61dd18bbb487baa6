#include "geostate/expr.hpp"

#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace geostate::expr {

struct Node {
  Op op = Op::Number;
  double value = 0.0;
  std::string name;
  Function function = Function::Exp;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

std::string_view function_name(Function f) {
  switch (f) {
    case Function::Exp: return "exp";
    case Function::Sin: return "sin";
    case Function::Cos: return "cos";
    case Function::Sqrt: return "sqrt";
    case Function::Log: return "log";
  }
  return "?";
}

std::optional<Function> function_from_name(std::string_view name) {
  if (name == "exp") return Function::Exp;
  if (name == "sin") return Function::Sin;
  if (name == "cos") return Function::Cos;
  if (name == "sqrt") return Function::Sqrt;
  if (name == "log") return Function::Log;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Construction and inspection

Expr Expr::make(Op op, const Expr* lhs, const Expr* rhs) {
  // A negated literal is stored as a negative literal, so that printing and
  // re-parsing reproduce the same tree.
  if (op == Op::Negate && lhs->op() == Op::Number) return number(-lhs->number_value());
  auto n = std::make_shared<Node>();
  n->op = op;
  if (lhs) n->lhs = lhs->node_;
  if (rhs) n->rhs = rhs->node_;
  return Expr(std::move(n));
}

Expr Expr::number(double value) {
  auto n = std::make_shared<Node>();
  n->op = Op::Number;
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::identifier(std::string name) {
  auto n = std::make_shared<Node>();
  n->op = Op::Identifier;
  n->name = std::move(name);
  return Expr(std::move(n));
}

Expr Expr::call(Function f, Expr argument) {
  auto n = std::make_shared<Node>();
  n->op = Op::Call;
  n->function = f;
  n->lhs = std::move(argument.node_);
  return Expr(std::move(n));
}

Expr Expr::pow(Expr base, Expr exponent) { return make(Op::Pow, &base, &exponent); }

Op Expr::op() const { return node_->op; }
double Expr::number_value() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }
Function Expr::function() const { return node_->function; }
Expr Expr::lhs() const { return Expr(node_->lhs); }
Expr Expr::rhs() const { return Expr(node_->rhs); }

Expr operator+(const Expr& a, const Expr& b) { return Expr::make(Op::Add, &a, &b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::make(Op::Sub, &a, &b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::make(Op::Mul, &a, &b); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::make(Op::Div, &a, &b); }
Expr operator-(const Expr& a) { return Expr::make(Op::Negate, &a, nullptr); }

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (a.op() != b.op()) return false;
  switch (a.op()) {
    case Op::Number:
      return std::bit_cast<std::uint64_t>(a.number_value()) ==
             std::bit_cast<std::uint64_t>(b.number_value());
    case Op::Identifier:
      return a.name() == b.name();
    case Op::Negate:
      return a.lhs() == b.lhs();
    case Op::Call:
      return a.function() == b.function() && a.lhs() == b.lhs();
    default:
      return a.lhs() == b.lhs() && a.rhs() == b.rhs();
  }
}

// ---------------------------------------------------------------------------
// Printing

namespace {

int precedence(const Expr& e) {
  switch (e.op()) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Negate: return 3;
    case Op::Pow: return 4;
    case Op::Number: return e.number_value() < 0.0 || std::signbit(e.number_value()) ? 0 : 5;
    default: return 5;
  }
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

void print(const Expr& e, std::string& out);

void print_child(const Expr& child, int min_prec, std::string& out) {
  if (precedence(child) < min_prec) {
    out += '(';
    print(child, out);
    out += ')';
  } else {
    print(child, out);
  }
}

void print(const Expr& e, std::string& out) {
  switch (e.op()) {
    case Op::Number:
      out += format_number(e.number_value());
      return;
    case Op::Identifier:
      out += e.name();
      return;
    case Op::Call:
      out += function_name(e.function());
      out += '(';
      print(e.lhs(), out);
      out += ')';
      return;
    case Op::Negate:
      out += '-';
      print_child(e.lhs(), 3, out);
      return;
    case Op::Pow:
      print_child(e.lhs(), 5, out);
      out += '^';
      print_child(e.rhs(), 3, out);
      return;
    default: {
      const int p = precedence(e);
      const char sym = e.op() == Op::Add ? '+' : e.op() == Op::Sub ? '-' : e.op() == Op::Mul ? '*' : '/';
      print_child(e.lhs(), p, out);
      out += sym;
      print_child(e.rhs(), p + 1, out);
      return;
    }
  }
}

void collect(const Expr& e, std::set<std::string>& out) {
  switch (e.op()) {
    case Op::Number: return;
    case Op::Identifier:
      if (e.name() != "pi") out.insert(e.name());
      return;
    case Op::Negate:
    case Op::Call:
      collect(e.lhs(), out);
      return;
    default:
      collect(e.lhs(), out);
      collect(e.rhs(), out);
  }
}

}  // namespace

std::string Expr::to_string() const {
  std::string out;
  print(*this, out);
  return out;
}

std::set<std::string> Expr::identifiers() const {
  std::set<std::string> out;
  collect(*this, out);
  return out;
}

Expr Expr::substitute(const std::map<std::string, Expr>& replacements) const {
  switch (op()) {
    case Op::Number: return *this;
    case Op::Identifier: {
      auto it = replacements.find(name());
      return it == replacements.end() ? *this : it->second;
    }
    case Op::Negate: {
      Expr a = lhs().substitute(replacements);
      return make(Op::Negate, &a, nullptr);
    }
    case Op::Call: return call(function(), lhs().substitute(replacements));
    default: {
      Expr a = lhs().substitute(replacements);
      Expr b = rhs().substitute(replacements);
      return make(op(), &a, &b);
    }
  }
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

constexpr std::string_view kOperandStart = "number, identifier, '(' or '-'";

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  Expr parse_all() {
    Expr e = parse_sum();
    skip_ws();
    if (pos_ < src_.size()) fail(pos_, "unexpected '" + std::string(1, src_[pos_]) + "', expected operator or end of input");
    return e;
  }

 private:
  [[noreturn]] static void fail(std::size_t at, const std::string& msg) { throw SyntaxError(at, msg); }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr parse_sum() {
    Expr e = parse_product();
    for (;;) {
      if (accept('+')) {
        Expr r = parse_product();
        e = e + r;
      } else if (accept('-')) {
        Expr r = parse_product();
        e = e - r;
      } else {
        return e;
      }
    }
  }

  Expr parse_product() {
    Expr e = parse_unary();
    for (;;) {
      if (accept('*')) {
        Expr r = parse_unary();
        e = e * r;
      } else if (accept('/')) {
        Expr r = parse_unary();
        e = e / r;
      } else {
        return e;
      }
    }
  }

  Expr parse_unary() {
    if (accept('-')) return -parse_unary();
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_atom();
    if (accept('^')) return Expr::pow(base, parse_unary());
    return base;
  }

  Expr parse_atom() {
    skip_ws();
    if (pos_ >= src_.size()) fail(pos_, std::string("unexpected end of input, expected ") + std::string(kOperandStart));
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_name();
    if (c == '(') {
      ++pos_;
      Expr inner = parse_sum();
      if (!accept(')')) fail(pos_, "expected ')'");
      return inner;
    }
    fail(pos_, "unexpected '" + std::string(1, c) + "', expected " + std::string(kOperandStart));
  }

  Expr parse_number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t count = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
        ++count;
      }
      return count;
    };
    std::size_t mantissa = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      mantissa += digits();
    }
    if (mantissa == 0) fail(start, "malformed number");
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) fail(pos_, "malformed exponent, expected digits");
    }
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, value);
    if (ec != std::errc() || ptr != src_.data() + pos_) fail(start, "malformed number");
    return Expr::number(value);
  }

  Expr parse_name() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
      ++pos_;
    }
    std::string name(src_.substr(start, pos_ - start));
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == '(') {
      auto f = function_from_name(name);
      if (!f) {
        throw Error(ErrorCode::UnknownFunction,
                    "offset " + std::to_string(start) + ": unknown function '" + name + "'");
      }
      ++pos_;
      Expr arg = parse_sum();
      if (!accept(')')) fail(pos_, "expected ')'");
      return Expr::call(*f, arg);
    }
    return Expr::identifier(std::move(name));
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view source) { return Parser(source).parse_all(); }

std::vector<std::string> coordinate_names(std::string_view prefix, int count) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 1; i <= count; ++i) out.push_back(std::string(prefix) + std::to_string(i));
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

[[noreturn]] void domain_error(const std::string& what) { throw Error(ErrorCode::DomainError, what); }

double checked_pow(double a, double b) {
  if (a == 0.0 && b < 0.0) domain_error("0 raised to a negative power");
  if (a < 0.0 && std::floor(b) != b) domain_error("negative base with non-integer exponent");
  return std::pow(a, b);
}

double checked_div(double a, double b) {
  if (b == 0.0) domain_error("division by zero");
  return a / b;
}

double apply(Function f, double a) {
  switch (f) {
    case Function::Exp: return std::exp(a);
    case Function::Sin: return std::sin(a);
    case Function::Cos: return std::cos(a);
    case Function::Sqrt:
      if (a < 0.0) domain_error("sqrt of a negative number");
      return std::sqrt(a);
    case Function::Log:
      if (a <= 0.0) domain_error("log of a nonpositive number");
      return std::log(a);
  }
  return 0.0;
}

}  // namespace

double eval(const Expr& e, const Bindings& bindings) {
  switch (e.op()) {
    case Op::Number: return e.number_value();
    case Op::Identifier: {
      auto it = bindings.find(e.name());
      if (it != bindings.end()) return it->second;
      if (e.name() == "pi") return std::numbers::pi;
      throw Error(ErrorCode::UnboundIdentifier, "'" + e.name() + "'");
    }
    case Op::Negate: return -eval(e.lhs(), bindings);
    case Op::Call: return apply(e.function(), eval(e.lhs(), bindings));
    case Op::Add: return eval(e.lhs(), bindings) + eval(e.rhs(), bindings);
    case Op::Sub: return eval(e.lhs(), bindings) - eval(e.rhs(), bindings);
    case Op::Mul: return eval(e.lhs(), bindings) * eval(e.rhs(), bindings);
    case Op::Div: return checked_div(eval(e.lhs(), bindings), eval(e.rhs(), bindings));
    case Op::Pow: return checked_pow(eval(e.lhs(), bindings), eval(e.rhs(), bindings));
  }
  return 0.0;
}

CompiledExpr::CompiledExpr(const Expr& e, std::span<const std::string> variables, const Bindings& parameters)
    : source_(e), arity_(variables.size()) {
  emit(e, variables, parameters);
  std::size_t depth = 0;
  for (const auto& ins : program_) {
    switch (ins.code) {
      case Code::Const:
      case Code::Var: ++depth; break;
      case Code::Add:
      case Code::Sub:
      case Code::Mul:
      case Code::Div:
      case Code::Pow: --depth; break;
      default: break;
    }
    max_depth_ = std::max(max_depth_, depth);
  }
}

void CompiledExpr::emit(const Expr& e, std::span<const std::string> variables, const Bindings& parameters) {
  switch (e.op()) {
    case Op::Number:
      program_.push_back({Code::Const, e.number_value(), 0});
      return;
    case Op::Identifier: {
      for (std::size_t i = 0; i < variables.size(); ++i) {
        if (variables[i] == e.name()) {
          program_.push_back({Code::Var, 0.0, i});
          return;
        }
      }
      if (auto it = parameters.find(e.name()); it != parameters.end()) {
        program_.push_back({Code::Const, it->second, 0});
        return;
      }
      if (e.name() == "pi") {
        program_.push_back({Code::Const, std::numbers::pi, 0});
        return;
      }
      throw Error(ErrorCode::UnboundIdentifier, "'" + e.name() + "'");
    }
    case Op::Negate:
      emit(e.lhs(), variables, parameters);
      program_.push_back({Code::Neg});
      return;
    case Op::Call: {
      emit(e.lhs(), variables, parameters);
      static constexpr Code codes[] = {Code::Exp, Code::Sin, Code::Cos, Code::Sqrt, Code::Log};
      program_.push_back({codes[static_cast<int>(e.function())]});
      return;
    }
    default: {
      emit(e.lhs(), variables, parameters);
      emit(e.rhs(), variables, parameters);
      Code c = Code::Add;
      switch (e.op()) {
        case Op::Sub: c = Code::Sub; break;
        case Op::Mul: c = Code::Mul; break;
        case Op::Div: c = Code::Div; break;
        case Op::Pow: c = Code::Pow; break;
        default: break;
      }
      program_.push_back({c});
    }
  }
}

double CompiledExpr::operator()(std::span<const double> vars) const {
  std::array<double, 48> small{};
  std::vector<double> large;
  double* stack = small.data();
  if (max_depth_ > small.size()) {
    large.resize(max_depth_);
    stack = large.data();
  }
  std::size_t top = 0;
  for (const auto& ins : program_) {
    switch (ins.code) {
      case Code::Const: stack[top++] = ins.constant; break;
      case Code::Var: stack[top++] = vars[ins.slot]; break;
      case Code::Neg: stack[top - 1] = -stack[top - 1]; break;
      case Code::Add: --top; stack[top - 1] += stack[top]; break;
      case Code::Sub: --top; stack[top - 1] -= stack[top]; break;
      case Code::Mul: --top; stack[top - 1] *= stack[top]; break;
      case Code::Div: --top; stack[top - 1] = checked_div(stack[top - 1], stack[top]); break;
      case Code::Pow: --top; stack[top - 1] = checked_pow(stack[top - 1], stack[top]); break;
      case Code::Exp: stack[top - 1] = std::exp(stack[top - 1]); break;
      case Code::Sin: stack[top - 1] = std::sin(stack[top - 1]); break;
      case Code::Cos: stack[top - 1] = std::cos(stack[top - 1]); break;
      case Code::Sqrt: stack[top - 1] = apply(Function::Sqrt, stack[top - 1]); break;
      case Code::Log: stack[top - 1] = apply(Function::Log, stack[top - 1]); break;
    }
  }
  return stack[0];
}

Dual CompiledExpr::eval_dual(std::span<const double> vars) const {
  const std::size_t slots = vars.size();
  std::vector<Dual> stack;
  stack.reserve(max_depth_);
  auto scale_into = [](Dual& target, const std::vector<double>& d, double factor) {
    for (std::size_t i = 0; i < d.size(); ++i) target.d[i] += factor * d[i];
  };
  for (const auto& ins : program_) {
    switch (ins.code) {
      case Code::Const: stack.push_back(Dual::constant(ins.constant, slots)); break;
      case Code::Var: stack.push_back(Dual::variable(vars[ins.slot], slots, ins.slot)); break;
      case Code::Neg: {
        Dual& a = stack.back();
        a.value = -a.value;
        for (double& x : a.d) x = -x;
        break;
      }
      case Code::Add:
      case Code::Sub:
      case Code::Mul:
      case Code::Div:
      case Code::Pow: {
        Dual b = std::move(stack.back());
        stack.pop_back();
        Dual a = std::move(stack.back());
        stack.pop_back();
        Dual r = Dual::constant(0.0, slots);
        if (ins.code == Code::Add) {
          r.value = a.value + b.value;
          scale_into(r, a.d, 1.0);
          scale_into(r, b.d, 1.0);
        } else if (ins.code == Code::Sub) {
          r.value = a.value - b.value;
          scale_into(r, a.d, 1.0);
          scale_into(r, b.d, -1.0);
        } else if (ins.code == Code::Mul) {
          r.value = a.value * b.value;
          scale_into(r, a.d, b.value);
          scale_into(r, b.d, a.value);
        } else if (ins.code == Code::Div) {
          r.value = checked_div(a.value, b.value);
          scale_into(r, a.d, 1.0 / b.value);
          scale_into(r, b.d, -a.value / (b.value * b.value));
        } else {
          r.value = checked_pow(a.value, b.value);
          const bool constant_exponent =
              std::all_of(b.d.begin(), b.d.end(), [](double x) { return x == 0.0; });
          if (constant_exponent) {
            const double da = b.value == 0.0 ? 0.0 : b.value * checked_pow(a.value, b.value - 1.0);
            scale_into(r, a.d, da);
          } else {
            if (a.value <= 0.0) domain_error("variable exponent needs a positive base");
            scale_into(r, a.d, b.value * r.value / a.value);
            scale_into(r, b.d, r.value * std::log(a.value));
          }
        }
        stack.push_back(std::move(r));
        break;
      }
      default: {
        Dual& a = stack.back();
        double slope = 0.0;
        switch (ins.code) {
          case Code::Exp: a.value = std::exp(a.value); slope = a.value; break;
          case Code::Sin: slope = std::cos(a.value); a.value = std::sin(a.value); break;
          case Code::Cos: slope = -std::sin(a.value); a.value = std::cos(a.value); break;
          case Code::Sqrt:
            a.value = apply(Function::Sqrt, a.value);
            slope = 0.5 / a.value;
            break;
          case Code::Log:
            slope = 1.0 / a.value;
            a.value = apply(Function::Log, a.value);
            break;
          default: break;
        }
        for (double& x : a.d) x *= slope;
      }
    }
  }
  return stack.back();
}

Matrix jacobian(std::span<const CompiledExpr> map, std::span<const double> point) {
  Matrix j(static_cast<Eigen::Index>(map.size()), static_cast<Eigen::Index>(point.size()));
  for (std::size_t r = 0; r < map.size(); ++r) {
    const Dual d = map[r].eval_dual(point);
    for (std::size_t c = 0; c < point.size(); ++c) {
      j(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = d.d[c];
    }
  }
  return j;
}

Matrix jacobian(std::span<const Expr> map, std::span<const double> point, const Bindings& parameters) {
  const auto names = coordinate_names("u", static_cast<int>(point.size()));
  std::vector<CompiledExpr> compiled;
  compiled.reserve(map.size());
  for (const auto& e : map) compiled.emplace_back(e, names, parameters);
  return jacobian(compiled, point);
}

ComplexExpr ComplexExpr::parse(std::string_view re_source, std::string_view im_source) {
  ComplexExpr out;
  out.re = expr::parse(re_source);
  if (!im_source.empty()) out.im = expr::parse(im_source);
  return out;
}

ComplexExpr ComplexExpr::substitute(const std::map<std::string, Expr>& replacements) const {
  ComplexExpr out;
  out.re = re.substitute(replacements);
  if (im) out.im = im->substitute(replacements);
  return out;
}

ComplexExpr ComplexExpr::scaled(Complex factor) const {
  ComplexExpr out;
  const Expr fr = Expr::number(factor.real());
  const Expr fi = Expr::number(factor.imag());
  if (!im) {
    out.re = fr * re;
    if (factor.imag() != 0.0) out.im = fi * re;
    return out;
  }
  out.re = fr * re - fi * *im;
  out.im = fi * re + fr * *im;
  return out;
}

CompiledComplexExpr::CompiledComplexExpr(const ComplexExpr& e, std::span<const std::string> variables,
                                         const Bindings& parameters)
    : source_(e), re_(e.re, variables, parameters) {
  if (e.im) im_.emplace(*e.im, variables, parameters);
}

Complex CompiledComplexExpr::operator()(std::span<const double> vars) const {
  return {re_(vars), im_ ? (*im_)(vars) : 0.0};
}

}  // namespace geostate::expr
