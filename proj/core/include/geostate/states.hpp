#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "geostate/density.hpp"
#include "geostate/expr.hpp"
#include "geostate/geometry.hpp"
#include "geostate/quadrature.hpp"

namespace geostate {

enum class ConormalConvention {
  /// Rows of the oriented Euclidean orthonormal complement of the chart tangent.
  Orthonormal,
  /// Rows of DF for cores with an implicit form.
  ImplicitGradient,
  /// User expressions over u1..uk, one row of n entries per conormal covector.
  Declared,
  /// Supplied by a computation (e.g. concatenated conormals of a product).
  Derived,
};

using CoefficientFn = std::function<Complex(std::span<const double>)>;
/// (n-k) x n covector rows as a function of chart coordinates.
using ConormalFamily = std::function<Matrix(std::span<const double>)>;

struct ConormalSpec {
  ConormalConvention convention = ConormalConvention::Orthonormal;
  std::vector<std::vector<expr::Expr>> rows;  // Declared only
};

/// Element of H^alpha_{X,C}: a scalar coefficient g(u) giving the value of
/// the state on the pair (chart tangent frame t(u), conormal frame nu(u)).
/// Changing t by B_t and nu by B_nu multiplies g by
/// |det B_t|^alpha |det B_nu|^(1-alpha).
class GeometricState {
 public:
  GeometricState(Submanifold core, Complex degree, CoefficientFn coefficient, ConormalConvention convention,
                 ConormalFamily conormal, std::optional<Box> support = {},
                 std::optional<expr::ComplexExpr> coefficient_expr = {});

  const Submanifold& core() const { return core_; }
  Complex degree() const { return degree_; }
  ConormalConvention convention() const { return convention_; }
  const std::optional<Box>& support() const { return support_; }
  const std::optional<expr::ComplexExpr>& coefficient_expr() const { return coefficient_expr_; }

  Complex coefficient(std::span<const double> u) const { return coefficient_(u); }
  Matrix conormal_at(std::span<const double> u) const { return conormal_(u); }
  Matrix tangent_at(std::span<const double> u) const { return core_.tangent_at(u); }

  /// Chart domain intersected with the support box.
  Box integration_box() const;

 private:
  Submanifold core_;
  Complex degree_;
  CoefficientFn coefficient_;
  ConormalConvention convention_;
  ConormalFamily conormal_;
  std::optional<Box> support_;
  std::optional<expr::ComplexExpr> coefficient_expr_;
};

ConormalFamily conormal_family(const Submanifold& core, const ConormalSpec& spec,
                               const expr::Bindings& parameters = {});

GeometricState make_state(const Submanifold& core, Complex degree, const expr::ComplexExpr& coefficient,
                          const ConormalSpec& conormal = {}, std::optional<Box> support = {},
                          const expr::Bindings& parameters = {});

/// Half-density state induced on C by a half-density h(u, xi) on N*C, xi
/// being fiber coordinates relative to the declared conormal frame: g(u) = h(u, 0).
GeometricState zero_section_state(const Submanifold& core, const expr::Expr& h, const ConormalSpec& conormal = {},
                                  std::optional<Box> support = {}, const expr::Bindings& parameters = {});

/// Same state expressed against another conormal family, via the
/// |det B_nu|^(1-alpha) transformation law.
GeometricState with_conormal(const GeometricState& state, ConormalConvention convention, ConormalFamily target);

struct PairingOptions {
  QuadratureOptions quadrature;
  /// Optional k x q matrix K(u); normal representatives become n + t K.
  std::function<Matrix(std::span<const double>)> normal_shift;
};

struct PairingResult {
  Complex value;
  double error_estimate = 0.0;
};

/// g(u) f(psi(u)) |det[t(u) | n(u)]|^alpha with n dual to the state's conormal frame.
Complex pairing_integrand(const GeometricState& state, const AmbientDensity& test, std::span<const double> u,
                          const std::optional<Matrix>& normal_shift = std::nullopt);

/// <theta, phi> for theta of degree 1 - alpha and phi of degree alpha.
/// Throws DegreeMismatch, UnboundedDomain, QuadratureNotConverged.
PairingResult pair_with_test(const GeometricState& state, const AmbientDensity& test, const PairingOptions& opts = {});

/// |a + b - 1| <= 1e-12.
bool degrees_complementary(Complex a, Complex b);

}  // namespace geostate
