#pragma once

#include <optional>
#include <span>

#include "geostate/expr.hpp"
#include "geostate/geometry.hpp"
#include "geostate/linalg.hpp"
#include "geostate/quadrature.hpp"

namespace geostate {

/// Parallelepiped {origin + axes * z : z in box}; with identity axes this is
/// an ordinary axis-aligned box in R^n.
struct Region {
  Vector origin;
  Matrix axes;
  Box box;

  static Region axis_aligned(Box box);
  int dim() const { return box.dim(); }
  Vector map(std::span<const double> z) const;
  /// |det axes|, the volume factor of the change of variables.
  double jacobian() const;
};

/// Smooth alpha-density on X = R^n. Its value on the standard frame at x is
/// f(x); on the frame (standard) * B it is |det B|^alpha f(x).
class AmbientDensity {
 public:
  AmbientDensity(int ambient_dim, Complex degree, expr::ComplexExpr coefficient,
                 std::optional<Region> support = {}, const expr::Bindings& parameters = {});

  int ambient_dim() const { return n_; }
  Complex degree() const { return degree_; }
  const expr::ComplexExpr& coefficient_expr() const { return compiled_.source(); }
  const std::optional<Region>& support() const { return support_; }

  Complex coefficient(std::span<const double> x) const { return compiled_(x); }
  Complex coefficient(const Vector& x) const { return compiled_(std::span(x.data(), x.size())); }
  /// Value on an arbitrary ambient frame (columns of `frame`) at x.
  Complex value_on(const Vector& x, const Matrix& frame) const;

 private:
  int n_;
  Complex degree_;
  expr::CompiledComplexExpr compiled_;
  std::optional<Region> support_;
};

/// Restriction of phi to C at chart point u: f(psi(u)) * |det[t | n]|^alpha,
/// relative to the split frame (t, [n]). Default normal representatives are
/// the orthonormal complement of t; any tangential shift of them gives the
/// same value.
DensityValue restrict(const AmbientDensity& phi, const Submanifold& core, std::span<const double> u,
                      const std::optional<Matrix>& normal_representatives = std::nullopt);

}  // namespace geostate
