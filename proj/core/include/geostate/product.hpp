#pragma once

#include <optional>
#include <span>

#include "geostate/geometry.hpp"
#include "geostate/linalg.hpp"
#include "geostate/quadrature.hpp"
#include "geostate/states.hpp"

namespace geostate {

/// Frames and coefficients of two states at a common point x of C and D.
struct LocalProductData {
  Matrix s;     // n x m, tangent frame of E
  Matrix a;     // n x k_C
  Matrix b;     // n x k_D
  Matrix nu_c;  // q x n
  Matrix nu_d;  // p x n
  Complex g1;
  Complex g2;
};

/// Normal representatives to use instead of the minimum-norm solutions.
/// Any valid choice gives the same coefficient.
struct NormalChoices {
  std::optional<Matrix> n_c;
  std::optional<Matrix> n_d;
  std::optional<Matrix> n_e;
};

/// Coefficient of the product state relative to (s, (nu_c, nu_d)):
///   n_C, n_D dual to nu_c, nu_d; n_E dual to the stacked (nu_c; nu_d);
///   w* = [s | n_E], w1 = [a | n_C], w2 = [b | n_D];
///   g = g1 g2 |det M1|^alpha |det M2|^beta with w* = w1 M1 = w2 M2.
/// Throws TransversalityFailure when the stacked conormals are dependent or
/// w* is singular.
Complex transverse_product_coefficient(const LocalProductData& data, Complex alpha, Complex beta,
                                       const NormalChoices& choices = {});

/// Frames of both states at psi_E(w); chart preimages by Submanifold::locate.
LocalProductData gather_product_data(const GeometricState& first, const GeometricState& second,
                                     const Submanifold& intersection, std::span<const double> w);

Complex product_at_point(const GeometricState& first, const GeometricState& second, const Submanifold& intersection,
                         std::span<const double> w);

/// The product state on E = C ∩ D, degree alpha + beta, conormal frame the
/// concatenation (nu_C, nu_D). Coefficients are evaluated on demand.
GeometricState product(const GeometricState& first, const GeometricState& second, const Submanifold& intersection);

struct InnerProductResult {
  Complex value;
  double error_estimate = 0.0;
  std::size_t intersection_points = 0;

  /// |<psi1, psi2>|^2.
  double transition_probability() const { return std::norm(value); }
};

/// <psi1, psi2> for degrees alpha and 1 - alpha: the integral of the degree-1
/// product state over E's chart (a single value for a point core).
InnerProductResult inner_product(const GeometricState& first, const GeometricState& second,
                                 const Submanifold& intersection, const QuadratureOptions& opts = {});
/// Sums over isolated points, or integrates over the intersection core.
InnerProductResult inner_product(const GeometricState& first, const GeometricState& second,
                                 const IntersectionResult& intersection, const QuadratureOptions& opts = {});

/// Bounded chart box for an affine line E = C ∩ D implied by the support
/// boxes of two states on affine cores; nullopt when it cannot be derived.
std::optional<Box> derive_intersection_box(const GeometricState& first, const GeometricState& second,
                                           const Submanifold& intersection);

}  // namespace geostate
