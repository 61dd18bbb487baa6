#pragma once

#include <vector>

#include "geostate/density.hpp"
#include "geostate/geometry.hpp"
#include "geostate/quadrature.hpp"
#include "geostate/states.hpp"

namespace geostate {

/// Unit-mass Gaussian (2 pi eps^2)^{-1/2} exp(-t^2 / (2 eps^2)).
double gaussian_mollifier(double t, double eps);

/// Smooth ambient approximation of a state on an affine core:
///   f_eps(x) = g_o(Q^T (x - x0)) * prod_j delta_eps(N_j . (x - x0))
/// with Q, N orthonormal tangent/normal frames and g_o the coefficient
/// converted to them. `density.support()` is the tube
/// {x0 + T u + N b : u in the support box, |b_j| <= 8 eps}.
struct TubeDensity {
  AmbientDensity density;
  double width;
};

/// Throws NonAffineCore, MissingExpression (coefficient not an expression).
TubeDensity mollify(const GeometricState& state, double eps);

/// Integral of f1 f2 over a region; degrees must sum to 1.
QuadratureResult smooth_pair(const AmbientDensity& first, const AmbientDensity& second, const Region& region,
                             const QuadratureOptions& opts = {});
QuadratureResult smooth_pair(const AmbientDensity& first, const AmbientDensity& second, const Box& box,
                             const QuadratureOptions& opts = {});

/// Smooth pairings of mollify(state, eps) against `test` over each tube.
std::vector<Complex> oracle_pairing(const GeometricState& state, const AmbientDensity& test,
                                    const std::vector<double>& eps_list, const QuadratureOptions& opts = {});

/// Smooth pairings of the two mollified states over the region
/// {p + S w + K^+ b : w in E's box, |b| <= 8 eps}, K the stacked orthonormal
/// conormals. Requires affine cores and a bounded box on `intersection`.
std::vector<Complex> oracle_inner(const GeometricState& first, const GeometricState& second,
                                  const Submanifold& intersection, const std::vector<double>& eps_list,
                                  const QuadratureOptions& opts = {});

struct ConvergenceReport {
  Complex geometric;
  std::vector<double> eps;
  std::vector<Complex> oracle;
  std::vector<double> errors;
  /// log(e_i / e_{i+1}) / log(eps_i / eps_{i+1}); NaN where an error is at the floor.
  std::vector<double> orders;
  double noise_floor = 0.0;
  bool converged = false;
  double final_relative_error = 0.0;
};

/// Errors must decrease strictly along the (strictly decreasing) eps list;
/// errors at or below `noise_floor` count as exact and may not grow again.
ConvergenceReport analyze_convergence(Complex geometric, const std::vector<double>& eps_list,
                                      const std::vector<Complex>& oracle_values, double noise_floor);

/// analyze_convergence that throws NonConvergent when the check fails.
ConvergenceReport converge_check(Complex geometric, const std::vector<double>& eps_list,
                                 const std::vector<Complex>& oracle_values, double noise_floor);

}  // namespace geostate
