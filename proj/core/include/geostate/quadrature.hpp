#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "geostate/linalg.hpp"

namespace geostate {

struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool bounded() const;
  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
};

/// Axis-aligned box; a zero-dimensional box is a single point.
struct Box {
  std::vector<Interval> axes;

  static Box unbounded(int dim) { return Box{std::vector<Interval>(static_cast<std::size_t>(dim))}; }
  int dim() const { return static_cast<int>(axes.size()); }
  bool bounded() const;
  bool contains(std::span<const double> p, double slack = 0.0) const;
  Vector center() const;
  Box intersect(const Box& other) const;
};

struct QuadratureOptions {
  int order = 32;
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;
  /// Integrand evaluations allowed before giving up.
  long max_evaluations = 4'000'000;
};

struct QuadratureResult {
  Complex value;
  double error_estimate = 0.0;
  long evaluations = 0;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussLegendreRule gauss_legendre(int order);

using Integrand = std::function<Complex(std::span<const double>)>;

/// Tensor Gauss-Legendre over `box`. The error estimate of a region compares
/// the rule with the rule on its two halves and, axis by axis, with a
/// half-order rule; regions whose estimate is too large are bisected along
/// the least resolved axis until the total estimate is within
/// rel_tol * |value| + abs_tol. Throws QuadratureNotConverged when the
/// evaluation budget runs out first, UnboundedDomain for infinite boxes.
QuadratureResult integrate(const Integrand& f, const Box& box, const QuadratureOptions& opts = {});

}  // namespace geostate
