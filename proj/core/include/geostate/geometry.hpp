#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geostate/expr.hpp"
#include "geostate/linalg.hpp"
#include "geostate/quadrature.hpp"

namespace geostate {

/// Ambient space X = R^n at desk scale.
struct Ambient {
  int n = 1;
  static constexpr int max_dim = 10;
};

enum class ConormalProvenance { OrthonormalComplement, ImplicitGradient, UserDeclared };

/// Embedded core C of R^n presented in a single chart.
///
/// The parametrisation is either affine (x0 + T u) or an expression chart
/// over u1..uk on an axis-aligned box. A defining map F: R^n -> R^{n-k} over
/// x1..xn may accompany either one; affine cores always have the implicit
/// description N^T (x - x0) available through `defining_value`.
class Submanifold {
 public:
  enum class Kind { Affine, Chart };

  static Submanifold affine(std::string name, Vector base, Matrix tangent, std::optional<Box> domain = {});
  static Submanifold point(std::string name, Vector x);
  /// X itself with the identity chart.
  static Submanifold ambient(std::string name, int n, std::optional<Box> domain = {});
  static Submanifold chart(std::string name, int ambient_dim, std::vector<expr::Expr> map, Box domain,
                           const expr::Bindings& parameters = {});

  /// Attach an implicit form; checks rank and consistency on the sample grid.
  Submanifold with_implicit(std::vector<expr::Expr> defining_map, const expr::Bindings& parameters = {}) const;
  Submanifold with_domain(Box domain) const;
  Submanifold renamed(std::string name) const;
  /// True when both handles share the same underlying core.
  bool same_as(const Submanifold& other) const { return data_ == other.data_; }

  const std::string& name() const;
  Kind kind() const;
  bool is_affine() const { return kind() == Kind::Affine; }
  int ambient_dim() const;
  int dim() const;
  int codim() const { return ambient_dim() - dim(); }
  const Box& domain() const;

  const Vector& base_point() const;
  const Matrix& tangent_matrix() const;
  const std::vector<expr::Expr>& map_exprs() const;
  bool has_implicit() const;
  const std::vector<expr::Expr>& implicit_exprs() const;
  bool has_defining_map() const { return is_affine() || has_implicit(); }

  Vector point_at(std::span<const double> u) const;
  /// n x k chart Jacobian.
  Matrix tangent_at(std::span<const double> u) const;

  /// F(x) and DF(x) ((n-k) x n); affine cores use the orthonormal complement.
  Vector defining_value(const Vector& x) const;
  Matrix defining_gradient(const Vector& x) const;

  /// Chart coordinates of an ambient point on the core: closed form for
  /// affine cores, damped Gauss-Newton from the nearest grid seed otherwise.
  /// Throws NotOnBothCores (distance > tol) or ChartInversionFailure.
  Vector locate(const Vector& x, double tol = 1e-8) const;

  /// Immersion check on a 5^k grid (and implicit consistency when present).
  void validate() const;

 private:
  struct Data;
  explicit Submanifold(std::shared_ptr<const Data> data) : data_(std::move(data)) {}
  std::shared_ptr<const Data> data_;
};

struct FrameBundleSample {
  Vector point;
  Vector chart_coords;
  /// n x k, the chart Jacobian columns.
  Matrix tangent;
  /// (n-k) x n covector rows annihilating the tangent.
  Matrix conormal;
  ConormalProvenance provenance = ConormalProvenance::OrthonormalComplement;
};

/// Covector rows of the oriented Euclidean orthonormal complement of `tangent`.
Matrix orthonormal_conormal(const Matrix& tangent);

FrameBundleSample frames_at(const Submanifold& core, std::span<const double> u);

struct TransversalityVerdict {
  Vector point;
  bool on_both = false;
  int rank = 0;
  bool transverse = false;
};

struct TransversalityReport {
  int ambient_dim = 0;
  int expected_dim = 0;
  std::vector<TransversalityVerdict> samples;

  bool dimension_ok() const { return expected_dim >= 0; }
  bool transverse() const;
};

TransversalityReport transversality_check(const Submanifold& c, const Submanifold& d,
                                          std::span<const Vector> samples);

struct IntersectionResult {
  int dim = 0;
  /// Isolated intersection points (dim 0), sorted lexicographically.
  std::vector<Vector> points;
  /// The intersection core when it is affine (any dim) or a single point.
  std::optional<Submanifold> core;

  /// Sample points for transversality checks.
  std::vector<Vector> samples() const;
};

/// Damped Gauss-Newton on |F(psi(u))|^2, F the defining map of `implicit`
/// and psi the chart of `param`. `residuals` records |F(psi(u))| after
/// every accepted step; damping halves the step until the residual drops.
struct RefinementTrace {
  Vector u;
  std::vector<double> residuals;
  bool converged = false;
};
RefinementTrace refine_intersection(const Submanifold& param, const Submanifold& implicit, Vector seed);

/// C ∩ D. Affine pairs are solved exactly; otherwise zero-dimensional
/// intersections are found by grid seeding plus Gauss-Newton on the defining
/// map of one core composed with the chart of the other.
IntersectionResult intersect(const Submanifold& c, const Submanifold& d);

/// Grid of `per_axis^k` points over a bounded box (endpoints included).
std::vector<Vector> grid_points(const Box& box, int per_axis);

}  // namespace geostate
