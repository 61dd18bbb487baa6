#pragma once

#include <complex>

#include <Eigen/Dense>

#include "geostate/error.hpp"

namespace geostate {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace tolerances {
/// Relative singularity threshold: |det M| <= singular * (product of column norms).
inline constexpr double singular = 1e-12;
inline constexpr double rank = 1e-9;
inline constexpr double span = 1e-9;
inline constexpr double annihilate = 1e-9;
}  // namespace tolerances

enum class FrameKind { Tangent, Normal, Covector };

/// An ordered tuple of linearly independent vectors in R^n.
///
/// Tangent and normal frames store their vectors as the columns of an n x m
/// matrix; covector frames store their functionals as the rows of an m x n
/// matrix. Independence is checked on construction.
class Frame {
 public:
  Frame(Matrix data, FrameKind kind);

  static Frame tangent(Matrix columns) { return Frame(std::move(columns), FrameKind::Tangent); }
  static Frame normal(Matrix columns) { return Frame(std::move(columns), FrameKind::Normal); }
  static Frame covector(Matrix rows) { return Frame(std::move(rows), FrameKind::Covector); }
  static Frame standard(int n) { return tangent(Matrix::Identity(n, n)); }

  FrameKind kind() const noexcept { return kind_; }
  bool is_covector() const noexcept { return kind_ == FrameKind::Covector; }

  /// Number of vectors m.
  int size() const noexcept;
  /// Dimension n of the space the vectors live in.
  int ambient_dim() const noexcept;

  const Matrix& data() const noexcept { return data_; }
  /// The frame as columns, regardless of kind (covectors transposed).
  Matrix columns() const;

 private:
  Matrix data_;
  FrameKind kind_;
};

/// Numerical rank by singular values, relative to the largest one.
int numerical_rank(const Matrix& m, double rel_tol = tolerances::rank);

/// |det M|^alpha computed as exp(alpha * ln|det M|).
///
/// A singular M (|det M| <= singular_tol times the Hadamard bound) gives 0
/// when Re(alpha) > 0 and throws SingularFrame otherwise.
Complex det_abs_pow(const Matrix& m, Complex alpha);

/// The square matrix B with `to = from * B` (column convention).
///
/// Covector frames are compared through their transposes. Throws SpanMismatch
/// when the two frames do not span the same subspace.
Matrix change_of_basis(const Frame& from, const Frame& to);

/// Vectors n_j with nu_i(n_j) = delta_ij, the minimum-norm solution.
///
/// Any two valid solutions differ by vectors in span(tangent); determinants
/// of [tangent | n] do not see the difference.
Frame dual_normal_frame(const Frame& covectors, const Frame& tangent);

/// Orthonormal basis of the Euclidean orthogonal complement of `tangent`,
/// oriented so that det[tangent | result] > 0. Throws RankDeficient.
Frame complete_to_ambient(const Frame& tangent);

/// Minimum-norm least-squares solve of a * x = b.
Matrix least_squares(const Matrix& a, const Matrix& b);

/// Horizontal concatenation [a | b]; either may have zero columns.
Matrix hcat(const Matrix& a, const Matrix& b);
/// Vertical concatenation; either may have zero rows.
Matrix vcat(const Matrix& a, const Matrix& b);

/// A density value relative to a frame: under e' = e * B it becomes
/// |det B|^degree times the stored value.
class DensityValue {
 public:
  DensityValue(Complex value, Complex degree, Frame frame)
      : value_(value), degree_(degree), frame_(std::move(frame)) {}

  Complex value() const noexcept { return value_; }
  Complex degree() const noexcept { return degree_; }
  const Frame& frame() const noexcept { return frame_; }

  DensityValue reexpress(const Frame& target) const;

 private:
  Complex value_;
  Complex degree_;
  Frame frame_;
};

}  // namespace geostate
