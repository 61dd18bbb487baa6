#include "geostate/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace geostate {

Frame::Frame(Matrix data, FrameKind kind) : data_(std::move(data)), kind_(kind) {
  const int m = size();
  if (m > ambient_dim()) {
    throw Error(ErrorCode::RankDeficient,
                "frame has " + std::to_string(m) + " vectors in dimension " +
                    std::to_string(ambient_dim()));
  }
  if (m > 0 && numerical_rank(data_) < m) {
    throw Error(ErrorCode::RankDeficient, "frame vectors are linearly dependent");
  }
}

int Frame::size() const noexcept {
  return static_cast<int>(is_covector() ? data_.rows() : data_.cols());
}

int Frame::ambient_dim() const noexcept {
  return static_cast<int>(is_covector() ? data_.cols() : data_.rows());
}

Matrix Frame::columns() const { return is_covector() ? Matrix(data_.transpose()) : data_; }

int numerical_rank(const Matrix& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > rel_tol * sv(0)) ++r;
  }
  return r;
}

Complex det_abs_pow(const Matrix& m, Complex alpha) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::SpanMismatch, "det_abs_pow needs a square matrix");
  }
  if (m.rows() == 0) return {1.0, 0.0};
  const double det = std::abs(m.partialPivLu().determinant());
  double hadamard = 1.0;
  for (Eigen::Index j = 0; j < m.cols(); ++j) hadamard *= m.col(j).norm();
  if (det <= tolerances::singular * hadamard || det == 0.0) {
    if (alpha.real() > 0.0) return {0.0, 0.0};
    throw Error(ErrorCode::SingularFrame, "singular frame change with Re(degree) <= 0");
  }
  if (alpha.imag() == 0.0) return {std::pow(det, alpha.real()), 0.0};
  return std::exp(alpha * std::log(det));
}

Matrix least_squares(const Matrix& a, const Matrix& b) {
  if (a.cols() == 0) return Matrix::Zero(0, b.cols());
  return a.completeOrthogonalDecomposition().solve(b);
}

Matrix change_of_basis(const Frame& from, const Frame& to) {
  const Matrix f = from.columns();
  const Matrix t = to.columns();
  if (f.rows() != t.rows() || f.cols() != t.cols()) {
    throw Error(ErrorCode::SpanMismatch, "frames have different sizes");
  }
  if (f.cols() == 0) return Matrix(0, 0);
  Matrix b = least_squares(f, t);
  const double residual = (f * b - t).norm();
  if (residual > tolerances::span * std::max(1.0, t.norm())) {
    throw Error(ErrorCode::SpanMismatch,
                "frames do not span the same subspace (residual " + std::to_string(residual) + ")");
  }
  return b;
}

Frame dual_normal_frame(const Frame& covectors, const Frame& tangent) {
  const Matrix nu = covectors.is_covector() ? covectors.data() : Matrix(covectors.data().transpose());
  const Matrix t = tangent.columns();
  const int n = static_cast<int>(nu.cols());
  const int q = static_cast<int>(nu.rows());
  if (t.rows() != n && t.cols() > 0) {
    throw Error(ErrorCode::SpanMismatch, "covectors and tangent live in different dimensions");
  }
  if (q > 0 && numerical_rank(nu) < q) {
    throw Error(ErrorCode::DegenerateCovectors, "conormal covectors are dependent");
  }
  for (int i = 0; i < q; ++i) {
    for (Eigen::Index j = 0; j < t.cols(); ++j) {
      const double pairing = nu.row(i).dot(t.col(j));
      if (std::abs(pairing) > tolerances::annihilate * nu.row(i).norm() * t.col(j).norm()) {
        throw Error(ErrorCode::DegenerateCovectors, "covectors do not annihilate the tangent frame");
      }
    }
  }
  if (q == 0) return Frame::normal(Matrix(n, 0));
  // nu^T (nu nu^T)^{-1}: lies in the row space of nu, hence minimal norm.
  const Matrix gram = nu * nu.transpose();
  Matrix dual = nu.transpose() * gram.ldlt().solve(Matrix::Identity(q, q));
  return Frame::normal(std::move(dual));
}

Frame complete_to_ambient(const Frame& tangent) {
  const Matrix t = tangent.columns();
  const int n = static_cast<int>(t.rows());
  const int k = static_cast<int>(t.cols());
  if (k > 0 && numerical_rank(t) < k) {
    throw Error(ErrorCode::RankDeficient, "tangent frame is rank deficient");
  }
  const int q = n - k;
  // Orthonormal basis of span(t) first, then greedy Gram-Schmidt over the
  // standard basis picking the largest residual each time.
  Matrix basis(n, 0);
  if (k > 0) {
    Eigen::HouseholderQR<Matrix> qr(t);
    basis = qr.householderQ() * Matrix::Identity(n, k);
  }
  Matrix result(n, q);
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  for (int c = 0; c < q; ++c) {
    int best = -1;
    double best_norm = -1.0;
    Vector best_vec;
    for (int i = 0; i < n; ++i) {
      if (used[static_cast<std::size_t>(i)]) continue;
      Vector v = Vector::Unit(n, i);
      for (int pass = 0; pass < 2; ++pass) {
        v -= basis * (basis.transpose() * v);
      }
      const double nv = v.norm();
      if (nv > best_norm + 1e-12) {
        best = i;
        best_norm = nv;
        best_vec = v;
      }
    }
    used[static_cast<std::size_t>(best)] = true;
    best_vec /= best_norm;
    result.col(c) = best_vec;
    Matrix grown(n, basis.cols() + 1);
    grown << basis, best_vec;
    basis = std::move(grown);
  }
  if (q > 0 && hcat(t, result).determinant() < 0.0) result.col(q - 1) *= -1.0;
  return Frame::normal(std::move(result));
}

Matrix hcat(const Matrix& a, const Matrix& b) {
  const Eigen::Index rows = a.cols() > 0 ? a.rows() : b.rows();
  Matrix out(rows, a.cols() + b.cols());
  if (a.cols() > 0) out.leftCols(a.cols()) = a;
  if (b.cols() > 0) out.rightCols(b.cols()) = b;
  return out;
}

Matrix vcat(const Matrix& a, const Matrix& b) {
  const Eigen::Index cols = a.rows() > 0 ? a.cols() : b.cols();
  Matrix out(a.rows() + b.rows(), cols);
  if (a.rows() > 0) out.topRows(a.rows()) = a;
  if (b.rows() > 0) out.bottomRows(b.rows()) = b;
  return out;
}

DensityValue DensityValue::reexpress(const Frame& target) const {
  const Matrix b = change_of_basis(frame_, target);
  return DensityValue(value_ * det_abs_pow(b, degree_), degree_, target);
}

}  // namespace geostate
