#include "geostate/density.hpp"

namespace geostate {

Region Region::axis_aligned(Box box) {
  const int n = box.dim();
  return Region{Vector::Zero(n), Matrix::Identity(n, n), std::move(box)};
}

Vector Region::map(std::span<const double> z) const {
  return origin + axes * Eigen::Map<const Vector>(z.data(), static_cast<Eigen::Index>(z.size()));
}

double Region::jacobian() const { return axes.rows() == 0 ? 1.0 : std::abs(axes.determinant()); }

AmbientDensity::AmbientDensity(int ambient_dim, Complex degree, expr::ComplexExpr coefficient,
                               std::optional<Region> support, const expr::Bindings& parameters)
    : n_(ambient_dim),
      degree_(degree),
      compiled_(coefficient, expr::coordinate_names("x", ambient_dim), parameters),
      support_(std::move(support)) {
  if (support_ && support_->axes.rows() != n_) {
    throw Error(ErrorCode::SceneError, "support region has wrong ambient dimension");
  }
}

Complex AmbientDensity::value_on(const Vector& x, const Matrix& frame) const {
  return coefficient(x) * det_abs_pow(frame, degree_);
}

DensityValue restrict(const AmbientDensity& phi, const Submanifold& core, std::span<const double> u,
                      const std::optional<Matrix>& normal_representatives) {
  const FrameBundleSample s = frames_at(core, u);
  const Matrix normals = normal_representatives ? *normal_representatives
                                                : complete_to_ambient(Frame::tangent(s.tangent)).data();
  const Matrix split = hcat(s.tangent, normals);
  const Complex value = phi.coefficient(s.point) * det_abs_pow(split, phi.degree());
  return DensityValue(value, phi.degree(), Frame::tangent(split));
}

}  // namespace geostate
