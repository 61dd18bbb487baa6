#include "geostate/oracle.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace geostate {

namespace {

constexpr double kTubeHalfWidth = 8.0;

struct OrthonormalSplit {
  Matrix q;  // n x k orthonormal tangent
  Matrix r;  // k x k, positive diagonal, T = Q R
  Matrix normal;  // n x (n-k) orthonormal complement
};

OrthonormalSplit orthonormal_split(const Matrix& t) {
  const Eigen::Index n = t.rows();
  const Eigen::Index k = t.cols();
  OrthonormalSplit s;
  if (k == 0) {
    s.q = Matrix(n, 0);
    s.r = Matrix(0, 0);
  } else {
    Eigen::HouseholderQR<Matrix> qr(t);
    s.q = qr.householderQ() * Matrix::Identity(n, k);
    s.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < k; ++i) {
      if (s.r(i, i) < 0.0) {
        s.r.row(i) *= -1.0;
        s.q.col(i) *= -1.0;
      }
    }
  }
  s.normal = complete_to_ambient(Frame::tangent(t)).data();
  return s;
}

// sum_i c_i (x_i - x0_i), skipping zero coefficients.
expr::Expr affine_form(const Vector& coeffs, const Vector& x0) {
  std::optional<expr::Expr> sum;
  for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
    if (coeffs(i) == 0.0) continue;
    expr::Expr xi = expr::Expr::identifier("x" + std::to_string(i + 1));
    expr::Expr shifted = x0(i) == 0.0 ? xi : xi - expr::Expr::number(x0(i));
    expr::Expr term = coeffs(i) == 1.0 ? shifted : expr::Expr::number(coeffs(i)) * shifted;
    sum = sum ? *sum + term : term;
  }
  return sum ? *sum : expr::Expr::number(0.0);
}

expr::Expr mollifier_expr(const expr::Expr& t, double eps) {
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * eps * eps);
  const double rate = -1.0 / (2.0 * eps * eps);
  return expr::Expr::number(norm) *
         expr::Expr::call(expr::Function::Exp,
                          expr::Expr::number(rate) * expr::Expr::pow(t, expr::Expr::number(2.0)));
}

// |det B|^(1-alpha) with nu_state = B^T nu_orthonormal; must be constant on the core.
Complex conormal_factor(const GeometricState& state, const Matrix& normal, const Box& box) {
  if (state.convention() == ConormalConvention::Orthonormal || normal.cols() == 0) return 1.0;
  const Matrix nu_o = normal.transpose();
  auto factor_at = [&](const Vector& u) {
    const Matrix nu = state.conormal_at(std::span(u.data(), u.size()));
    const Matrix b = change_of_basis(Frame::covector(nu_o), Frame::covector(nu));
    return det_abs_pow(b, 1.0 - state.degree());
  };
  const Vector center = box.center();
  const Complex f0 = factor_at(center);
  Vector corner = center;
  for (int i = 0; i < box.dim(); ++i) {
    if (std::isfinite(box.axes[static_cast<std::size_t>(i)].lo)) corner(i) = box.axes[static_cast<std::size_t>(i)].lo;
  }
  if (std::abs(factor_at(corner) - f0) > 1e-12 * std::abs(f0)) {
    throw Error(ErrorCode::NonAffineCore, "conormal convention varies along the affine core");
  }
  return f0;
}

}  // namespace

double gaussian_mollifier(double t, double eps) {
  return std::exp(-t * t / (2.0 * eps * eps)) / std::sqrt(2.0 * std::numbers::pi * eps * eps);
}

TubeDensity mollify(const GeometricState& state, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::DomainError, "mollifier width must be positive");
  const Submanifold& core = state.core();
  if (!core.is_affine()) throw Error(ErrorCode::NonAffineCore, "core '" + core.name() + "' is not affine");
  if (!state.coefficient_expr()) {
    throw Error(ErrorCode::MissingExpression, "state coefficient is not an expression");
  }
  const int n = core.ambient_dim();
  const int k = core.dim();
  const Vector& x0 = core.base_point();
  const Matrix& t = core.tangent_matrix();
  const OrthonormalSplit split = orthonormal_split(t);
  const Box box = state.integration_box();

  // Value on (Q, N^T) from the value on (T, nu): T = Q R and nu = B^T N^T.
  const Complex tangent_factor = k == 0 ? Complex(1.0) : det_abs_pow(split.r, state.degree());
  const Complex factor = 1.0 / (tangent_factor * conormal_factor(state, split.normal, box));

  // u = T^+ (x - x0) expressed in ambient coordinates.
  const Matrix pinv = k == 0 ? Matrix(0, n) : Matrix(least_squares(t, Matrix::Identity(n, n)));
  std::map<std::string, expr::Expr> chart;
  for (int i = 0; i < k; ++i) chart.emplace("u" + std::to_string(i + 1), affine_form(pinv.row(i).transpose(), x0));
  expr::ComplexExpr coeff = state.coefficient_expr()->substitute(chart);
  if (factor != Complex(1.0)) coeff = coeff.scaled(factor);

  expr::Expr tube = expr::Expr::number(1.0);
  bool first = true;
  for (Eigen::Index j = 0; j < split.normal.cols(); ++j) {
    expr::Expr bump = mollifier_expr(affine_form(split.normal.col(j), x0), eps);
    tube = first ? bump : tube * bump;
    first = false;
  }
  if (!first) {
    coeff.re = coeff.re * tube;
    if (coeff.im) coeff.im = *coeff.im * tube;
  }

  Region region;
  region.origin = x0;
  region.axes = hcat(t, split.normal);
  region.box = box;
  for (Eigen::Index j = 0; j < split.normal.cols(); ++j) {
    region.box.axes.push_back(Interval{-kTubeHalfWidth * eps, kTubeHalfWidth * eps});
  }
  return TubeDensity{AmbientDensity(n, state.degree(), coeff, region), eps};
}

QuadratureResult smooth_pair(const AmbientDensity& first, const AmbientDensity& second, const Region& region,
                             const QuadratureOptions& opts) {
  if (!degrees_complementary(first.degree(), second.degree())) {
    throw Error(ErrorCode::DegreeMismatch, "smooth pairing needs degrees alpha and 1 - alpha");
  }
  if (first.ambient_dim() != second.ambient_dim() || region.axes.rows() != first.ambient_dim()) {
    throw Error(ErrorCode::DegreeMismatch, "densities live in different ambient spaces");
  }
  const double jac = region.jacobian();
  Integrand f = [&](std::span<const double> z) {
    const Vector x = region.map(z);
    return first.coefficient(x) * second.coefficient(x) * jac;
  };
  return integrate(f, region.box, opts);
}

QuadratureResult smooth_pair(const AmbientDensity& first, const AmbientDensity& second, const Box& box,
                             const QuadratureOptions& opts) {
  return smooth_pair(first, second, Region::axis_aligned(box), opts);
}

std::vector<Complex> oracle_pairing(const GeometricState& state, const AmbientDensity& test,
                                    const std::vector<double>& eps_list, const QuadratureOptions& opts) {
  std::vector<Complex> out;
  for (double eps : eps_list) {
    const TubeDensity tube = mollify(state, eps);
    out.push_back(smooth_pair(tube.density, test, *tube.density.support(), opts).value);
  }
  return out;
}

std::vector<Complex> oracle_inner(const GeometricState& first, const GeometricState& second,
                                  const Submanifold& intersection, const std::vector<double>& eps_list,
                                  const QuadratureOptions& opts) {
  if (!first.core().is_affine() || !second.core().is_affine() || !intersection.is_affine()) {
    throw Error(ErrorCode::NonAffineCore, "the tube oracle needs affine cores");
  }
  if (!intersection.domain().bounded()) {
    throw Error(ErrorCode::NonCompactIntersection, "the tube oracle needs a bounded intersection box");
  }
  const Matrix stacked = vcat(orthonormal_split(first.core().tangent_matrix()).normal.transpose(),
                              orthonormal_split(second.core().tangent_matrix()).normal.transpose());
  // Directions along which the two tubes' normal coordinates are (b_C, b_D).
  const Matrix across = stacked.rows() == 0 ? Matrix(intersection.ambient_dim(), 0)
                                            : Matrix(least_squares(stacked, Matrix::Identity(stacked.rows(), stacked.rows())));
  std::vector<Complex> out;
  for (double eps : eps_list) {
    const TubeDensity t1 = mollify(first, eps);
    const TubeDensity t2 = mollify(second, eps);
    Region region;
    region.origin = intersection.base_point();
    region.axes = hcat(intersection.tangent_matrix(), across);
    region.box = intersection.domain();
    for (Eigen::Index j = 0; j < across.cols(); ++j) {
      region.box.axes.push_back(Interval{-kTubeHalfWidth * eps, kTubeHalfWidth * eps});
    }
    out.push_back(smooth_pair(t1.density, t2.density, region, opts).value);
  }
  return out;
}

ConvergenceReport analyze_convergence(Complex geometric, const std::vector<double>& eps_list,
                                      const std::vector<Complex>& oracle_values, double noise_floor) {
  if (eps_list.size() < 3 || oracle_values.size() != eps_list.size()) {
    throw Error(ErrorCode::NonConvergent, "convergence check needs at least three widths with one value each");
  }
  for (std::size_t i = 1; i < eps_list.size(); ++i) {
    if (!(eps_list[i] < eps_list[i - 1])) {
      throw Error(ErrorCode::NonConvergent, "widths must be strictly decreasing");
    }
  }
  ConvergenceReport report;
  report.geometric = geometric;
  report.eps = eps_list;
  report.oracle = oracle_values;
  report.noise_floor = noise_floor;
  for (const Complex& v : oracle_values) report.errors.push_back(std::abs(v - geometric));
  report.converged = true;
  for (std::size_t i = 1; i < report.errors.size(); ++i) {
    const double prev = report.errors[i - 1];
    const double cur = report.errors[i];
    const bool at_floor = cur <= noise_floor;
    const bool prev_at_floor = prev <= noise_floor;
    if (prev_at_floor ? !at_floor : !(cur < prev)) report.converged = false;
    if (!at_floor && !prev_at_floor) {
      report.orders.push_back(std::log(prev / cur) / std::log(eps_list[i - 1] / eps_list[i]));
    } else {
      report.orders.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  const double scale = std::abs(geometric);
  report.final_relative_error = scale > 0.0 ? report.errors.back() / scale : report.errors.back();
  return report;
}

ConvergenceReport converge_check(Complex geometric, const std::vector<double>& eps_list,
                                 const std::vector<Complex>& oracle_values, double noise_floor) {
  ConvergenceReport report = analyze_convergence(geometric, eps_list, oracle_values, noise_floor);
  if (!report.converged) {
    throw Error(ErrorCode::NonConvergent, "oracle errors do not decrease as the mollifier width shrinks");
  }
  return report;
}

}  // namespace geostate
