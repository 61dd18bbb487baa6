#include "geostate/product.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace geostate {

Complex transverse_product_coefficient(const LocalProductData& data, Complex alpha, Complex beta,
                                       const NormalChoices& choices) {
  const Eigen::Index n = data.a.rows() > 0 ? data.a.rows() : data.nu_c.cols();
  const Matrix stacked = vcat(data.nu_c, data.nu_d);
  if (stacked.rows() > 0 && numerical_rank(stacked) < stacked.rows()) {
    throw Error(ErrorCode::TransversalityFailure, "conormal frames of the two cores are dependent");
  }
  if (data.s.cols() + stacked.rows() != n) {
    throw Error(ErrorCode::TransversalityFailure, "intersection dimension does not match k_C + k_D - n");
  }
  const Matrix n_c = choices.n_c ? *choices.n_c : dual_normal_frame(Frame::covector(data.nu_c), Frame::tangent(data.a)).data();
  const Matrix n_d = choices.n_d ? *choices.n_d : dual_normal_frame(Frame::covector(data.nu_d), Frame::tangent(data.b)).data();
  const Matrix n_e = choices.n_e ? *choices.n_e : dual_normal_frame(Frame::covector(stacked), Frame::tangent(data.s)).data();

  const Matrix common = hcat(data.s, n_e);
  if (numerical_rank(common) < n) {
    throw Error(ErrorCode::TransversalityFailure, "common ambient frame is singular");
  }
  const Matrix m1 = change_of_basis(Frame::tangent(hcat(data.a, n_c)), Frame::tangent(common));
  const Matrix m2 = change_of_basis(Frame::tangent(hcat(data.b, n_d)), Frame::tangent(common));
  return data.g1 * data.g2 * det_abs_pow(m1, alpha) * det_abs_pow(m2, beta);
}

namespace {

Vector chart_point(const Submanifold& core, const Submanifold& intersection, std::span<const double> w,
                   const Vector& x) {
  if (core.same_as(intersection)) return Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
  return core.locate(x);
}

// States vanish outside their support boxes.
bool within_support(const GeometricState& state, const Vector& x) {
  if (!state.support()) return true;
  const Vector u = state.core().locate(x);
  return state.support()->contains(std::span(u.data(), static_cast<std::size_t>(u.size())), 1e-12);
}

}  // namespace

LocalProductData gather_product_data(const GeometricState& first, const GeometricState& second,
                                     const Submanifold& intersection, std::span<const double> w) {
  const Vector x = intersection.point_at(w);
  const Vector uc = chart_point(first.core(), intersection, w, x);
  const Vector ud = chart_point(second.core(), intersection, w, x);
  const std::span<const double> uc_span(uc.data(), static_cast<std::size_t>(uc.size()));
  const std::span<const double> ud_span(ud.data(), static_cast<std::size_t>(ud.size()));
  LocalProductData data;
  data.s = intersection.tangent_at(w);
  data.a = first.tangent_at(uc_span);
  data.b = second.tangent_at(ud_span);
  data.nu_c = first.conormal_at(uc_span);
  data.nu_d = second.conormal_at(ud_span);
  data.g1 = first.coefficient(uc_span);
  data.g2 = second.coefficient(ud_span);
  return data;
}

Complex product_at_point(const GeometricState& first, const GeometricState& second, const Submanifold& intersection,
                         std::span<const double> w) {
  return transverse_product_coefficient(gather_product_data(first, second, intersection, w), first.degree(),
                                        second.degree());
}

GeometricState product(const GeometricState& first, const GeometricState& second, const Submanifold& intersection) {
  const int n = first.core().ambient_dim();
  if (second.core().ambient_dim() != n || intersection.ambient_dim() != n) {
    throw Error(ErrorCode::NotOnBothCores, "states and intersection live in different ambient spaces");
  }
  if (intersection.dim() != first.core().dim() + second.core().dim() - n) {
    throw Error(ErrorCode::TransversalityFailure, "dim E must equal dim C + dim D - n");
  }
  auto coefficient = [first, second, intersection](std::span<const double> w) {
    return product_at_point(first, second, intersection, w);
  };
  auto conormal = [first, second, intersection](std::span<const double> w) {
    const LocalProductData data = gather_product_data(first, second, intersection, w);
    return vcat(data.nu_c, data.nu_d);
  };
  return GeometricState(intersection, first.degree() + second.degree(), coefficient, ConormalConvention::Derived,
                        conormal, intersection.domain());
}

InnerProductResult inner_product(const GeometricState& first, const GeometricState& second,
                                 const Submanifold& intersection, const QuadratureOptions& opts) {
  if (!degrees_complementary(first.degree(), second.degree())) {
    throw Error(ErrorCode::DegreeMismatch, "inner product needs degrees alpha and 1 - alpha");
  }
  const GeometricState joint = product(first, second, intersection);
  // Degree one: the conormal power 1 - (alpha + beta) vanishes, so the
  // coefficient is a 1-density on E independent of the conormal frame.
  Box box = intersection.domain();
  for (const GeometricState* state : {&first, &second}) {
    if (state->core().same_as(intersection) && state->support()) box = box.intersect(*state->support());
  }
  if (!box.bounded()) {
    throw Error(ErrorCode::NonCompactIntersection, "intersection '" + intersection.name() + "' has no bounded chart box");
  }
  Integrand f = [&](std::span<const double> w) { return joint.coefficient(w); };
  const QuadratureResult q = integrate(f, box, opts);
  return {q.value, q.error_estimate, intersection.dim() == 0 ? std::size_t{1} : std::size_t{0}};
}

InnerProductResult inner_product(const GeometricState& first, const GeometricState& second,
                                 const IntersectionResult& intersection, const QuadratureOptions& opts) {
  if (intersection.dim == 0 && !intersection.points.empty()) {
    InnerProductResult total{0.0, 0.0, 0};
    for (std::size_t i = 0; i < intersection.points.size(); ++i) {
      if (!within_support(first, intersection.points[i]) || !within_support(second, intersection.points[i])) continue;
      const Submanifold point = Submanifold::point("E" + std::to_string(i), intersection.points[i]);
      const InnerProductResult r = inner_product(first, second, point, opts);
      total.value += r.value;
      total.error_estimate += r.error_estimate;
      ++total.intersection_points;
    }
    return total;
  }
  if (!intersection.core) throw Error(ErrorCode::NoIntersectionFound, "empty intersection");
  Submanifold core = *intersection.core;
  if (!core.domain().bounded()) {
    if (auto box = derive_intersection_box(first, second, core)) core = core.with_domain(*box);
  }
  return inner_product(first, second, core, opts);
}

std::optional<Box> derive_intersection_box(const GeometricState& first, const GeometricState& second,
                                           const Submanifold& intersection) {
  if (!intersection.is_affine() || intersection.dim() != 1) return std::nullopt;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (const GeometricState* state : {&first, &second}) {
    const Submanifold& core = state->core();
    if (!core.is_affine()) return std::nullopt;
    // u(w) = T^+ (p + s w - x0) = offset + slope w
    const Matrix pinv_t = least_squares(core.tangent_matrix(), Matrix::Identity(core.ambient_dim(), core.ambient_dim()));
    const Vector offset = pinv_t * (intersection.base_point() - core.base_point());
    const Vector slope = pinv_t * intersection.tangent_matrix().col(0);
    const Box box = state->integration_box();
    for (int i = 0; i < core.dim(); ++i) {
      const Interval& iv = box.axes[static_cast<std::size_t>(i)];
      if (std::abs(slope(i)) < 1e-14) {
        if (offset(i) < iv.lo || offset(i) > iv.hi) return Box{{Interval{0.0, 0.0}}};
        continue;
      }
      double a = (iv.lo - offset(i)) / slope(i);
      double b = (iv.hi - offset(i)) / slope(i);
      if (a > b) std::swap(a, b);
      lo = std::max(lo, a);
      hi = std::min(hi, b);
    }
  }
  if (!std::isfinite(lo) || !std::isfinite(hi)) return std::nullopt;
  if (hi < lo) hi = lo;
  return Box{{Interval{lo, hi}}};
}

}  // namespace geostate
