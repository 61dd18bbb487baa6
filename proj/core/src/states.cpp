#include "geostate/states.hpp"

#include <algorithm>

namespace geostate {

GeometricState::GeometricState(Submanifold core, Complex degree, CoefficientFn coefficient,
                               ConormalConvention convention, ConormalFamily conormal, std::optional<Box> support,
                               std::optional<expr::ComplexExpr> coefficient_expr)
    : core_(std::move(core)),
      degree_(degree),
      coefficient_(std::move(coefficient)),
      convention_(convention),
      conormal_(std::move(conormal)),
      support_(std::move(support)),
      coefficient_expr_(std::move(coefficient_expr)) {
  if (support_ && support_->dim() != core_.dim()) {
    throw Error(ErrorCode::SceneError, "support box dimension differs from core dimension");
  }
}

Box GeometricState::integration_box() const {
  return support_ ? core_.domain().intersect(*support_) : core_.domain();
}

ConormalFamily conormal_family(const Submanifold& core, const ConormalSpec& spec, const expr::Bindings& parameters) {
  switch (spec.convention) {
    case ConormalConvention::Orthonormal:
      return [core](std::span<const double> u) { return orthonormal_conormal(core.tangent_at(u)); };
    case ConormalConvention::ImplicitGradient:
      if (!core.has_implicit()) {
        throw Error(ErrorCode::MissingImplicitForm, "core '" + core.name() + "' has no implicit form");
      }
      return [core](std::span<const double> u) { return core.defining_gradient(core.point_at(u)); };
    case ConormalConvention::Declared: {
      const int q = core.codim();
      const int n = core.ambient_dim();
      if (static_cast<int>(spec.rows.size()) != q) {
        throw Error(ErrorCode::DegenerateCovectors, "declared conormal frame needs n-k rows");
      }
      const auto names = expr::coordinate_names("u", core.dim());
      auto compiled = std::make_shared<std::vector<expr::CompiledExpr>>();
      for (const auto& row : spec.rows) {
        if (static_cast<int>(row.size()) != n) {
          throw Error(ErrorCode::DegenerateCovectors, "declared conormal row needs n entries");
        }
        for (const auto& e : row) compiled->emplace_back(e, names, parameters);
      }
      return [compiled, q, n](std::span<const double> u) {
        Matrix nu(q, n);
        for (int i = 0; i < q; ++i) {
          for (int j = 0; j < n; ++j) nu(i, j) = (*compiled)[static_cast<std::size_t>(i * n + j)](u);
        }
        return nu;
      };
    }
    case ConormalConvention::Derived:
      break;
  }
  throw Error(ErrorCode::SceneError, "derived conormal families come from computations");
}

GeometricState make_state(const Submanifold& core, Complex degree, const expr::ComplexExpr& coefficient,
                          const ConormalSpec& conormal, std::optional<Box> support, const expr::Bindings& parameters) {
  const auto names = expr::coordinate_names("u", core.dim());
  // Parameters are folded in so the stored expression is self-contained.
  std::map<std::string, expr::Expr> constants;
  for (const auto& [name, value] : parameters) {
    if (std::find(names.begin(), names.end(), name) == names.end()) constants.emplace(name, expr::Expr::number(value));
  }
  const expr::ComplexExpr folded = coefficient.substitute(constants);
  expr::CompiledComplexExpr compiled(folded, names);
  return GeometricState(core, degree, [compiled](std::span<const double> u) { return compiled(u); },
                        conormal.convention, conormal_family(core, conormal, parameters), std::move(support),
                        folded);
}

GeometricState zero_section_state(const Submanifold& core, const expr::Expr& h, const ConormalSpec& conormal,
                                  std::optional<Box> support, const expr::Bindings& parameters) {
  std::map<std::string, expr::Expr> at_zero;
  for (const auto& name : expr::coordinate_names("xi", core.codim())) at_zero.emplace(name, expr::Expr::number(0.0));
  expr::ComplexExpr g;
  g.re = h.substitute(at_zero);
  return make_state(core, 0.5, g, conormal, std::move(support), parameters);
}

GeometricState with_conormal(const GeometricState& state, ConormalConvention convention, ConormalFamily target) {
  const GeometricState source = state;
  const Complex power = 1.0 - state.degree();
  auto coefficient = [source, target, power](std::span<const double> u) {
    const Matrix from = source.conormal_at(u);
    const Matrix to = target(u);
    Complex factor = 1.0;
    if (from.rows() > 0) {
      const Matrix b = change_of_basis(Frame::covector(from), Frame::covector(to));
      factor = det_abs_pow(b, power);
    }
    return source.coefficient(u) * factor;
  };
  return GeometricState(state.core(), state.degree(), coefficient, convention, std::move(target), state.support());
}

bool degrees_complementary(Complex a, Complex b) { return std::abs(a + b - 1.0) <= 1e-12; }

Complex pairing_integrand(const GeometricState& state, const AmbientDensity& test, std::span<const double> u,
                          const std::optional<Matrix>& normal_shift) {
  const Submanifold& core = state.core();
  const Vector x = core.point_at(u);
  const Matrix t = core.tangent_at(u);
  if (core.dim() > 0 && numerical_rank(t, 1e-8) < core.dim()) {
    throw Error(ErrorCode::ImmersionFailure, "tangent frame of '" + core.name() + "' is rank deficient");
  }
  const Matrix nu = state.conormal_at(u);
  Matrix n = dual_normal_frame(Frame::covector(nu), Frame::tangent(t)).data();
  if (normal_shift && core.dim() > 0 && n.cols() > 0) n += t * *normal_shift;
  return state.coefficient(u) * test.coefficient(x) * det_abs_pow(hcat(t, n), test.degree());
}

PairingResult pair_with_test(const GeometricState& state, const AmbientDensity& test, const PairingOptions& opts) {
  if (!degrees_complementary(state.degree(), test.degree())) {
    throw Error(ErrorCode::DegreeMismatch, "state and test degrees must sum to 1");
  }
  if (state.core().ambient_dim() != test.ambient_dim()) {
    throw Error(ErrorCode::DegreeMismatch, "state and test live in different ambient spaces");
  }
  const Box box = state.integration_box();
  if (!box.bounded()) {
    throw Error(ErrorCode::UnboundedDomain, "state '" + state.core().name() + "' has no bounded support box");
  }
  Integrand f = [&](std::span<const double> u) {
    std::optional<Matrix> shift;
    if (opts.normal_shift) shift = opts.normal_shift(u);
    return pairing_integrand(state, test, u, shift);
  };
  const QuadratureResult q = integrate(f, box, opts.quadrature);
  return {q.value, q.error_estimate};
}

}  // namespace geostate
