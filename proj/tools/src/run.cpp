#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "geostate/scene.hpp"

namespace geostate::scene {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string snapped(double v) { return format_double(std::abs(v) < 1e-13 ? 0.0 : v); }

std::string tuple(const Vector& v) {
  std::string out = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? "," : "") + snapped(v(i));
  return out + ")";
}

std::string complex_text(Complex z) {
  if (z.imag() == 0.0) return format_double(z.real());
  return format_double(z.real()) + (z.imag() < 0 ? " - " : " + ") + format_double(std::abs(z.imag())) + "i";
}

std::vector<std::string> coordinate_names(char prefix, int count) {
  std::vector<std::string> out;
  for (int i = 1; i <= count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

const Submanifold& core_named(const Scene& scene, const std::string& name) {
  try {
    return scene.submanifold(name);
  } catch (const Error&) {
    return scene.state(name).core();
  }
}

Box bounded_or_unit(const Box& box) {
  Box out = box;
  for (auto& axis : out.axes) {
    if (!axis.bounded()) axis = Interval{-1.0, 1.0};
  }
  return out;
}

// Points of E at which transversality is checked.
std::vector<Vector> samples_on(const Submanifold& e) {
  if (e.dim() == 0) return {e.point_at({})};
  std::vector<Vector> out;
  for (const Vector& w : grid_points(bounded_or_unit(e.domain()), 3)) {
    out.push_back(e.point_at(std::span(w.data(), static_cast<std::size_t>(w.size()))));
  }
  return out;
}

void require_transverse(const Submanifold& c, const Submanifold& d, const std::vector<Vector>& samples) {
  const TransversalityReport report = transversality_check(c, d, samples);
  if (report.transverse()) return;
  for (const auto& s : report.samples) {
    if (!s.transverse) {
      throw Error(ErrorCode::TransversalityFailure, "'" + c.name() + "' and '" + d.name() + "' are not transverse at " +
                                                        tuple(s.point) + " (rank " + std::to_string(s.rank) + ")");
    }
  }
  throw Error(ErrorCode::TransversalityFailure, "'" + c.name() + "' and '" + d.name() + "' cannot meet transversally");
}

// The intersection used by product, inner and oracle requests: either the
// submanifold named by the request, or the computed C ∩ D.
struct Intersection {
  std::optional<Submanifold> declared;
  IntersectionResult computed;

  std::vector<Vector> samples() const { return declared ? samples_on(*declared) : computed.samples(); }
};

Intersection resolve_intersection(const Scene& scene, const Request& request, const GeometricState& a,
                                  const GeometricState& b) {
  Intersection out;
  if (!request.intersection.empty()) {
    out.declared = scene.submanifold(request.intersection);
  } else {
    out.computed = intersect(a.core(), b.core());
  }
  require_transverse(a.core(), b.core(), out.samples());
  return out;
}

Submanifold bounded_core(const GeometricState& a, const GeometricState& b, const Submanifold& e) {
  if (e.domain().bounded()) return e;
  if (auto box = derive_intersection_box(a, b, e)) return e.with_domain(*box);
  throw Error(ErrorCode::NonCompactIntersection,
              "intersection '" + e.name() + "' is unbounded; give it a domain and name it in the request");
}

Outcome run_check(const Scene& scene, const Request& request, const RunOptions& options) {
  Outcome out;
  out.request = request.name;
  if (request.left.empty()) {
    for (const auto& name : scene.submanifold_names()) {
      const Submanifold& m = scene.submanifold(name);
      m.validate();
      out.summary.push_back(name + ": " + (m.is_affine() ? "affine" : "chart") + ", dim " + std::to_string(m.dim()) +
                            ", ok");
    }
    return out;
  }
  const Submanifold& c = core_named(scene, request.left);
  const Submanifold& d = core_named(scene, request.right);
  std::vector<Vector> samples;
  std::string where;
  int dim = c.dim() + d.dim() - c.ambient_dim();
  if (!request.intersection.empty()) {
    const Submanifold& e = scene.submanifold(request.intersection);
    samples = samples_on(e);
    dim = e.dim();
    where = "on '" + e.name() + "'";
  } else {
    const IntersectionResult r = intersect(c, d);
    samples = r.samples();
    dim = r.dim;
    if (r.dim == 0) {
      where = "points: ";
      for (std::size_t i = 0; i < r.points.size(); ++i) where += (i ? " " : "") + tuple(r.points[i]);
      if (r.points.empty()) where = "no points";
    } else if (r.core) {
      where = "through " + tuple(r.core->base_point()) + " along";
      for (Eigen::Index j = 0; j < r.core->tangent_matrix().cols(); ++j) {
        where += " " + tuple(r.core->tangent_matrix().col(j));
      }
    }
  }
  const TransversalityReport report = transversality_check(c, d, samples);
  const bool ok = report.transverse();
  out.summary.push_back(std::string(ok ? "transverse" : "not transverse") + ", dim " + std::to_string(dim) + ", " +
                        where);
  for (const Submanifold* m : {&c, &d}) {
    m->validate();
    out.summary.push_back(m->name() + ": " + (m->is_affine() ? "affine" : "chart") + ", dim " +
                          std::to_string(m->dim()) + ", immersed");
  }
  Table table;
  table.header = coordinate_names('x', c.ambient_dim());
  table.header.insert(table.header.end(), {"rank", "transverse"});
  for (const auto& s : report.samples) {
    std::vector<double> row(s.point.data(), s.point.data() + s.point.size());
    row.push_back(s.rank);
    row.push_back(s.transverse ? 1.0 : 0.0);
    table.rows.push_back(std::move(row));
  }
  out.table = std::move(table);
  if (!ok) {
    out.status = exit_code(ErrorCode::TransversalityFailure);
    return out;
  }

  // Randomised choice-independence trials of the product at the samples.
  if (options.trials > 0 && dim == 0) {
    const GeometricState* a = nullptr;
    const GeometricState* b = nullptr;
    try {
      a = &scene.state(request.left);
      b = &scene.state(request.right);
    } catch (const Error&) {
      out.summary.push_back("choice trials skipped: left and right are not states");
      return out;
    }
    std::mt19937_64 rng(options.seed);
    std::normal_distribution<double> normal;
    double worst = 0.0;
    for (std::size_t p = 0; p < samples.size(); ++p) {
      const Submanifold e = Submanifold::point("E", samples[p]);
      const LocalProductData data = gather_product_data(*a, *b, e, {});
      const Complex base = transverse_product_coefficient(data, a->degree(), b->degree());
      for (int t = 0; t < options.trials; ++t) {
        NormalChoices choices;
        const Matrix n_c = dual_normal_frame(Frame::covector(data.nu_c), Frame::tangent(data.a)).data();
        const Matrix n_d = dual_normal_frame(Frame::covector(data.nu_d), Frame::tangent(data.b)).data();
        Matrix k_c(data.a.cols(), n_c.cols());
        Matrix k_d(data.b.cols(), n_d.cols());
        for (Eigen::Index i = 0; i < k_c.size(); ++i) k_c.data()[i] = normal(rng);
        for (Eigen::Index i = 0; i < k_d.size(); ++i) k_d.data()[i] = normal(rng);
        choices.n_c = Matrix(n_c + data.a * k_c);
        choices.n_d = Matrix(n_d + data.b * k_d);
        const Complex v = transverse_product_coefficient(data, a->degree(), b->degree(), choices);
        const double scale = std::max(std::abs(base), 1e-300);
        worst = std::max(worst, std::abs(v - base) / scale);
      }
    }
    out.summary.push_back("choice independence: " + std::to_string(options.trials) +
                          " trials per point, max relative deviation " + format_double(worst));
  }
  return out;
}

Outcome run_pair(const Scene& scene, const Request& request, const RunOptions& options) {
  PairingOptions opts;
  opts.quadrature = options.quadrature;
  const PairingResult r = pair_with_test(scene.state(request.state), scene.test(request.test), opts);
  Outcome out;
  out.request = request.name;
  out.summary.push_back("value: " + complex_text(r.value));
  out.summary.push_back("error_estimate: " + format_double(r.error_estimate));
  out.table = Table{{"re", "im", "error_estimate"}, {{r.value.real(), r.value.imag(), r.error_estimate}}};
  return out;
}

Outcome run_product(const Scene& scene, const Request& request, const RunOptions&) {
  const GeometricState& a = scene.state(request.left);
  const GeometricState& b = scene.state(request.right);
  const Intersection e = resolve_intersection(scene, request, a, b);
  const int n = a.core().ambient_dim();
  Outcome out;
  out.request = request.name;
  Table table;
  const Complex degree = a.degree() + b.degree();

  std::optional<Submanifold> core = e.declared;
  if (!core && e.computed.dim > 0) {
    if (!e.computed.core) throw Error(ErrorCode::UserChartRequired, "intersection has no chart; declare one");
    core = *e.computed.core;
  }
  if (!core || core->dim() == 0) {
    std::vector<Vector> points = core ? std::vector<Vector>{core->point_at({})} : e.computed.points;
    table.header = coordinate_names('x', n);
    table.header.insert(table.header.end(), {"re", "im"});
    for (const Vector& p : points) {
      const Complex v = product_at_point(a, b, Submanifold::point("E", p), {});
      std::vector<double> row(p.data(), p.data() + p.size());
      row.push_back(v.real());
      row.push_back(v.imag());
      table.rows.push_back(std::move(row));
    }
    out.summary.push_back("product of degree " + complex_text(degree) + " at " + std::to_string(points.size()) +
                          " point(s)");
  } else {
    const Submanifold bounded = bounded_core(a, b, *core);
    const int m = bounded.dim();
    table.header = coordinate_names('w', m);
    table.header.insert(table.header.end(), {"re", "im"});
    for (const Vector& w : grid_points(bounded.domain(), request.grid)) {
      const std::span<const double> ws(w.data(), static_cast<std::size_t>(w.size()));
      const Complex v = product_at_point(a, b, bounded, ws);
      std::vector<double> row(w.data(), w.data() + w.size());
      row.push_back(v.real());
      row.push_back(v.imag());
      table.rows.push_back(std::move(row));
    }
    out.summary.push_back("product of degree " + complex_text(degree) + " on a dimension " + std::to_string(m) +
                          " intersection, " + std::to_string(table.rows.size()) + " grid points");
  }
  out.table = std::move(table);
  return out;
}

InnerProductResult inner_value(const Scene& scene, const Request& request, const RunOptions& options) {
  const GeometricState& a = scene.state(request.left);
  const GeometricState& b = scene.state(request.right);
  const Intersection e = resolve_intersection(scene, request, a, b);
  if (e.declared) return inner_product(a, b, bounded_core(a, b, *e.declared), options.quadrature);
  return inner_product(a, b, e.computed, options.quadrature);
}

Outcome run_inner(const Scene& scene, const Request& request, const RunOptions& options) {
  const InnerProductResult r = inner_value(scene, request, options);
  const double probability = std::norm(r.value);
  Outcome out;
  out.request = request.name;
  out.summary.push_back("value: " + complex_text(r.value));
  out.summary.push_back("probability: " + format_double(probability));
  out.summary.push_back("error_estimate: " + format_double(r.error_estimate));
  out.table = Table{{"re", "im", "probability", "error_estimate"},
                    {{r.value.real(), r.value.imag(), probability, r.error_estimate}}};
  return out;
}

Outcome run_oracle(const Scene& scene, const Request& request, const RunOptions& options) {
  std::vector<double> eps = options.eps_list ? *options.eps_list : request.eps;
  if (eps.empty()) eps = {0.2, 0.1, 0.05};
  Complex geometric;
  double geometric_error = 0.0;
  std::vector<Complex> values;
  if (!request.state.empty()) {
    const GeometricState& st = scene.state(request.state);
    const AmbientDensity& test = scene.test(request.test);
    PairingOptions opts;
    opts.quadrature = options.quadrature;
    const PairingResult r = pair_with_test(st, test, opts);
    geometric = r.value;
    geometric_error = r.error_estimate;
    values = oracle_pairing(st, test, eps, options.quadrature);
  } else {
    const GeometricState& a = scene.state(request.left);
    const GeometricState& b = scene.state(request.right);
    const Intersection e = resolve_intersection(scene, request, a, b);
    std::vector<Submanifold> pieces;
    if (e.declared) {
      pieces.push_back(bounded_core(a, b, *e.declared));
    } else if (e.computed.dim == 0) {
      for (std::size_t i = 0; i < e.computed.points.size(); ++i) {
        pieces.push_back(Submanifold::point("E" + std::to_string(i), e.computed.points[i]));
      }
    } else if (e.computed.core) {
      pieces.push_back(bounded_core(a, b, *e.computed.core));
    }
    values.assign(eps.size(), Complex(0.0));
    for (const Submanifold& piece : pieces) {
      const InnerProductResult r = inner_product(a, b, piece, options.quadrature);
      geometric += r.value;
      geometric_error += r.error_estimate;
      const auto v = oracle_inner(a, b, piece, eps, options.quadrature);
      for (std::size_t i = 0; i < eps.size(); ++i) values[i] += v[i];
    }
  }
  // Errors this small are indistinguishable from quadrature noise.
  const double noise_floor =
      10.0 * (options.quadrature.rel_tol * std::abs(geometric) + options.quadrature.abs_tol) + geometric_error;
  const ConvergenceReport report = analyze_convergence(geometric, eps, values, noise_floor);

  Outcome out;
  out.request = request.name;
  out.summary.push_back("geometric: " + complex_text(geometric));
  out.summary.push_back("noise_floor: " + format_double(noise_floor));
  out.summary.push_back("final_relative_error: " + format_double(report.final_relative_error));
  out.summary.push_back(std::string("converged: ") + (report.converged ? "yes" : "no"));
  Table table{{"eps", "re", "im", "abs_error", "rel_error", "order"}, {}};
  const double scale = std::abs(geometric) > 0.0 ? std::abs(geometric) : 1.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    table.rows.push_back({eps[i], values[i].real(), values[i].imag(), report.errors[i], report.errors[i] / scale,
                          i == 0 ? kNaN : report.orders[i - 1]});
  }
  out.table = std::move(table);
  if (!report.converged) out.status = exit_code(ErrorCode::NonConvergent);
  return out;
}

Outcome run_sweep(const Scene& scene, const Request& request, const RunOptions& options) {
  const Request& target = scene.request(request.target);
  const bool inner = target.op == RequestOp::Inner;
  Table table{{request.parameter, "re", "im", inner ? "probability" : "error_estimate"}, {}};
  for (int i = 0; i < request.steps; ++i) {
    const double t = request.steps == 1 ? 0.0 : static_cast<double>(i) / (request.steps - 1);
    const double value = request.from + (request.to - request.from) * t;
    auto overrides = scene.overrides();
    overrides[request.parameter] = value;
    const Scene varied = Scene::from_json(scene.source(), overrides);
    const Outcome o = run_request(varied, varied.request(target.name), options);
    const auto& row = o.table->rows.front();
    table.rows.push_back({value, row[0], row[1], row[2]});
  }
  Outcome out;
  out.request = request.name;
  out.summary.push_back("sweep of '" + target.name + "' over " + request.parameter + " in [" +
                        format_double(request.from) + ", " + format_double(request.to) + "], " +
                        std::to_string(request.steps) + " steps");
  out.table = std::move(table);
  return out;
}

}  // namespace

Outcome run_request(const Scene& scene, const Request& request, const RunOptions& options) {
  switch (request.op) {
    case RequestOp::Check: return run_check(scene, request, options);
    case RequestOp::Pair: return run_pair(scene, request, options);
    case RequestOp::Product: return run_product(scene, request, options);
    case RequestOp::Inner: return run_inner(scene, request, options);
    case RequestOp::Oracle: return run_oracle(scene, request, options);
    case RequestOp::Sweep: return run_sweep(scene, request, options);
  }
  throw Error(ErrorCode::SceneError, "unknown request op");
}

}  // namespace geostate::scene
