#include "geostate/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace geostate {

namespace {

constexpr double kImmersionRankTol = 1e-8;
constexpr double kImplicitConsistencyTol = 1e-8;
constexpr int kSeedsPerAxis = 20;
constexpr int kMaxSeeds = 10'000;
constexpr int kMaxNewtonSteps = 50;

int seeds_per_axis(int k) {
  if (k <= 0) return 1;
  int s = kSeedsPerAxis;
  while (s > 1 && std::pow(static_cast<double>(s), k) > kMaxSeeds) --s;
  return s;
}

}  // namespace

struct Submanifold::Data {
  std::string name;
  Kind kind = Kind::Affine;
  int n = 0;
  int k = 0;
  Box domain;
  // affine
  Vector base;
  Matrix tangent;
  Matrix affine_conormal;
  // chart
  std::vector<expr::Expr> map;
  std::vector<expr::CompiledExpr> compiled_map;
  expr::Bindings parameters;
  // implicit
  std::vector<expr::Expr> implicit;
  std::vector<expr::CompiledExpr> compiled_implicit;
  // chart inversion seeds and their images
  std::vector<Vector> seeds;
  std::vector<Vector> seed_images;
};

std::vector<Vector> grid_points(const Box& box, int per_axis) {
  const int k = box.dim();
  std::vector<Vector> out;
  if (k == 0) {
    out.emplace_back(0);
    return out;
  }
  std::vector<int> idx(static_cast<std::size_t>(k), 0);
  for (;;) {
    Vector p(k);
    for (int a = 0; a < k; ++a) {
      const auto& iv = box.axes[static_cast<std::size_t>(a)];
      p(a) = per_axis == 1 ? iv.mid() : iv.lo + iv.width() * idx[static_cast<std::size_t>(a)] / (per_axis - 1);
    }
    out.push_back(std::move(p));
    int a = 0;
    for (; a < k; ++a) {
      if (++idx[static_cast<std::size_t>(a)] < per_axis) break;
      idx[static_cast<std::size_t>(a)] = 0;
    }
    if (a == k) break;
  }
  return out;
}

Submanifold Submanifold::affine(std::string name, Vector base, Matrix tangent, std::optional<Box> domain) {
  auto d = std::make_shared<Data>();
  d->name = std::move(name);
  d->kind = Kind::Affine;
  d->n = static_cast<int>(base.size());
  if (tangent.cols() > 0 && tangent.rows() != d->n) {
    throw Error(ErrorCode::ImmersionFailure, "affine tangent has wrong ambient dimension");
  }
  if (tangent.cols() == 0) tangent.resize(d->n, 0);
  d->k = static_cast<int>(tangent.cols());
  if (d->n < 1 || d->n > Ambient::max_dim) {
    throw Error(ErrorCode::ImmersionFailure, "ambient dimension must be in 1..10");
  }
  if (d->k > 0 && numerical_rank(tangent, kImmersionRankTol) < d->k) {
    throw Error(ErrorCode::ImmersionFailure, "affine tangent columns are dependent");
  }
  d->base = std::move(base);
  d->tangent = std::move(tangent);
  d->affine_conormal = orthonormal_conormal(d->tangent);
  d->domain = domain ? *domain : Box::unbounded(d->k);
  if (d->domain.dim() != d->k) throw Error(ErrorCode::ImmersionFailure, "domain box has wrong dimension");
  return Submanifold(std::move(d));
}

Submanifold Submanifold::point(std::string name, Vector x) {
  const auto n = x.size();
  return affine(std::move(name), std::move(x), Matrix(n, 0), Box{});
}

Submanifold Submanifold::ambient(std::string name, int n, std::optional<Box> domain) {
  return affine(std::move(name), Vector::Zero(n), Matrix::Identity(n, n), std::move(domain));
}

Submanifold Submanifold::chart(std::string name, int ambient_dim, std::vector<expr::Expr> map, Box domain,
                               const expr::Bindings& parameters) {
  auto d = std::make_shared<Data>();
  d->name = std::move(name);
  d->kind = Kind::Chart;
  d->n = ambient_dim;
  d->k = domain.dim();
  if (d->n < 1 || d->n > Ambient::max_dim) {
    throw Error(ErrorCode::ImmersionFailure, "ambient dimension must be in 1..10");
  }
  if (static_cast<int>(map.size()) != d->n) {
    throw Error(ErrorCode::ImmersionFailure, "chart map must have one expression per ambient coordinate");
  }
  if (d->k > d->n) throw Error(ErrorCode::ImmersionFailure, "chart dimension exceeds ambient dimension");
  if (!domain.bounded()) throw Error(ErrorCode::UnboundedDomain, "chart domain must be a bounded box");
  const auto names = expr::coordinate_names("u", d->k);
  for (const auto& e : map) d->compiled_map.emplace_back(e, names, parameters);
  d->map = std::move(map);
  d->domain = std::move(domain);
  d->parameters = parameters;
  d->seeds = grid_points(d->domain, seeds_per_axis(d->k));
  for (const auto& s : d->seeds) {
    Vector x(d->n);
    for (int i = 0; i < d->n; ++i) x(i) = d->compiled_map[static_cast<std::size_t>(i)](std::span(s.data(), s.size()));
    d->seed_images.push_back(std::move(x));
  }
  Submanifold out(std::move(d));
  out.validate();
  return out;
}

Submanifold Submanifold::with_implicit(std::vector<expr::Expr> defining_map, const expr::Bindings& parameters) const {
  auto d = std::make_shared<Data>(*data_);
  if (static_cast<int>(defining_map.size()) != codim()) {
    throw Error(ErrorCode::InconsistentImplicitForm, "implicit form needs n-k equations");
  }
  const auto names = expr::coordinate_names("x", ambient_dim());
  d->compiled_implicit.clear();
  for (const auto& e : defining_map) d->compiled_implicit.emplace_back(e, names, parameters);
  d->implicit = std::move(defining_map);
  Submanifold out(std::move(d));
  out.validate();
  return out;
}

Submanifold Submanifold::with_domain(Box domain) const {
  if (domain.dim() != dim()) throw Error(ErrorCode::ImmersionFailure, "domain box has wrong dimension");
  auto d = std::make_shared<Data>(*data_);
  d->domain = std::move(domain);
  if (d->kind == Kind::Chart) {
    if (!d->domain.bounded()) throw Error(ErrorCode::UnboundedDomain, "chart domain must be a bounded box");
    d->seeds = grid_points(d->domain, seeds_per_axis(d->k));
    d->seed_images.clear();
    for (const auto& s : d->seeds) {
      Vector x(d->n);
      for (int i = 0; i < d->n; ++i) x(i) = d->compiled_map[static_cast<std::size_t>(i)](std::span(s.data(), s.size()));
      d->seed_images.push_back(std::move(x));
    }
  }
  return Submanifold(std::move(d));
}

Submanifold Submanifold::renamed(std::string name) const {
  auto d = std::make_shared<Data>(*data_);
  d->name = std::move(name);
  return Submanifold(std::move(d));
}

const std::string& Submanifold::name() const { return data_->name; }
Submanifold::Kind Submanifold::kind() const { return data_->kind; }
int Submanifold::ambient_dim() const { return data_->n; }
int Submanifold::dim() const { return data_->k; }
const Box& Submanifold::domain() const { return data_->domain; }
const Vector& Submanifold::base_point() const { return data_->base; }
const Matrix& Submanifold::tangent_matrix() const { return data_->tangent; }
const std::vector<expr::Expr>& Submanifold::map_exprs() const { return data_->map; }
bool Submanifold::has_implicit() const { return !data_->implicit.empty(); }
const std::vector<expr::Expr>& Submanifold::implicit_exprs() const { return data_->implicit; }

Vector Submanifold::point_at(std::span<const double> u) const {
  if (is_affine()) {
    Vector x = data_->base;
    if (dim() > 0) x += data_->tangent * Eigen::Map<const Vector>(u.data(), dim());
    return x;
  }
  Vector x(ambient_dim());
  for (int i = 0; i < ambient_dim(); ++i) x(i) = data_->compiled_map[static_cast<std::size_t>(i)](u);
  return x;
}

Matrix Submanifold::tangent_at(std::span<const double> u) const {
  if (is_affine()) return data_->tangent;
  return expr::jacobian(data_->compiled_map, u);
}

Vector Submanifold::defining_value(const Vector& x) const {
  if (has_implicit()) {
    Vector f(codim());
    for (int i = 0; i < codim(); ++i) {
      f(i) = data_->compiled_implicit[static_cast<std::size_t>(i)](std::span(x.data(), x.size()));
    }
    return f;
  }
  if (is_affine()) return data_->affine_conormal * (x - data_->base);
  throw Error(ErrorCode::MissingImplicitForm, "core '" + name() + "' has no implicit form");
}

Matrix Submanifold::defining_gradient(const Vector& x) const {
  if (has_implicit()) return expr::jacobian(data_->compiled_implicit, std::span(x.data(), x.size()));
  if (is_affine()) return data_->affine_conormal;
  throw Error(ErrorCode::MissingImplicitForm, "core '" + name() + "' has no implicit form");
}

Vector Submanifold::locate(const Vector& x, double tol) const {
  const double scale = std::max(1.0, x.norm());
  if (is_affine()) {
    Vector u = least_squares(data_->tangent, x - data_->base);
    const double dist = (point_at(std::span(u.data(), u.size())) - x).norm();
    if (dist > tol * scale) {
      throw Error(ErrorCode::NotOnBothCores,
                  "point is at distance " + std::to_string(dist) + " from core '" + name() + "'");
    }
    return u;
  }
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < data_->seeds.size(); ++i) {
    const double dist = (data_->seed_images[i] - x).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  Vector u = data_->seeds[best];
  Vector r = x - point_at(std::span(u.data(), u.size()));
  double rn = r.norm();
  for (int step = 0; step < kMaxNewtonSteps && rn > 1e-15 * scale; ++step) {
    const Matrix j = tangent_at(std::span(u.data(), u.size()));
    const Vector delta = least_squares(j, r);
    double damping = 1.0;
    bool improved = false;
    for (int h = 0; h < 30; ++h, damping *= 0.5) {
      Vector trial = u + damping * delta;
      Vector rt = x - point_at(std::span(trial.data(), trial.size()));
      if (rt.norm() < rn) {
        u = std::move(trial);
        r = std::move(rt);
        rn = r.norm();
        improved = true;
        break;
      }
    }
    if (!improved || damping * delta.norm() <= 1e-15 * (1.0 + u.norm())) break;
  }
  if (rn > tol * scale) {
    throw Error(rn > 1e-4 * scale ? ErrorCode::NotOnBothCores : ErrorCode::ChartInversionFailure,
                "chart inversion on '" + name() + "' left residual " + std::to_string(rn));
  }
  return u;
}

void Submanifold::validate() const {
  const int k = dim();
  const int n = ambient_dim();
  std::vector<Vector> samples;
  if (is_affine()) {
    if (k > 0 && numerical_rank(data_->tangent, kImmersionRankTol) < k) {
      throw Error(ErrorCode::ImmersionFailure, "affine tangent columns are dependent");
    }
    Box sample_box = domain();
    for (auto& a : sample_box.axes) {
      if (!a.bounded()) a = Interval{-1.0, 1.0};
    }
    samples = grid_points(sample_box, k == 0 ? 1 : 5);
  } else {
    samples = grid_points(domain(), 5);
    for (const auto& u : samples) {
      const Matrix t = tangent_at(std::span(u.data(), u.size()));
      if (k > 0 && numerical_rank(t, kImmersionRankTol) < k) {
        throw Error(ErrorCode::ImmersionFailure, "chart of '" + name() + "' is not an immersion at a sample point");
      }
    }
  }
  if (!has_implicit()) return;
  for (const auto& u : samples) {
    const Vector x = point_at(std::span(u.data(), u.size()));
    const Vector f = defining_value(x);
    if (f.size() > 0 && f.cwiseAbs().maxCoeff() > kImplicitConsistencyTol) {
      throw Error(ErrorCode::InconsistentImplicitForm,
                  "implicit form of '" + name() + "' does not vanish on its parametrisation");
    }
    const Matrix df = defining_gradient(x);
    if (n - k > 0 && numerical_rank(df, kImmersionRankTol) < n - k) {
      throw Error(ErrorCode::InconsistentImplicitForm, "implicit form of '" + name() + "' is degenerate");
    }
  }
}

Matrix orthonormal_conormal(const Matrix& tangent) {
  return complete_to_ambient(Frame::tangent(tangent)).data().transpose();
}

FrameBundleSample frames_at(const Submanifold& core, std::span<const double> u) {
  FrameBundleSample s;
  s.chart_coords = Eigen::Map<const Vector>(u.data(), static_cast<Eigen::Index>(u.size()));
  s.point = core.point_at(u);
  s.tangent = core.tangent_at(u);
  if (core.dim() > 0 && numerical_rank(s.tangent, kImmersionRankTol) < core.dim()) {
    throw Error(ErrorCode::ImmersionFailure, "tangent frame of '" + core.name() + "' is rank deficient");
  }
  if (core.has_implicit()) {
    s.conormal = core.defining_gradient(s.point);
    s.provenance = ConormalProvenance::ImplicitGradient;
  } else {
    s.conormal = orthonormal_conormal(s.tangent);
    s.provenance = ConormalProvenance::OrthonormalComplement;
  }
  return s;
}

bool TransversalityReport::transverse() const {
  return dimension_ok() && !samples.empty() &&
         std::all_of(samples.begin(), samples.end(), [](const auto& v) { return v.transverse; });
}

TransversalityReport transversality_check(const Submanifold& c, const Submanifold& d,
                                          std::span<const Vector> samples) {
  TransversalityReport report;
  report.ambient_dim = c.ambient_dim();
  report.expected_dim = c.dim() + d.dim() - c.ambient_dim();
  for (const auto& x : samples) {
    TransversalityVerdict v;
    v.point = x;
    try {
      const Vector uc = c.locate(x);
      const Vector ud = d.locate(x);
      v.on_both = true;
      const Matrix span_both = hcat(c.tangent_at(std::span(uc.data(), uc.size())),
                                    d.tangent_at(std::span(ud.data(), ud.size())));
      v.rank = numerical_rank(span_both, tolerances::rank);
      v.transverse = v.rank == c.ambient_dim();
    } catch (const Error&) {
      v.on_both = false;
    }
    report.samples.push_back(std::move(v));
  }
  return report;
}

std::vector<Vector> IntersectionResult::samples() const {
  if (!points.empty()) return points;
  if (core) {
    const Vector c = core->domain().center();
    return {core->point_at(std::span(c.data(), c.size()))};
  }
  return {};
}

namespace {

// Canonical sign: first entry with |v_i| > 1e-12 is positive.
void fix_sign(Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v(i)) > 1e-12) {
      if (v(i) < 0.0) v = -v;
      return;
    }
  }
}

IntersectionResult intersect_affine(const Submanifold& c, const Submanifold& d) {
  const int n = c.ambient_dim();
  const int kc = c.dim();
  const Matrix a = hcat(c.tangent_matrix(), -d.tangent_matrix());
  const Vector rhs = d.base_point() - c.base_point();
  Vector sol = a.cols() > 0 ? Vector(least_squares(a, rhs)) : Vector(0);
  const Vector residual = (a.cols() > 0 ? Vector(a * sol) : Vector::Zero(n)) - rhs;
  if (residual.norm() > 1e-10 * std::max(1.0, rhs.norm())) {
    throw Error(ErrorCode::NoIntersectionFound, "affine cores '" + c.name() + "' and '" + d.name() + "' do not meet");
  }
  Vector point = c.base_point();
  if (kc > 0) point += c.tangent_matrix() * sol.head(kc);

  Matrix directions(n, 0);
  if (a.cols() > 0) {
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double top = sv.size() > 0 ? sv(0) : 0.0;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > tolerances::rank * top) ++rank;
    }
    const int nullity = static_cast<int>(a.cols()) - rank;
    if (nullity > 0 && kc > 0) {
      const Matrix kernel = svd.matrixV().rightCols(nullity);
      Matrix dirs = c.tangent_matrix() * kernel.topRows(kc);
      Eigen::HouseholderQR<Matrix> qr(dirs);
      directions = qr.householderQ() * Matrix::Identity(n, nullity);
      for (int j = 0; j < nullity; ++j) {
        Vector col = directions.col(j);
        fix_sign(col);
        directions.col(j) = col;
      }
    }
  }
  IntersectionResult out;
  out.dim = static_cast<int>(directions.cols());
  const std::string name = c.name() + "&" + d.name();
  if (out.dim == 0) {
    out.points.push_back(point);
    out.core = Submanifold::point(name, point);
  } else {
    out.core = Submanifold::affine(name, point, directions);
  }
  return out;
}

}  // namespace

RefinementTrace refine_intersection(const Submanifold& param, const Submanifold& implicit, Vector seed) {
  auto residual_at = [&](const Vector& u) {
    return implicit.defining_value(param.point_at(std::span(u.data(), u.size())));
  };
  RefinementTrace trace;
  trace.u = std::move(seed);
  Vector r = residual_at(trace.u);
  double rn = r.norm();
  trace.residuals.push_back(rn);
  for (int step = 0; step < kMaxNewtonSteps && rn > 1e-15; ++step) {
    Vector& u = trace.u;
    const Vector x = param.point_at(std::span(u.data(), u.size()));
    const Matrix jr = implicit.defining_gradient(x) * param.tangent_at(std::span(u.data(), u.size()));
    const Vector delta = -least_squares(jr, r);
    double damping = 1.0;
    bool improved = false;
    for (int h = 0; h < 30; ++h, damping *= 0.5) {
      Vector trial = u + damping * delta;
      Vector rt;
      try {
        rt = residual_at(trial);
      } catch (const Error&) {
        continue;
      }
      if (rt.norm() < rn) {
        u = std::move(trial);
        r = std::move(rt);
        rn = r.norm();
        trace.residuals.push_back(rn);
        improved = true;
        break;
      }
    }
    if (!improved || damping * delta.norm() <= 1e-15 * (1.0 + u.norm())) break;
  }
  trace.converged = rn <= 1e-10 && param.domain().contains(std::span(trace.u.data(), trace.u.size()), 1e-9);
  return trace;
}

IntersectionResult intersect(const Submanifold& c, const Submanifold& d) {
  if (c.ambient_dim() != d.ambient_dim()) {
    throw Error(ErrorCode::NoIntersectionFound, "cores live in different ambient spaces");
  }
  if (c.same_as(d)) {
    IntersectionResult out;
    out.dim = c.dim();
    out.core = c;
    if (c.dim() == 0) out.points.push_back(c.base_point());
    return out;
  }
  if (c.is_affine() && d.is_affine()) return intersect_affine(c, d);

  // Parametrised side P (bounded domain) and implicit side Q.
  const Submanifold* p = nullptr;
  const Submanifold* q = nullptr;
  if (d.has_defining_map() && c.domain().bounded()) {
    p = &c;
    q = &d;
  } else if (c.has_defining_map() && d.domain().bounded()) {
    p = &d;
    q = &c;
  } else if (!c.has_defining_map() && !d.has_defining_map()) {
    throw Error(ErrorCode::MissingImplicitForm,
                "neither '" + c.name() + "' nor '" + d.name() + "' carries an implicit form");
  } else {
    throw Error(ErrorCode::UnboundedDomain, "the parametrised core needs a bounded chart domain");
  }

  const int n = c.ambient_dim();
  const int m = c.dim() + d.dim() - n;
  if (m < 0) {
    throw Error(ErrorCode::NoIntersectionFound, "expected intersection dimension is negative");
  }
  if (m > 0) {
    throw Error(ErrorCode::UserChartRequired,
                "curved intersection of dimension " + std::to_string(m) + " needs a user-supplied chart");
  }

  const int k = p->dim();
  std::vector<Vector> found;
  for (const Vector& seed : grid_points(p->domain(), seeds_per_axis(k))) {
    const RefinementTrace trace = refine_intersection(*p, *q, seed);
    if (!trace.converged) continue;
    const Vector& u = trace.u;
    Vector x = p->point_at(std::span(u.data(), u.size()));
    const bool duplicate =
        std::any_of(found.begin(), found.end(), [&](const Vector& y) { return (y - x).norm() <= 1e-6; });
    if (!duplicate) found.push_back(std::move(x));
  }
  if (found.empty()) {
    throw Error(ErrorCode::NoIntersectionFound, "no seed converged for '" + c.name() + "' and '" + d.name() + "'");
  }
  std::sort(found.begin(), found.end(), [](const Vector& a, const Vector& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
  });
  IntersectionResult out;
  out.dim = 0;
  out.points = std::move(found);
  if (out.points.size() == 1) out.core = Submanifold::point(c.name() + "&" + d.name(), out.points.front());
  return out;
}

}  // namespace geostate
