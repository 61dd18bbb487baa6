#include "geostate/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <queue>
#include <vector>

namespace geostate {

bool Interval::bounded() const { return std::isfinite(lo) && std::isfinite(hi); }

bool Box::bounded() const {
  return std::all_of(axes.begin(), axes.end(), [](const Interval& i) { return i.bounded(); });
}

bool Box::contains(std::span<const double> p, double slack) const {
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (p[i] < axes[i].lo - slack || p[i] > axes[i].hi + slack) return false;
  }
  return true;
}

Vector Box::center() const {
  Vector c(dim());
  for (int i = 0; i < dim(); ++i) {
    const auto& a = axes[static_cast<std::size_t>(i)];
    if (a.bounded()) c(i) = a.mid();
    else if (std::isfinite(a.lo)) c(i) = a.lo;
    else if (std::isfinite(a.hi)) c(i) = a.hi;
    else c(i) = 0.0;
  }
  return c;
}

Box Box::intersect(const Box& other) const {
  Box out = *this;
  for (std::size_t i = 0; i < out.axes.size() && i < other.axes.size(); ++i) {
    out.axes[i].lo = std::max(out.axes[i].lo, other.axes[i].lo);
    out.axes[i].hi = std::min(out.axes[i].hi, other.axes[i].hi);
  }
  return out;
}

GaussLegendreRule gauss_legendre(int order) {
  static std::mutex mutex;
  static std::map<int, GaussLegendreRule> cache;
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(order); it != cache.end()) return it->second;
  }
  GaussLegendreRule rule;
  rule.nodes.resize(static_cast<std::size_t>(order));
  rule.weights.resize(static_cast<std::size_t>(order));
  const int half = (order + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      if (order == 1) p0 = 1.0;
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[static_cast<std::size_t>(i)] = -x;
    rule.nodes[static_cast<std::size_t>(order - 1 - i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = w;
    rule.weights[static_cast<std::size_t>(order - 1 - i)] = w;
  }
  std::lock_guard lock(mutex);
  cache.emplace(order, rule);
  return rule;
}

namespace {

struct Region {
  Box box;
  Complex value;
  double error = 0.0;
  int split_axis = 0;
  Complex left_value;
  Complex right_value;
};

class TensorRule {
 public:
  TensorRule(const Integrand& f, int order) : f_(f), rule_(gauss_legendre(order)) {}

  Complex apply(const Box& box) { return apply(box, rule_); }

  Complex apply(const Box& box, const GaussLegendreRule& gl) { return apply(box, gl, -1); }

  // Tensor rule using `gl` along axis `coarse_axis` (every axis when it is
  // -1) and the full-order rule along the others.
  Complex apply(const Box& box, const GaussLegendreRule& gl, int coarse_axis) {
    const int d = box.dim();
    if (d == 0) {
      ++evaluations;
      return f_({});
    }
    auto rule_for = [&](int k) -> const GaussLegendreRule& {
      return coarse_axis < 0 || coarse_axis == k ? gl : rule_;
    };
    std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
    std::vector<double> point(static_cast<std::size_t>(d));
    double scale = 1.0;
    for (const auto& a : box.axes) scale *= 0.5 * a.width();
    Complex sum = 0.0;
    for (;;) {
      double w = 1.0;
      for (int k = 0; k < d; ++k) {
        const auto& a = box.axes[static_cast<std::size_t>(k)];
        const auto& r = rule_for(k);
        const std::size_t i = idx[static_cast<std::size_t>(k)];
        point[static_cast<std::size_t>(k)] = a.mid() + 0.5 * a.width() * r.nodes[i];
        w *= r.weights[i];
      }
      sum += w * f_(point);
      ++evaluations;
      int k = 0;
      for (; k < d; ++k) {
        if (++idx[static_cast<std::size_t>(k)] < rule_for(k).nodes.size()) break;
        idx[static_cast<std::size_t>(k)] = 0;
      }
      if (k == d) break;
    }
    return sum * scale;
  }

  long evaluations = 0;

 private:
  const Integrand& f_;
  GaussLegendreRule rule_;
};

std::pair<Box, Box> halves(const Box& box, int axis) {
  Box left = box;
  Box right = box;
  const double mid = box.axes[static_cast<std::size_t>(axis)].mid();
  left.axes[static_cast<std::size_t>(axis)].hi = mid;
  right.axes[static_cast<std::size_t>(axis)].lo = mid;
  return {left, right};
}

int widest_axis(const Box& box) {
  int best = 0;
  for (int k = 1; k < box.dim(); ++k) {
    if (box.axes[static_cast<std::size_t>(k)].width() > box.axes[static_cast<std::size_t>(best)].width()) best = k;
  }
  return best;
}

}  // namespace

QuadratureResult integrate(const Integrand& f, const Box& box, const QuadratureOptions& opts) {
  if (!box.bounded()) throw Error(ErrorCode::UnboundedDomain, "integration box is unbounded");
  TensorRule rule(f, opts.order);
  const GaussLegendreRule half_rule = gauss_legendre(std::max(1, opts.order / 2));
  if (box.dim() == 0) return {rule.apply(box), 0.0, 1};
  for (const auto& a : box.axes) {
    if (a.width() <= 0.0) return {0.0, 0.0, 0};
  }

  // Each region carries its refined value (sum over its two halves). Along
  // every axis separately the full-order rule is compared with a half-order
  // one; the axis with the largest discrepancy is the one that gets halved,
  // and the error estimate is the largest of these discrepancies and the
  // refined-against-coarse difference. Comparing per axis also catches
  // under-resolution along axes that have not been split yet.
  auto evaluate = [&](const Box& b, Complex coarse) {
    std::vector<double> axis_errors;
    for (int k = 0; k < b.dim(); ++k) axis_errors.push_back(std::abs(coarse - rule.apply(b, half_rule, k)));
    // Ties (typically all axes resolved) go to the widest axis.
    int axis = widest_axis(b);
    for (int k = 0; k < b.dim(); ++k) {
      if (axis_errors[static_cast<std::size_t>(k)] > 2.0 * axis_errors[static_cast<std::size_t>(axis)]) axis = k;
    }
    const double axis_error = *std::max_element(axis_errors.begin(), axis_errors.end());
    auto [l, r] = halves(b, axis);
    const Complex lv = rule.apply(l);
    const Complex rv = rule.apply(r);
    const Complex fine = lv + rv;
    const double error = std::max(std::abs(fine - coarse), axis_error);
    return Region{b, fine, error, axis, lv, rv};
  };

  auto cmp = [](const Region& a, const Region& b) { return a.error < b.error; };
  std::priority_queue<Region, std::vector<Region>, decltype(cmp)> queue(cmp);
  queue.push(evaluate(box, rule.apply(box)));
  Complex total = queue.top().value;
  double total_error = queue.top().error;

  while (total_error > opts.rel_tol * std::abs(total) + opts.abs_tol) {
    if (rule.evaluations >= opts.max_evaluations) {
      throw Error(ErrorCode::QuadratureNotConverged,
                  "error estimate " + std::to_string(total_error) + " exceeds tolerance for |value| " +
                      std::to_string(std::abs(total)));
    }
    Region worst = queue.top();
    queue.pop();
    total -= worst.value;
    total_error -= worst.error;
    auto [l, r] = halves(worst.box, worst.split_axis);
    Region rl = evaluate(l, worst.left_value);
    Region rr = evaluate(r, worst.right_value);
    total += rl.value + rr.value;
    total_error += rl.error + rr.error;
    queue.push(std::move(rl));
    queue.push(std::move(rr));
    if (queue.size() > 1'000'000) break;
  }
  // Recompute sums to drop accumulated rounding from the running updates.
  Complex value = 0.0;
  double error = 0.0;
  while (!queue.empty()) {
    value += queue.top().value;
    error += queue.top().error;
    queue.pop();
  }
  return {value, error, rule.evaluations};
}

}  // namespace geostate
