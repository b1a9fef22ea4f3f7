#pragma once

// Quadrature rules: Gauss-Legendre (composite, with node doubling),
// adaptive Gauss-Kronrod 7/15, and the periodic trapezoid rule.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <queue>
#include <vector>

#include "errors.hpp"

namespace pseudomoment::quadrature {

struct Rule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule by Newton iteration on P_n.
inline Rule gauss_legendre(std::size_t n) {
  ::pseudomoment::detail::require(n >= 1, "gauss_legendre: n >= 1");
  Rule rule{std::vector<double>(n), std::vector<double>(n)};
  const std::size_t m = (n + 1) / 2;
  for (std::size_t i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (double(i) + 0.75) / (double(n) + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = 1.0, p2 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * double(j) - 1.0) * z * p2 - (double(j) - 1.0) * p3) / double(j);
      }
      pp = double(n) * (z * p1 - p2) / (z * z - 1.0);
      const double z_prev = z;
      z = z_prev - p1 / pp;
      if (std::abs(z - z_prev) < 1e-15) break;
    }
    rule.nodes[i] = -z;
    rule.nodes[n - 1 - i] = z;
    rule.weights[i] = rule.weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
  }
  return rule;
}

/// Composite rule: `panels` equal panels on [a, b], `rule` on each.
template <class F>
double composite(const F& f, double a, double b, std::size_t panels, const Rule& rule) {
  const double width = (b - a) / double(panels);
  double total = 0.0;
  for (std::size_t k = 0; k < panels; ++k) {
    const double lo = a + width * double(k);
    const double mid = lo + 0.5 * width, half = 0.5 * width;
    double panel = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      panel += rule.weights[i] * f(mid + half * rule.nodes[i]);
    }
    total += panel * half;
  }
  return total;
}

struct DoublingResult {
  double value = 0.0;
  std::size_t nodes = 0;
  double relative_change = 0.0;  // between the last two refinements
  bool converged = false;
};

/// Composite Gauss-Legendre, doubling the panel count until two successive
/// results agree to `rel_tol` or the node count would exceed `max_nodes`.
template <class F>
DoublingResult integrate_doubling(const F& f, double a, double b, double rel_tol = 1e-6,
                                  std::size_t max_nodes = 1u << 14, std::size_t order = 16,
                                  std::size_t initial_panels = 1) {
  const Rule rule = gauss_legendre(order);
  DoublingResult out;
  std::size_t panels = std::max<std::size_t>(1, initial_panels);
  while (panels > 1 && panels * order > max_nodes) panels /= 2;
  double previous = composite(f, a, b, panels, rule);
  out.value = previous;
  out.nodes = panels * order;
  while ((panels * 2) * order <= max_nodes) {
    panels *= 2;
    const double current = composite(f, a, b, panels, rule);
    out.value = current;
    out.nodes = panels * order;
    const double scale = std::max(std::abs(current), 1e-300);
    out.relative_change = std::abs(current - previous) / scale;
    // At least 4 panels before an agreement counts.
    if (out.relative_change < rel_tol && panels >= 4) {
      out.converged = true;
      return out;
    }
    previous = current;
  }
  return out;
}

struct AdaptiveResult {
  double value = 0.0;
  double error = 0.0;
  std::size_t intervals = 0;
  bool converged = false;
};

namespace detail {

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& other) const { return error < other.error; }
};

template <class F>
Segment gauss_kronrod15(const F& f, double a, double b) {
  static constexpr double xgk[8] = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
  static constexpr double wgk[8] = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr double wg[4] = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
  const double center = 0.5 * (a + b), half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = wgk[7] * fc, gauss = wg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double dx = half * xgk[j];
    const double sum = f(center - dx) + f(center + dx);
    kronrod += wgk[j] * sum;
    if (j % 2 == 1) gauss += wg[j / 2] * sum;
  }
  return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod 7/15 over the panels between consecutive
/// `breaks` (ascending); bisects the worst panel until the summed error
/// estimate is below max(abs_tol, rel_tol |I|).
template <class F>
AdaptiveResult integrate_adaptive(const F& f, const std::vector<double>& breaks, double abs_tol,
                                  double rel_tol, std::size_t max_intervals = 200000) {
  ::pseudomoment::detail::require(breaks.size() >= 2, "integrate_adaptive: at least one panel");
  std::priority_queue<detail::Segment> heap;
  double value = 0.0, error = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    auto seg = detail::gauss_kronrod15(f, breaks[k], breaks[k + 1]);
    value += seg.value;
    error += seg.error;
    heap.push(seg);
  }
  AdaptiveResult out;
  while (error > std::max(abs_tol, rel_tol * std::abs(value)) && heap.size() < max_intervals) {
    const auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    auto left = detail::gauss_kronrod15(f, worst.a, mid);
    auto right = detail::gauss_kronrod15(f, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum from the segments to shed the drift of the running updates.
  value = 0.0;
  error = 0.0;
  out.intervals = heap.size();
  std::vector<detail::Segment> segments;
  segments.reserve(heap.size());
  while (!heap.empty()) {
    segments.push_back(heap.top());
    heap.pop();
  }
  std::sort(segments.begin(), segments.end(),
            [](const auto& l, const auto& r) { return l.a < r.a; });
  for (const auto& s : segments) {
    value += s.value;
    error += s.error;
  }
  out.value = value;
  out.error = error;
  out.converged = error <= std::max(abs_tol, rel_tol * std::abs(value));
  return out;
}

/// Same, seeded with `initial_panels` equal panels on [a, b].
template <class F>
AdaptiveResult integrate_adaptive(const F& f, double a, double b, double abs_tol, double rel_tol,
                                  std::size_t initial_panels = 1,
                                  std::size_t max_intervals = 200000) {
  const std::size_t panels = std::max<std::size_t>(1, initial_panels);
  std::vector<double> breaks(panels + 1);
  for (std::size_t k = 0; k <= panels; ++k) breaks[k] = a + (b - a) * double(k) / double(panels);
  breaks.back() = b;
  return integrate_adaptive(f, breaks, abs_tol, rel_tol, max_intervals);
}

/// Mean of f over `nodes` equispaced angles 2 pi k / nodes, i.e.
/// (1/2pi) * integral over one period by the trapezoid rule.
template <class F>
double periodic_mean(const F& f, std::size_t nodes) {
  double total = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) {
    total += f(2.0 * std::numbers::pi * double(k) / double(nodes));
  }
  return total / double(nodes);
}

}  // namespace pseudomoment::quadrature
