#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

namespace dpd {

struct QuadResult {
  double value = 0.0;
  double abs_error = 0.0;
  int evaluations = 0;
  bool converged = false;
};

namespace detail {

struct GkSegment {
  double a, b, value, error;
  bool operator<(const GkSegment& o) const { return error < o.error; }
};

// Gauss-Kronrod 7/15 rule on [a, b].
template <class F>
GkSegment gk15(F& f, double a, double b) {
  static constexpr double xgk[8] = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
      0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
      0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.0};
  static constexpr double wgk[8] = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
      0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
      0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr double wg[4] = {
      0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
      0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kron = wgk[7] * fc;
  double gauss = wg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double dx = h * xgk[j];
    const double s = f(c - dx) + f(c + dx);
    kron += wgk[j] * s;
    if (j % 2 == 1) gauss += wg[j / 2] * s;
  }
  return {a, b, kron * h, std::abs((kron - gauss) * h)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod integration of f over the pieces defined by
/// sorted `points` (at least two). Stops when the summed error estimate is
/// below max(abs_tol, rel_tol * |value|).
template <class F>
QuadResult integrate_pieces(F&& f, std::vector<double> points, double abs_tol,
                            double rel_tol = 1e-12, int max_segments = 4000) {
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  QuadResult out;
  if (points.size() < 2) return out;
  std::priority_queue<detail::GkSegment> heap;
  double total = 0.0, err = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    auto s = detail::gk15(f, points[i], points[i + 1]);
    total += s.value;
    err += s.error;
    heap.push(s);
    out.evaluations += 15;
  }
  int segments = static_cast<int>(heap.size());
  while (err > std::max(abs_tol, rel_tol * std::abs(total)) && segments < max_segments) {
    auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      heap.push(worst);
      break;
    }
    auto l = detail::gk15(f, worst.a, mid);
    auto r = detail::gk15(f, mid, worst.b);
    out.evaluations += 30;
    total += l.value + r.value - worst.value;
    err += l.error + r.error - worst.error;
    heap.push(l);
    heap.push(r);
    ++segments;
  }
  // Re-sum to limit drift from incremental updates.
  total = 0.0;
  err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.abs_error = err;
  out.converged = err <= std::max(abs_tol, rel_tol * std::abs(total));
  return out;
}

template <class F>
QuadResult integrate(F&& f, double a, double b, double abs_tol, double rel_tol = 1e-12) {
  return integrate_pieces(std::forward<F>(f), {a, b}, abs_tol, rel_tol);
}

}  // namespace dpd
