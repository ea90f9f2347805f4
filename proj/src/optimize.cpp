#include "dpd/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dpd/random.hpp"

namespace dpd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_eval(const Objective& f, const Eigen::VectorXd& x) {
  const double v = f(x);
  return std::isfinite(v) ? v : kInf;
}

}  // namespace

NelderMeadResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0, double f_tol, int max_iters,
                             double initial_step) {
  const Eigen::Index d = x0.size();
  std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(d + 1), x0);
  std::vector<double> vals(static_cast<std::size_t>(d + 1));
  for (Eigen::Index j = 0; j < d; ++j)
    pts[static_cast<std::size_t>(j + 1)][j] += initial_step * std::max(1.0, std::abs(x0[j]));
  for (std::size_t k = 0; k < pts.size(); ++k) vals[k] = safe_eval(f, pts[k]);

  const double alpha = 1.0, gamma = 2.0, rho = 0.5, shrink = 0.5;
  std::vector<std::size_t> order(pts.size());
  NelderMeadResult res;
  // Give up when the best value has not moved for this many iterations.
  const int patience = 50 * static_cast<int>(d + 1);
  double record = kInf;
  int last_gain = 0;
  int it = 0;
  for (; it < max_iters; ++it) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];
    double diam = 0.0;
    for (std::size_t k : order) diam = std::max(diam, (pts[k] - pts[best]).lpNorm<Eigen::Infinity>());
    const double spread = vals[worst] - vals[best];
    if (std::isfinite(vals[best]) && spread <= f_tol * std::max(1.0, std::abs(vals[best])) &&
        diam <= std::sqrt(f_tol) * std::max(1.0, pts[best].lpNorm<Eigen::Infinity>())) {
      res.converged = true;
      break;
    }
    if (vals[best] < record - f_tol * std::max(1.0, std::abs(vals[best]))) {
      record = vals[best];
      last_gain = it;
    } else if (it - last_gain > patience) {
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
    for (std::size_t k : order)
      if (k != worst) centroid += pts[k];
    centroid /= static_cast<double>(d);

    const Eigen::VectorXd xr = centroid + alpha * (centroid - pts[worst]);
    const double fr = safe_eval(f, xr);
    if (fr < vals[best]) {
      const Eigen::VectorXd xe = centroid + gamma * (xr - centroid);
      const double fe = safe_eval(f, xe);
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const Eigen::VectorXd xc =
        outside ? Eigen::VectorXd(centroid + rho * (xr - centroid)) : Eigen::VectorXd(centroid + rho * (pts[worst] - centroid));
    const double fc = safe_eval(f, xc);
    if (fc < std::min(fr, vals[worst])) {
      pts[worst] = xc;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t k : order) {
      if (k == best) continue;
      pts[k] = pts[best] + shrink * (pts[k] - pts[best]);
      vals[k] = safe_eval(f, pts[k]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  res.x = pts[best];
  res.f = vals[best];
  res.iterations = it;
  return res;
}

Eigen::VectorXd numeric_gradient(const Objective& f, const Eigen::VectorXd& x) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
    Eigen::VectorXd a = x, b = x;
    a[j] += h;
    b[j] -= h;
    g[j] = (f(a) - f(b)) / (2.0 * h);
  }
  return g;
}

PolishResult newton_polish(const Objective& f, const GradientFn& grad, Eigen::VectorXd x, double x_tol,
                           int max_iters) {
  const Eigen::Index d = x.size();
  auto gradient = [&](const Eigen::VectorXd& z) { return grad ? grad(z) : numeric_gradient(f, z); };
  PolishResult res;
  double fx = safe_eval(f, x);
  int it = 0;
  for (; it < max_iters && std::isfinite(fx); ++it) {
    const Eigen::VectorXd g = gradient(x);
    if (!g.allFinite()) break;
    Eigen::MatrixXd H(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double h = 1e-5 * std::max(1.0, std::abs(x[j]));
      Eigen::VectorXd a = x, b = x;
      a[j] += h;
      b[j] -= h;
      H.col(j) = (gradient(a) - gradient(b)) / (2.0 * h);
    }
    H = 0.5 * (H + H.transpose()).eval();
    if (!H.allFinite()) break;
    // Levenberg damping until the model is convex.
    Eigen::VectorXd step;
    double lambda = 0.0;
    const double scale = std::max(1e-12, H.diagonal().cwiseAbs().maxCoeff());
    for (int k = 0; k < 30; ++k) {
      Eigen::LLT<Eigen::MatrixXd> llt(H + lambda * Eigen::MatrixXd::Identity(d, d));
      if (llt.info() == Eigen::Success) {
        step = -llt.solve(g);
        break;
      }
      lambda = lambda == 0.0 ? 1e-8 * scale : lambda * 10.0;
    }
    if (step.size() == 0 || !step.allFinite()) break;
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 40; ++k, t *= 0.5) {
      const Eigen::VectorXd xn = x + t * step;
      const double fn = safe_eval(f, xn);
      if (fn <= fx + 1e-4 * t * g.dot(step)) {
        moved = true;
        x = xn;
        fx = fn;
        break;
      }
    }
    if (!moved) break;
    if ((t * step).lpNorm<Eigen::Infinity>() <= x_tol * std::max(1.0, x.lpNorm<Eigen::Infinity>())) {
      ++it;
      break;
    }
  }
  res.x = x;
  res.f = fx;
  res.iterations = it;
  return res;
}

MultiStartResult minimize_multistart(const Objective& f, const GradientFn& grad,
                                     const std::vector<Eigen::VectorXd>& starts, const OptimizerConfig& cfg) {
  MultiStartResult best;
  best.f = kInf;
  double best_dist = kInf;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    if (!std::isfinite(safe_eval(f, starts[s]))) continue;
    ++best.starts_used;
    auto nm = nelder_mead(f, starts[s], cfg.f_tol, cfg.max_iters);
    if (nm.converged) {
      // One restart from the reported minimum guards against a collapsed simplex.
      auto again = nelder_mead(f, nm.x, cfg.f_tol, cfg.max_iters, 0.02);
      nm.iterations += again.iterations;
      if (again.f <= nm.f) {
        nm.x = again.x;
        nm.f = again.f;
      }
      nm.converged = again.converged;
    }
    auto pol = newton_polish(f, grad, nm.x, cfg.x_tol);
    best.iterations += nm.iterations + pol.iterations;
    const double val = std::min(pol.f, nm.f);
    const Eigen::VectorXd x = pol.f <= nm.f ? pol.x : nm.x;
    if (!std::isfinite(val)) continue;
    const double dist = (x - starts.front()).norm();
    const double tie = cfg.f_tol * std::max(1.0, std::abs(best.f));
    const bool better = !std::isfinite(best.f) || val < best.f - tie ||
                        (val <= best.f + tie && dist < best_dist);
    if (better) {
      best.x = x;
      best.f = val;
      best.best_start = static_cast<int>(s);
      best.simplex_converged = nm.converged;
      best_dist = dist;
    }
  }
  return best;
}

std::vector<Eigen::VectorXd> dispersed_starts(const std::vector<Eigen::VectorXd>& anchors, int count,
                                              double dispersion, std::uint64_t seed) {
  std::vector<Eigen::VectorXd> out;
  if (anchors.empty() || count <= 0) return out;
  auto gen = make_rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd s = anchors[static_cast<std::size_t>(k) % anchors.size()];
    for (Eigen::Index j = 0; j < s.size(); ++j) s[j] += dispersion * std::max(1.0, std::abs(s[j])) * z(gen);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace dpd
