#include "dpd/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dpd/errors.hpp"
#include "dpd/random.hpp"
#include "dpd/stats.hpp"

namespace dpd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEulerGamma = 0.57721566490153286;

void check_alpha(double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be finite and >= 0");
}

double log_density(const ModelFamily& model, Eigen::Index i, const Vector& theta, double y) {
  return obs_density(model, i, theta).log_pdf(y);
}

// Power norm of observation i, with the Normal value shared across rows.
double obs_power_norm(const ModelFamily& model, Eigen::Index i, const Vector& theta, double alpha) {
  return power_norm(obs_density(model, i, theta), alpha);
}

double objective_unchecked(const ModelFamily& model, const Vector& y, const Vector& theta, double alpha) {
  const Eigen::Index n = model.n();
  double s = 0.0;
  if (alpha == 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) s += log_density(model, i, theta, y[i]);
    return 1.0 - s / static_cast<double>(n);
  }
  const bool shared_norm = model.kind() == FamilyKind::NormalNLR;
  const double m_shared = shared_norm ? obs_power_norm(model, 0, theta, alpha) : 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = shared_norm ? m_shared : obs_power_norm(model, i, theta, alpha);
    s += m - (1.0 + 1.0 / alpha) * std::exp(alpha * log_density(model, i, theta, y[i]));
  }
  return s / static_cast<double>(n) + 1.0 / alpha;
}

Vector ee_unchecked(const ModelFamily& model, const Vector& y, const Vector& theta, double alpha) {
  Vector ee = Vector::Zero(theta.size());
  for (Eigen::Index i = 0; i < model.n(); ++i) {
    const Vector u = score(model, i, theta, y[i]);
    if (alpha == 0.0) {
      ee += u;
      continue;
    }
    ee += std::exp(alpha * log_density(model, i, theta, y[i])) * u -
          score_power_integral(model, i, theta, alpha);
  }
  return ee;
}

std::vector<std::vector<int>> elemental_subsets(int n, int k, int max_count, std::uint64_t seed) {
  std::vector<std::vector<int>> out;
  double total = 1.0;
  for (int j = 0; j < k; ++j) total = total * (n - j) / (j + 1);
  if (total <= max_count) {
    std::vector<int> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
      out.push_back(idx);
      int j = k - 1;
      while (j >= 0 && idx[static_cast<std::size_t>(j)] == n - k + j) --j;
      if (j < 0) break;
      ++idx[static_cast<std::size_t>(j)];
      for (int l = j + 1; l < k; ++l) idx[static_cast<std::size_t>(l)] = idx[static_cast<std::size_t>(l - 1)] + 1;
    }
    return out;
  }
  auto gen = make_rng(seed);
  std::uniform_int_distribution<int> pick(0, n - 1);
  while (static_cast<int>(out.size()) < max_count) {
    std::vector<int> idx;
    while (static_cast<int>(idx.size()) < k) {
      const int c = pick(gen);
      if (std::find(idx.begin(), idx.end(), c) == idx.end()) idx.push_back(c);
    }
    std::sort(idx.begin(), idx.end());
    out.push_back(std::move(idx));
  }
  return out;
}

// Regressors of the linear(ised) mean: [1, x] for Linear, x for AffineVector.
Matrix linear_regressors(const ModelFamily& model) {
  const Matrix& x = model.design().matrix();
  if (model.mean_function().kind() == MeanKind::Linear) {
    Matrix z(x.rows(), 2);
    z.col(0).setOnes();
    z.col(1) = x.col(0);
    return z;
  }
  return x;
}

// Response on the scale where the mean is linear in the coefficients.
Vector linearised_response(const ModelFamily& model, const Vector& y) {
  switch (model.kind()) {
    case FamilyKind::PoissonLogLink: return (y.array() + 0.5).log().matrix();
    case FamilyKind::ExponentialLogLink: return (y.array().max(1e-300).log() + kEulerGamma).matrix();
    default: return y;
  }
}

double gauss_consistency(Eigen::Index n, Eigen::Index k) {
  return 1.4826 * (1.0 + 5.0 / std::max<double>(1.0, static_cast<double>(n - k)));
}

std::optional<Vector> mm_pair_fit(double x1, double y1, double x2, double y2) {
  // beta1 x - beta2 y = x y for both points.
  Eigen::Matrix2d a;
  a << x1, -y1, x2, -y2;
  const double det = a.determinant();
  if (std::abs(det) < 1e-12) return std::nullopt;
  const Eigen::Vector2d b = a.inverse() * Eigen::Vector2d(x1 * y1, x2 * y2);
  if (!b.allFinite() || !(b[1] > 0.0)) return std::nullopt;
  return Vector(b);
}

}  // namespace

Vector score_power_integral(const ModelFamily& model, Eigen::Index i, const Vector& theta, double alpha,
                            double sum_tail_tol) {
  Vector out = Vector::Zero(theta.size());
  if (alpha == 0.0) return out;
  const double m = model.location(i, theta);
  switch (model.kind()) {
    case FamilyKind::NormalNLR: {
      const double s = model.sigma(theta);
      const double mf = power_norm(UnivariateDensity::normal(m, s), alpha);
      out[theta.size() - 1] = -alpha / ((1.0 + alpha) * s) * mf;
      return out;
    }
    case FamilyKind::ExponentialLogLink:
      return (-alpha * std::pow(m, -alpha) / ((1.0 + alpha) * (1.0 + alpha))) *
             model.design().row(i).transpose();
    case FamilyKind::PoissonLogLink:
      return poisson_power_sums(m, alpha, sum_tail_tol).first * model.design().row(i).transpose();
  }
  return out;
}

double empirical_objective(const ModelFamily& model, const Vector& y, const ParameterVector& theta,
                           double alpha) {
  check_alpha(alpha);
  model.check_response(y);
  const ParameterVector t = model.parameter(theta.values());
  return objective_unchecked(model, y, t.values(), alpha);
}

Vector estimating_equation(const ModelFamily& model, const Vector& y, const ParameterVector& theta,
                           double alpha) {
  check_alpha(alpha);
  model.check_response(y);
  const ParameterVector t = model.parameter(theta.values());
  return ee_unchecked(model, y, t.values(), alpha);
}

std::optional<ParameterVector> likelihood_fit(const ModelFamily& model, const Vector& y,
                                              const std::optional<Vector>& start) {
  const Eigen::Index n = model.n();
  auto valid = [&](const Vector& t) -> std::optional<ParameterVector> {
    if (!model.is_valid(t)) return std::nullopt;
    return model.parameter(t);
  };
  if (model.kind() == FamilyKind::NormalNLR && model.mean_function().kind() != MeanKind::MichaelisMenten) {
    const Matrix z = linear_regressors(model);
    if (z.cols() > n) return std::nullopt;
    const Eigen::ColPivHouseholderQR<Matrix> qr(z);
    if (qr.rank() < z.cols()) return std::nullopt;
    const Vector beta = qr.solve(y);
    const double rss = (y - z * beta).squaredNorm();
    Vector t(beta.size() + 1);
    t << beta, std::sqrt(std::max(rss / static_cast<double>(n), 1e-300));
    return valid(t);
  }
  if (model.kind() == FamilyKind::NormalNLR) {
    // Gauss-Newton on the residual sum of squares.
    const Eigen::Index k = 2;
    Vector beta;
    if (start && start->size() == 3) beta = start->head(2);
    else {
      auto r = robust_start(model, y, 0);
      if (!r) return std::nullopt;
      beta = r->values().head(2);
    }
    auto rss = [&](const Vector& b) {
      if (!(b[1] > 0.0)) return kInf;
      double s = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double e = y[i] - model.mean_function().value(model.design().row(i), b);
        s += e * e;
      }
      return std::isfinite(s) ? s : kInf;
    };
    double cur = rss(beta);
    for (int it = 0; it < 200 && std::isfinite(cur); ++it) {
      Matrix j(n, k);
      Vector r(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        j.row(i) = model.mean_function().gradient(model.design().row(i), beta).transpose();
        r[i] = y[i] - model.mean_function().value(model.design().row(i), beta);
      }
      const Vector step = j.colPivHouseholderQr().solve(r);
      if (!step.allFinite()) break;
      double t = 1.0;
      bool moved = false;
      for (int h = 0; h < 40; ++h, t *= 0.5) {
        const Vector cand = beta + t * step;
        const double v = rss(cand);
        if (v < cur) {
          moved = cur - v > 1e-15 * cur;
          beta = cand;
          cur = v;
          break;
        }
      }
      if (!moved) break;
    }
    if (!std::isfinite(cur)) return std::nullopt;
    Vector t(3);
    t << beta, std::sqrt(std::max(cur / static_cast<double>(n), 1e-300));
    return valid(t);
  }
  // Log-link families: Newton-Raphson on the log-likelihood with step halving.
  const Matrix& x = model.design().matrix();
  const bool pois = model.kind() == FamilyKind::PoissonLogLink;
  auto loglik = [&](const Vector& b) {
    const Vector eta = x * b;
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (eta[i] > 700.0) return -kInf;
      s += pois ? y[i] * eta[i] - std::exp(eta[i]) : -eta[i] - y[i] * std::exp(-eta[i]);
    }
    return std::isfinite(s) ? s : -kInf;
  };
  Vector beta;
  if (start && start->size() == x.cols()) beta = *start;
  else {
    const Eigen::ColPivHouseholderQR<Matrix> qr(x);
    if (qr.rank() < x.cols()) return std::nullopt;
    beta = qr.solve(linearised_response(model, y));
  }
  double cur = loglik(beta);
  if (!std::isfinite(cur)) beta.setZero(), cur = loglik(beta);
  for (int it = 0; it < 200 && std::isfinite(cur); ++it) {
    const Vector eta = x * beta;
    Vector g = Vector::Zero(beta.size());
    Matrix h = Matrix::Zero(beta.size(), beta.size());
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = pois ? std::exp(eta[i]) : y[i] * std::exp(-eta[i]);
      const double r = pois ? y[i] - w : w - 1.0;
      g += r * x.row(i).transpose();
      h += w * x.row(i).transpose() * x.row(i);
    }
    const Vector step = h.ldlt().solve(g);
    if (!step.allFinite()) break;
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 50; ++k, t *= 0.5) {
      const Vector cand = beta + t * step;
      const double v = loglik(cand);
      if (v > cur) {
        moved = v - cur > 1e-15 * std::abs(cur);
        beta = cand;
        cur = v;
        break;
      }
    }
    if (!moved) break;
  }
  if (!std::isfinite(cur)) return std::nullopt;
  return valid(beta);
}

std::optional<ParameterVector> robust_start(const ModelFamily& model, const Vector& y, std::uint64_t seed) {
  const Eigen::Index n = model.n();
  const bool mm = model.kind() == FamilyKind::NormalNLR &&
                  model.mean_function().kind() == MeanKind::MichaelisMenten;
  const Matrix z = mm ? model.design().matrix() : linear_regressors(model);
  const Vector r = linearised_response(model, y);
  const auto k = static_cast<int>(mm ? 2 : z.cols());
  if (n < k) return std::nullopt;
  const auto subsets = elemental_subsets(static_cast<int>(n), k, 3000, seed);
  double best_crit = kInf;
  Vector best;
  std::vector<double> res2(static_cast<std::size_t>(n));
  for (const auto& s : subsets) {
    Vector beta;
    if (mm) {
      auto b = mm_pair_fit(z(s[0], 0), r[s[0]], z(s[1], 0), r[s[1]]);
      if (!b) continue;
      beta = *b;
    } else {
      Matrix a(k, k);
      Vector rhs(k);
      for (int j = 0; j < k; ++j) {
        a.row(j) = z.row(s[static_cast<std::size_t>(j)]);
        rhs[j] = r[s[static_cast<std::size_t>(j)]];
      }
      Eigen::FullPivLU<Matrix> lu(a);
      if (!lu.isInvertible()) continue;
      beta = lu.solve(rhs);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const double fit = mm ? model.mean_function().value(z.row(i), beta) : z.row(i).dot(beta);
      const double e = r[i] - fit;
      res2[static_cast<std::size_t>(i)] = e * e;
    }
    const double crit = median(res2);
    if (std::isfinite(crit) && crit < best_crit) {
      best_crit = crit;
      best = beta;
    }
  }
  if (best.size() == 0) return std::nullopt;
  Vector t = best;
  if (model.kind() == FamilyKind::NormalNLR) {
    double s = gauss_consistency(n, k) * std::sqrt(best_crit);
    if (!(s > 1e-8)) s = 1e-3 * (1.0 + r.cwiseAbs().maxCoeff());
    t.conservativeResize(best.size() + 1);
    t[best.size()] = s;
  }
  if (!model.is_valid(t)) return std::nullopt;
  return model.parameter(t);
}

FitResult mdpde_fit(const ModelFamily& model, const Vector& y, double alpha, const OptimizerConfig& opt,
                    const std::optional<ParameterVector>& init) {
  check_alpha(alpha);
  model.check_response(y);
  const auto pos = model.positivity();
  const auto n = static_cast<double>(model.n());

  Objective f = [&](const Vector& z) {
    const Vector t = ParameterVector::natural_values(z, pos);
    if (!model.is_valid(t)) return kInf;
    const double v = objective_unchecked(model, y, t, alpha);
    return std::isfinite(v) ? v : kInf;
  };
  GradientFn g = [&](const Vector& z) {
    const Vector t = ParameterVector::natural_values(z, pos);
    if (!model.is_valid(t)) return Vector(Vector::Constant(z.size(), std::numeric_limits<double>::quiet_NaN()));
    Vector grad = -(1.0 + alpha) / n * ee_unchecked(model, y, t, alpha);
    for (Eigen::Index j = 0; j < grad.size(); ++j)
      if (pos[static_cast<std::size_t>(j)]) grad[j] *= t[j];
    return grad;
  };

  std::vector<Vector> natural;
  const auto robust = robust_start(model, y, derive_seed(opt.seed, {1}));
  const auto ml = likelihood_fit(model, y, robust ? std::optional<Vector>(robust->values()) : std::nullopt);
  if (init) natural.push_back(init->values());
  else if (robust) natural.push_back(robust->values());
  else if (ml) natural.push_back(ml->values());
  for (const auto& e : opt.extra_starts) natural.push_back(e);
  if (ml) natural.push_back(ml->values());
  if (robust && init) natural.push_back(robust->values());

  std::vector<Vector> starts;
  for (const auto& t : natural)
    if (t.size() == model.dim() && model.is_valid(t)) starts.push_back(ParameterVector(t, pos).to_unconstrained());
  if (starts.empty()) {
    Vector t = Vector::Zero(model.dim());
    for (std::size_t j = 0; j < pos.size(); ++j)
      if (pos[j]) t[static_cast<Eigen::Index>(j)] = 1.0;
    if (model.is_valid(t)) starts.push_back(ParameterVector(t, pos).to_unconstrained());
  }
  if (starts.empty()) throw NumericalFailure("no valid starting value for the fit");
  const int extra = opt.n_starts - static_cast<int>(starts.size());
  std::vector<Vector> anchors{starts.front()};
  if (ml) anchors.push_back(ParameterVector(ml->values(), pos).to_unconstrained());
  for (auto& s : dispersed_starts(anchors, extra, opt.start_dispersion, derive_seed(opt.seed, {2})))
    starts.push_back(std::move(s));

  const auto ms = minimize_multistart(f, g, starts, opt);
  FitResult res;
  res.n_restarts_used = ms.starts_used;
  res.iterations = ms.iterations;
  if (ms.best_start < 0) {
    res.theta_hat = ParameterVector(ParameterVector::from_unconstrained(starts.front(), pos));
    res.objective = kInf;
    res.ee_residual_norm = kInf;
    return res;
  }
  res.theta_hat = ParameterVector::from_unconstrained(ms.x, pos);
  res.objective = ms.f;
  res.ee_residual_norm = ee_unchecked(model, y, res.theta_hat.values(), alpha).norm();
  res.converged = ms.simplex_converged && std::isfinite(ms.f) && res.ee_residual_norm <= opt.stationarity_tol * n;
  return res;
}

}  // namespace dpd
