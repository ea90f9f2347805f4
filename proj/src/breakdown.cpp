#include "dpd/breakdown.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "dpd/errors.hpp"
#include "dpd/parallel.hpp"
#include "dpd/random.hpp"

namespace dpd {

void BoundProblem::validate() const {
  if (!(C >= 0.0) || !std::isfinite(C)) throw DomainError("C must be finite and >= 0");
  if (!(L0 > 0.0) || !std::isfinite(L0)) throw DomainError("L0 must be finite and > 0");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be finite and > 0");
}

double bound_equation(const BoundProblem& prob, double x) {
  return (prob.C / prob.alpha) * std::pow(x, 1.0 + prob.alpha) + q_alpha(1.0 - x, prob.alpha) * prob.L0;
}

BoundSolution solve_bound(const BoundProblem& prob) {
  prob.validate();
  double lo = 0.0, hi = 1.0;
  if (!(bound_equation(prob, lo) < 0.0) || !(bound_equation(prob, hi) > 0.0))
    throw NumericalFailure("bound equation does not change sign on (0, 1)");
  BoundSolution s;
  while (hi - lo > 1e-12 && s.iterations < 200) {
    const double mid = 0.5 * (lo + hi);
    if (bound_equation(prob, mid) < 0.0) lo = mid;
    else hi = mid;
    ++s.iterations;
  }
  s.root = 0.5 * (lo + hi);
  // Decide the cap from the sign at 1/2 so a root at exactly 1/2 is not lost to bisection error.
  s.bound = bound_equation(prob, 0.5) > 0.0 ? std::min(s.root, 0.5) : 0.5;
  s.residual = std::abs(bound_equation(prob, s.root));
  return s;
}

double abp_lower_bound(const BoundProblem& prob) { return solve_bound(prob).bound; }

double implicit_L0(double C, double alpha, double level) {
  const double denom = (1.0 + alpha) * (1.0 - level) - alpha;
  if (!(denom > 0.0)) throw DomainError("level must be below 1/(1 + alpha)");
  return C * std::pow(level, 1.0 + alpha) / denom;
}

std::vector<L0Estimate> compute_L0_grid(const ModelFamily& model, const ParameterVector& theta0,
                                        const std::vector<double>& alphas, const MonteCarloConfig& mc) {
  for (double a : alphas)
    if (!(a > 0.0)) throw DomainError("alpha must be > 0");
  const ParameterVector t0 = model.parameter(theta0.values());
  const auto n = static_cast<double>(model.n());
  std::vector<L0Estimate> out(alphas.size());
  if (model.kind() != FamilyKind::PoissonLogLink || mc.exact) {
    for (std::size_t k = 0; k < alphas.size(); ++k) {
      for (Eigen::Index i = 0; i < model.n(); ++i) out[k].value += power_norm(obs_density(model, i, t0), alphas[k]);
      out[k].value /= n;
    }
    return out;
  }
  // M_g = E_g[g^alpha(Y)], estimated from draws of each g_i. The draws do not
  // depend on alpha, so each row is drawn once and tallied by value.
  mc.validate();
  std::vector<double> var(alphas.size(), 0.0);
  const double nd = static_cast<double>(mc.n_draws);
  for (Eigen::Index i = 0; i < model.n(); ++i) {
    const auto g = obs_density(model, i, t0);
    auto gen = make_rng(derive_seed(mc.seed, {static_cast<std::uint64_t>(i), 7}));
    std::map<double, std::size_t> counts;
    for (std::size_t r = 0; r < mc.n_draws; ++r) ++counts[draw(g, gen)];
    for (std::size_t k = 0; k < alphas.size(); ++k) {
      double s = 0.0, s2 = 0.0;
      for (const auto& [y, c] : counts) {
        const double v = std::exp(alphas[k] * g.log_pdf(y));
        s += static_cast<double>(c) * v;
        s2 += static_cast<double>(c) * v * v;
      }
      const double mean = s / nd;
      out[k].value += mean;
      var[k] += std::max(0.0, s2 / nd - mean * mean) / nd;
    }
  }
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    out[k].value /= n;
    out[k].standard_error = std::sqrt(var[k]) / n;
  }
  return out;
}

L0Estimate compute_L0(const ModelFamily& model, const ParameterVector& theta0, double alpha,
                      const MonteCarloConfig& mc) {
  return compute_L0_grid(model, theta0, {alpha}, mc).front();
}

std::vector<BoundRow> poisson_bound_sweep(const ModelFamily& model, const ParameterVector& theta0,
                                          const std::vector<double>& alpha_grid, const MonteCarloConfig& mc,
                                          double C) {
  if (model.kind() != FamilyKind::PoissonLogLink) throw DomainError("bound sweep needs a Poisson model");
  const auto l0 = compute_L0_grid(model, theta0, alpha_grid, mc);
  std::vector<BoundRow> rows;
  for (std::size_t k = 0; k < alpha_grid.size(); ++k)
    rows.push_back({alpha_grid[k], l0[k].value, abp_lower_bound({C, l0[k].value, alpha_grid[k]})});
  return rows;
}

std::vector<BoundRow> bound_grid(const std::vector<double>& alpha_grid, const std::vector<double>& L0_grid,
                                 double C) {
  std::vector<BoundRow> rows;
  for (double l0 : L0_grid)
    for (double a : alpha_grid) rows.push_back({a, l0, abp_lower_bound({C, l0, a})});
  return rows;
}

std::vector<BoundRow> implicit_curve(const std::vector<double>& alpha_grid, double C, double level) {
  std::vector<BoundRow> rows;
  for (double a : alpha_grid) {
    if (!((1.0 + a) * (1.0 - level) - a > 0.0) || level >= 0.5) continue;
    const double l0 = implicit_L0(C, a, level);
    if (l0 > 0.0) rows.push_back({a, l0, level});
  }
  return rows;
}

void SweepTable::validate() const {
  auto increasing = [](const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
      if (!(v[i] > v[i - 1])) return false;
    return true;
  };
  if (!increasing(alpha_grid)) throw InvalidParameter("alpha grid must be strictly increasing");
  if (!increasing(eps_grid)) throw InvalidParameter("eps grid must be strictly increasing");
  if (cells.size() != alpha_grid.size() * eps_grid.size()) throw InvalidParameter("sweep table size mismatch");
}

std::vector<Vector> SweepTable::curve(std::size_t a) const {
  std::vector<Vector> out;
  for (std::size_t e = 0; e < eps_grid.size(); ++e) out.push_back(at(a, e).theta);
  return out;
}

SweepTable mdpdf_sweep(const ModelFamily& model, const ParameterVector& theta0, const ContaminationScheme& cont,
                       const std::vector<double>& alpha_grid, const std::vector<double>& eps_grid,
                       const OptimizerConfig& opt, const MonteCarloConfig& mc, int threads) {
  SweepTable t{alpha_grid, eps_grid, {}};
  t.cells.resize(alpha_grid.size() * eps_grid.size());
  t.validate();
  parallel_for(alpha_grid.size(), threads, [&](std::size_t a) {
    std::vector<Vector> warm;
    for (std::size_t e = 0; e < eps_grid.size(); ++e) {
      SweepCell& c = t.cells[a * eps_grid.size() + e];
      c.alpha = alpha_grid[a];
      c.eps = eps_grid[e];
      OptimizerConfig o = opt;
      o.seed = derive_seed(opt.seed, {a, e});
      MonteCarloConfig m = mc;
      m.seed = derive_seed(mc.seed, {a, e});
      try {
        const auto r = mdpdf(model, theta0, cont.with_eps(eps_grid[e]), alpha_grid[a], o, m, warm);
        c.theta = r.theta_star.values();
        c.objective = r.objective;
        c.converged = r.converged;
        if (!r.converged) c.status = "not-converged";
        warm = {c.theta};
      } catch (const std::exception& ex) {
        c.theta = Vector::Constant(model.dim(), std::numeric_limits<double>::quiet_NaN());
        c.objective = std::numeric_limits<double>::quiet_NaN();
        c.status = std::string("error: ") + ex.what();
      }
    }
  });
  return t;
}

namespace {

Vector basin_scale(const Vector& theta0, const Vector& theta_c) {
  Vector s = (theta0 - theta_c).cwiseAbs();
  for (Eigen::Index j = 0; j < s.size(); ++j)
    if (!(s[j] > 0.0)) s[j] = std::max(std::abs(theta0[j]), 1.0);
  return s;
}

}  // namespace

bool in_contaminant_basin(const Vector& theta, const Vector& theta0, const Vector& theta_c, double escape_radius) {
  if (!theta.allFinite()) return false;
  const Vector s = basin_scale(theta0, theta_c);
  const double d0 = ((theta - theta0).array() / s.array()).matrix().norm();
  const double dc = ((theta - theta_c).array() / s.array()).matrix().norm();
  const double sep = ((theta0 - theta_c).array() / s.array()).matrix().norm();
  return dc < d0 || d0 > escape_radius * sep;
}

BreakdownResult empirical_breakdown_point(const std::vector<double>& eps_grid, const std::vector<Vector>& curve,
                                          const Vector& theta0, const Vector& theta_c,
                                          const BreakdownOptions& opts) {
  if (eps_grid.size() != curve.size()) throw InvalidParameter("curve and eps grid differ in length");
  for (std::size_t i = 1; i < eps_grid.size(); ++i)
    if (!(eps_grid[i] > eps_grid[i - 1])) throw InvalidParameter("eps grid must be strictly increasing");
  BreakdownResult r;
  std::size_t m = 0;
  while (m < eps_grid.size() && eps_grid[m] <= opts.eps_max + 1e-12) ++m;
  for (std::size_t i = 0; i < m; ++i)
    r.broken.push_back(in_contaminant_basin(curve[i], theta0, theta_c, opts.escape_radius));
  if (m == 0) return r;
  std::optional<std::size_t> first;
  for (std::size_t i = 0; i < m; ++i)
    if (r.broken[i]) {
      first = i;
      break;
    }
  if (!first) return r;
  std::size_t start = m;
  while (start > 0 && r.broken[start - 1]) --start;
  if (start < m) r.eps = eps_grid[start];
  if (*first < start) {
    r.ambiguous = true;
    r.candidates.push_back(eps_grid[*first]);
    if (r.eps) r.candidates.push_back(*r.eps);
  }
  return r;
}

AssumptionReport check_assumptions(const UnivariateDensity& f, const UnivariateDensity& g,
                                   const std::function<UnivariateDensity(double)>& family,
                                   const std::vector<double>& etas, double alpha) {
  AssumptionReport rep;
  DpdConfig cfg;
  cfg.alpha = alpha;
  for (std::size_t m = 0; m < etas.size(); ++m) {
    const auto k = family(etas[m]);
    AssumptionRow row;
    row.m = static_cast<int>(m + 1);
    row.eta = etas[m];
    row.overlap_model_contaminant = overlap_mass(f, k, cfg);
    row.overlap_true_model = overlap_mass(g, k, cfg);
    row.log_overlap_model_contaminant = log_overlap_mass(f, k, cfg);
    row.log_overlap_true_model = log_overlap_mass(g, k, cfg);
    row.contaminant_power_norm = power_norm(k, alpha);
    rep.sup_contaminant_power_norm = std::max(rep.sup_contaminant_power_norm, row.contaminant_power_norm);
    rep.rows.push_back(row);
  }
  rep.decreasing = true;
  for (std::size_t m = 1; m < rep.rows.size(); ++m)
    if (!(rep.rows[m].log_overlap_model_contaminant < rep.rows[m - 1].log_overlap_model_contaminant))
      rep.decreasing = false;
  // Counting densities satisfy M_k <= 1; continuous ones use the tail value.
  rep.C = f.support() == Support::Counting ? 1.0
                                           : (rep.rows.empty() ? 0.0 : rep.rows.back().contaminant_power_norm);
  return rep;
}

}  // namespace dpd
