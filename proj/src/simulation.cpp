#include "dpd/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>

#include "dpd/errors.hpp"
#include "dpd/parallel.hpp"
#include "dpd/random.hpp"
#include "dpd/stats.hpp"

namespace dpd {

void SimulationPlan::validate() const {
  if (n_reps < 1) throw InvalidParameter("n_reps must be >= 1");
  model.parameter(theta0.values());
  contamination.validate(model);
  for (double a : alpha_grid)
    if (!(a >= 0.0 && a <= 1.0)) throw InvalidParameter("alpha grid values must lie in [0, 1]");
  for (double e : eps_grid)
    if (!(e >= 0.0 && e < 1.0)) throw InvalidParameter("eps grid values must lie in [0, 1)");
  if (alpha_grid.empty() || eps_grid.empty()) throw InvalidParameter("grids must be non-empty");
}

std::vector<Vector> ReplicateSummary::median_curve(std::size_t a) const {
  std::vector<Vector> out;
  for (std::size_t e = 0; e < eps_grid.size(); ++e) out.push_back(at(a, e).median);
  return out;
}

Vector sample_contaminated(const ModelFamily& model, const ParameterVector& theta0, const ContaminationScheme& cont,
                           double eps, std::uint64_t seed, bool fixed_count, std::vector<bool>* flags) {
  if (!(eps >= 0.0 && eps < 1.0)) throw DomainError("contamination fraction must lie in [0, 1)");
  cont.validate(model);
  const Eigen::Index n = model.n();
  auto main = make_rng(seed);
  auto flags_rng = make_rng(derive_seed(seed, {1}));
  auto cont_rng = make_rng(derive_seed(seed, {2}));
  std::vector<bool> flag(static_cast<std::size_t>(n), false);
  if (fixed_count) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), flags_rng);
    const auto k = static_cast<std::size_t>(std::floor(eps * static_cast<double>(n)));
    for (std::size_t j = 0; j < k; ++j) flag[idx[j]] = true;
  } else if (eps > 0.0) {
    std::bernoulli_distribution b(eps);
    for (auto&& f : flag) f = b(flags_rng);
  }
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y[i] = draw(obs_density(model, i, theta0), main);
    if (flag[static_cast<std::size_t>(i)]) y[i] = draw(cont.contaminants()[static_cast<std::size_t>(i)], cont_rng);
  }
  if (flags) *flags = std::move(flag);
  return y;
}

std::uint64_t replicate_seed(std::uint64_t base_seed, std::size_t e, std::size_t r) {
  return derive_seed(base_seed, {static_cast<std::uint64_t>(e), static_cast<std::uint64_t>(r)});
}

ReplicateSummary run_simulation(const SimulationPlan& plan, const ProgressFn& progress) {
  plan.validate();
  const std::size_t na = plan.alpha_grid.size(), ne = plan.eps_grid.size();
  const auto reps = static_cast<std::size_t>(plan.n_reps);
  const Eigen::Index d = plan.model.dim();
  const Vector nan_vec = Vector::Constant(d, std::numeric_limits<double>::quiet_NaN());

  // estimates[(a * ne + e) * reps + r]
  std::vector<Vector> est(na * ne * reps, nan_vec);
  std::vector<char> conv(na * ne * reps, 0);

  OptimizerConfig opt = plan.opt;
  opt.extra_starts.insert(opt.extra_starts.begin(), plan.theta0.values());
  if (plan.contamination.source_theta()) opt.extra_starts.push_back(*plan.contamination.source_theta());

  std::mutex progress_mutex;
  std::size_t done = 0;
  parallel_for(ne * reps, plan.threads, [&](std::size_t task) {
    const std::size_t e = task / reps, r = task % reps;
    const std::uint64_t seed = replicate_seed(plan.base_seed, e, r);
    const Vector y =
        sample_contaminated(plan.model, plan.theta0, plan.contamination, plan.eps_grid[e], seed, plan.fixed_count);
    for (std::size_t a = 0; a < na; ++a) {
      OptimizerConfig o = opt;
      o.seed = derive_seed(seed, {a, 99});
      const std::size_t slot = (a * ne + e) * reps + r;
      try {
        const FitResult fit = mdpde_fit(plan.model, y, plan.alpha_grid[a], o);
        est[slot] = fit.theta_hat.values();
        conv[slot] = fit.converged ? 1 : 0;
      } catch (const NumericalFailure&) {
        conv[slot] = 0;
      }
    }
    if (progress) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      progress(++done, ne * reps);
    }
  });

  ReplicateSummary out{plan.alpha_grid, plan.eps_grid, {}};
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t e = 0; e < ne; ++e) {
      CellSummary c;
      c.alpha = plan.alpha_grid[a];
      c.eps = plan.eps_grid[e];
      std::vector<Vector> good;
      for (std::size_t r = 0; r < reps; ++r) {
        const std::size_t slot = (a * ne + e) * reps + r;
        if (conv[slot]) good.push_back(est[slot]);
        if (plan.keep_estimates) c.estimates.push_back(est[slot]);
      }
      c.n_converged = static_cast<int>(good.size());
      c.conv_rate = static_cast<double>(good.size()) / static_cast<double>(reps);
      c.flagged = c.conv_rate < 0.5;
      c.median = c.q25 = c.q75 = nan_vec;
      if (!good.empty())
        for (Eigen::Index j = 0; j < d; ++j) {
          std::vector<double> v;
          for (const auto& g : good) v.push_back(g[j]);
          c.q25[j] = quantile(v, 0.25);
          c.median[j] = quantile(v, 0.5);
          c.q75[j] = quantile(std::move(v), 0.75);
        }
      out.cells.push_back(std::move(c));
    }
  return out;
}

}  // namespace dpd
