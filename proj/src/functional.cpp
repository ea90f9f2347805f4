#include "dpd/functional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "dpd/errors.hpp"
#include "dpd/estimation.hpp"
#include "dpd/lattice.hpp"
#include "dpd/random.hpp"

namespace dpd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double expected_log_factorial(const UnivariateDensity& d, double tail_tol) {
  const double m = d.mean();
  if (m == 0.0) return 0.0;
  return lattice_sum(poisson_window(m, tail_tol), std::sqrt(m),
                     [&](double y) { return std::exp(poisson_log_pmf(y, m)) * log_factorial(y); });
}

}  // namespace

void MonteCarloConfig::validate() const {
  if (n_draws < 1) throw ConfigError("mc.n_draws", "Monte-Carlo sample size must be >= 1");
}

ContaminationScheme::ContaminationScheme(double eps, std::vector<UnivariateDensity> contaminants,
                                         std::optional<Vector> source_theta)
    : eps_(eps), contaminants_(std::move(contaminants)), source_theta_(std::move(source_theta)) {
  if (!(eps >= 0.0 && eps < 1.0)) throw DomainError("contamination fraction must lie in [0, 1)");
}

ContaminationScheme ContaminationScheme::from_model(const ModelFamily& model, const Vector& theta_c, double eps) {
  const ParameterVector pc = model.parameter(theta_c);
  std::vector<UnivariateDensity> k;
  k.reserve(static_cast<std::size_t>(model.n()));
  for (Eigen::Index i = 0; i < model.n(); ++i) k.push_back(obs_density(model, i, pc));
  return ContaminationScheme(eps, std::move(k), theta_c);
}

ContaminationScheme ContaminationScheme::affine_mean(const ModelFamily& model, const Vector& coef, double eps,
                                                     std::optional<double> sd) {
  const Matrix& x = model.design().matrix();
  if (coef.size() != x.cols() + 1)
    throw InvalidParameter("affine contaminant mean needs " + std::to_string(x.cols() + 1) + " coefficients");
  std::vector<UnivariateDensity> k;
  for (Eigen::Index i = 0; i < model.n(); ++i) {
    const double m = coef[0] + x.row(i).dot(coef.tail(x.cols()));
    switch (model.kind()) {
      case FamilyKind::NormalNLR:
        if (!sd) throw InvalidParameter("normal contaminants need a standard deviation");
        k.push_back(UnivariateDensity::normal(m, *sd));
        break;
      case FamilyKind::PoissonLogLink: k.push_back(UnivariateDensity::poisson(m)); break;
      case FamilyKind::ExponentialLogLink: k.push_back(UnivariateDensity::exponential(m)); break;
    }
  }
  auto ref = kl_projection(model, k);
  return ContaminationScheme(eps, std::move(k), std::move(ref));
}

std::optional<Vector> kl_projection(const ModelFamily& model, const std::vector<UnivariateDensity>& targets) {
  if (static_cast<Eigen::Index>(targets.size()) != model.n())
    throw InvalidParameter("one target density per row is required");
  // The expected log-likelihood depends on each target through its mean, plus
  // its variance for the Normal scale.
  Vector means(model.n());
  double extra_var = 0.0;
  for (Eigen::Index i = 0; i < model.n(); ++i) {
    const auto& t = targets[static_cast<std::size_t>(i)];
    means[i] = t.mean();
    if (t.is_normal()) extra_var += t.variance();
  }
  auto fit = likelihood_fit(model, means);
  if (!fit) return std::nullopt;
  Vector theta = fit->values();
  if (model.kind() == FamilyKind::NormalNLR) {
    const Eigen::Index s = theta.size() - 1;
    theta[s] = std::sqrt(theta[s] * theta[s] + extra_var / static_cast<double>(model.n()));
  }
  return theta;
}

ContaminationScheme ContaminationScheme::with_eps(double eps) const {
  return ContaminationScheme(eps, contaminants_, source_theta_);
}

void ContaminationScheme::validate(const ModelFamily& model) const {
  if (static_cast<Eigen::Index>(contaminants_.size()) != model.n())
    throw InvalidParameter("expected " + std::to_string(model.n()) + " contaminating densities, got " +
                           std::to_string(contaminants_.size()));
  if (source_theta_ && source_theta_->size() != model.dim())
    throw InvalidParameter("contaminant parameter has the wrong dimension");
}

PopulationObjective::PopulationObjective(const ModelFamily& model, const ParameterVector& theta0,
                                         const ContaminationScheme& cont, double alpha,
                                         const MonteCarloConfig& mc, const DpdConfig& tol)
    : model_(&model), eps_(cont.eps()), alpha_(alpha), tol_(tol) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be finite and >= 0");
  tol_.alpha = alpha;
  const ParameterVector t0 = model.parameter(theta0.values());
  cont.validate(model);
  const Eigen::Index n = model.n();
  for (Eigen::Index i = 0; i < n; ++i) {
    g_.push_back(obs_density(model, i, t0));
    if (g_.back().support() != cont.contaminants()[static_cast<std::size_t>(i)].support())
      throw DomainError("contaminant support differs from the model support");
  }
  k_ = cont.contaminants();

  mix_mean_.resize(n);
  mix_second_.resize(n);
  mix_log_fact_ = Vector::Zero(n);
  const bool pois = model.kind() == FamilyKind::PoissonLogLink;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& g = g_[static_cast<std::size_t>(i)];
    const auto& k = k_[static_cast<std::size_t>(i)];
    mix_mean_[i] = (1.0 - eps_) * g.mean() + eps_ * k.mean();
    mix_second_[i] = (1.0 - eps_) * (g.variance() + g.mean() * g.mean()) +
                     eps_ * (k.variance() + k.mean() * k.mean());
    if (pois && alpha == 0.0)
      mix_log_fact_[i] = (1.0 - eps_) * expected_log_factorial(g, tol.sum_tail_tol) +
                         (eps_ > 0.0 ? eps_ * expected_log_factorial(k, tol.sum_tail_tol) : 0.0);
  }

  monte_carlo_ = pois && alpha > 0.0 && !mc.exact;
  if (monte_carlo_) {
    mc.validate();
    n_draws_ = mc.n_draws;
    auto build = [&](const UnivariateDensity& d, std::uint64_t seed) {
      auto gen = make_rng(seed);
      std::map<double, std::size_t> counts;
      for (std::size_t r = 0; r < mc.n_draws; ++r) ++counts[draw(d, gen)];
      Histogram h;
      for (const auto& [y, c] : counts) {
        h.y.push_back(y);
        h.log_fact.push_back(log_factorial(y));
        h.weight.push_back(static_cast<double>(c) / static_cast<double>(mc.n_draws));
      }
      return h;
    };
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto ii = static_cast<std::uint64_t>(i);
      g_draws_.push_back(build(g_[static_cast<std::size_t>(i)], derive_seed(mc.seed, {ii, 0})));
      k_draws_.push_back(eps_ > 0.0 ? build(k_[static_cast<std::size_t>(i)], derive_seed(mc.seed, {ii, 1}))
                                    : Histogram{});
    }
  }
}

double PopulationObjective::cross_term(Eigen::Index i, const UnivariateDensity& f, double* var) const {
  const auto ii = static_cast<std::size_t>(i);
  if (!monte_carlo_) {
    double c = (1.0 - eps_) * cross_power(g_[ii], f, tol_);
    if (eps_ > 0.0) c += eps_ * cross_power(k_[ii], f, tol_);
    return c;
  }
  const double p = f.mean();
  const double lp = std::log(p);
  // The log-pmf is concave in y, so terms fall off monotonically on either
  // side of the mode; stop once they are 60 nats below the largest one.
  auto mc_mean = [&](const Histogram& h, double w) {
    double s = 0.0, s2 = 0.0;
    double top = -kInf;
    auto add = [&](std::size_t j) {
      const double lv = alpha_ * (-p + h.y[j] * lp - h.log_fact[j]);
      top = std::max(top, lv);
      if (lv < top - 60.0) return false;
      const double v = std::exp(lv);
      s += h.weight[j] * v;
      s2 += h.weight[j] * v * v;
      return true;
    };
    const auto split = static_cast<std::size_t>(std::lower_bound(h.y.begin(), h.y.end(), p) - h.y.begin());
    for (std::size_t j = split; j > 0 && add(j - 1); --j) {
    }
    for (std::size_t j = split; j < h.y.size() && add(j); ++j) {
    }
    if (var) *var += w * w * std::max(0.0, s2 - s * s) / static_cast<double>(n_draws_);
    return s;
  };
  double c = (1.0 - eps_) * mc_mean(g_draws_[ii], 1.0 - eps_);
  if (eps_ > 0.0) c += eps_ * mc_mean(k_draws_[ii], eps_);
  return c;
}

double PopulationObjective::operator()(const Vector& theta) const {
  const ModelFamily& model = *model_;
  const Eigen::Index n = model.n();
  double s = 0.0;
  if (alpha_ == 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double m = model.location(i, theta);
      switch (model.kind()) {
        case FamilyKind::NormalNLR: {
          const double sd = model.sigma(theta);
          s += -std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi) -
               (mix_second_[i] - 2.0 * m * mix_mean_[i] + m * m) / (2.0 * sd * sd);
          break;
        }
        case FamilyKind::ExponentialLogLink: s += -std::log(m) - mix_mean_[i] / m; break;
        case FamilyKind::PoissonLogLink: s += mix_mean_[i] * std::log(m) - m - mix_log_fact_[i]; break;
      }
    }
    return 1.0 - s / static_cast<double>(n);
  }
  const bool shared = model.kind() == FamilyKind::NormalNLR;
  double m_shared = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const UnivariateDensity f = obs_density(model, i, theta);
    if (i == 0 && shared) m_shared = power_norm(f, alpha_);
    const double mf = shared ? m_shared : power_norm(f, alpha_, tol_.sum_tail_tol);
    s += mf - (1.0 + 1.0 / alpha_) * cross_term(i, f, nullptr);
  }
  return s / static_cast<double>(n) + 1.0 / alpha_;
}

double PopulationObjective::value(const ParameterVector& theta) const {
  return (*this)(model_->parameter(theta.values()).values());
}

double PopulationObjective::standard_error(const Vector& theta) const {
  if (!monte_carlo_) return 0.0;
  double var = 0.0;
  for (Eigen::Index i = 0; i < model_->n(); ++i) cross_term(i, obs_density(*model_, i, theta), &var);
  const double n = static_cast<double>(model_->n());
  return (1.0 + 1.0 / alpha_) * std::sqrt(var) / n;
}

double population_objective(const ModelFamily& model, const ParameterVector& theta0,
                            const ContaminationScheme& cont, const ParameterVector& theta, double alpha,
                            const MonteCarloConfig& mc) {
  return PopulationObjective(model, theta0, cont, alpha, mc).value(theta);
}

FunctionalResult mdpdf(const ModelFamily& model, const ParameterVector& theta0, const ContaminationScheme& cont,
                       double alpha, const OptimizerConfig& opt, const MonteCarloConfig& mc,
                       const std::vector<Vector>& warm_starts) {
  const PopulationObjective h(model, theta0, cont, alpha, mc);
  const auto pos = model.positivity();
  Objective f = [&](const Vector& z) {
    const Vector t = ParameterVector::natural_values(z, pos);
    if (!model.is_valid(t)) return kInf;
    const double v = h(t);
    return std::isfinite(v) ? v : kInf;
  };

  std::vector<Vector> natural{theta0.values()};
  const auto& tc = cont.source_theta();
  if (tc) natural.push_back(*tc);
  if (alpha > 0.0) {
    OptimizerConfig kl = opt;
    kl.n_starts = 0;
    kl.extra_starts.clear();
    const auto base = mdpdf(model, theta0, cont, 0.0, kl, mc);
    natural.push_back(base.theta_star.values());
  }
  if (tc) natural.push_back(0.5 * (theta0.values() + *tc));
  if (model.kind() == FamilyKind::NormalNLR) {
    const std::size_t base_count = natural.size();
    for (std::size_t b = 0; b < base_count; ++b)
      for (double factor : {4.0, 16.0}) {
        Vector t = natural[b];
        t[t.size() - 1] *= factor;
        natural.push_back(t);
      }
  }
  for (const auto& w : warm_starts) natural.push_back(w);
  for (const auto& e : opt.extra_starts) natural.push_back(e);

  std::vector<Vector> starts;
  for (const auto& t : natural)
    if (t.size() == model.dim() && model.is_valid(t)) starts.push_back(ParameterVector(t, pos).to_unconstrained());
  const int extra = opt.n_starts - static_cast<int>(starts.size());
  std::vector<Vector> anchors(starts.begin(), starts.begin() + std::min<std::size_t>(starts.size(), 3));
  for (auto& s : dispersed_starts(anchors, extra, opt.start_dispersion, derive_seed(opt.seed, {3})))
    starts.push_back(std::move(s));

  const auto ms = minimize_multistart(f, nullptr, starts, opt);
  FunctionalResult r;
  r.eps = cont.eps();
  r.alpha = alpha;
  if (ms.best_start < 0) {
    r.theta_star = theta0;
    r.objective = kInf;
    r.gradient_norm = kInf;
    return r;
  }
  r.theta_star = ParameterVector::from_unconstrained(ms.x, pos);
  r.objective = ms.f;
  Objective natural_f = [&](const Vector& t) { return model.is_valid(t) ? h(t) : kInf; };
  r.gradient_norm = numeric_gradient(natural_f, r.theta_star.values()).norm();
  r.converged = ms.simplex_converged && std::isfinite(r.gradient_norm) &&
                r.gradient_norm / (1.0 + alpha) <= opt.stationarity_tol;
  return r;
}

}  // namespace dpd
