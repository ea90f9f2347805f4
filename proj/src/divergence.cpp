#include "dpd/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "dpd/lattice.hpp"
#include "dpd/quadrature.hpp"

namespace dpd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_alpha(double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be finite and >= 0");
}

// Continuous pairs on different supports fall back to quadrature; counting vs continuous has no
// common dominating measure.
void require_same_support(const UnivariateDensity& f, const UnivariateDensity& g) {
  if ((f.support() == Support::Counting) != (g.support() == Support::Counting))
    throw DomainError(std::string("densities live on different supports (") +
                      support_name(f.support()) + " vs " + support_name(g.support()) + ")");
}

// Breakpoints that put quadrature nodes where the densities have their mass.
std::vector<double> quadrature_points(const UnivariateDensity& f, const UnivariateDensity& g) {
  std::vector<double> pts;
  double lo = kInf, hi = -kInf;
  for (const auto* d : {&f, &g}) {
    if (d->is_normal()) {
      const double m = d->mean(), s = d->sd();
      for (double k : {0.0, 1.0, 3.0, 6.0}) {
        pts.push_back(m - k * s);
        pts.push_back(m + k * s);
      }
      lo = std::min(lo, m - 15.0 * s);
      hi = std::max(hi, m + 15.0 * s);
    } else {
      const double m = d->mean();
      for (double k : {0.05, 0.25, 1.0, 3.0, 10.0}) pts.push_back(k * m);
      lo = 0.0;
      hi = std::max(hi, 50.0 * m);
    }
  }
  pts.push_back(lo);
  pts.push_back(hi);
  std::vector<double> kept;
  for (double p : pts)
    if (p >= lo && p <= hi) kept.push_back(p);
  return kept;
}

template <class F>
double integrate_continuous(F&& h, const UnivariateDensity& f, const UnivariateDensity& g,
                            double tol) {
  auto r = integrate_pieces(h, quadrature_points(f, g), tol, 1e-12);
  if (!r.converged && r.abs_error > 1e3 * tol)
    throw NumericalFailure("quadrature did not reach tolerance");
  return r.value;
}

}  // namespace

void DpdConfig::validate() const {
  check_alpha(alpha);
  if (!(quad_tol > 0.0)) throw DomainError("quad_tol must be > 0");
  if (!(sum_tail_tol > 0.0)) throw DomainError("sum_tail_tol must be > 0");
}

const char* support_name(Support s) {
  switch (s) {
    case Support::RealLine: return "real line";
    case Support::HalfLine: return "half line";
    case Support::Counting: return "non-negative integers";
  }
  return "?";
}

UnivariateDensity UnivariateDensity::normal(double mean, double sd) {
  if (!std::isfinite(mean) || !(sd > 0.0) || !std::isfinite(sd))
    throw InvalidParameter("normal density needs finite mean and sd > 0");
  return UnivariateDensity(NormalDist{mean, sd});
}

UnivariateDensity UnivariateDensity::exponential(double mean) {
  if (!(mean > 0.0) || !std::isfinite(mean))
    throw InvalidParameter("exponential density needs mean > 0");
  return UnivariateDensity(ExponentialDist{mean});
}

UnivariateDensity UnivariateDensity::poisson(double mean) {
  if (!(mean > 0.0) || !std::isfinite(mean))
    throw InvalidParameter("poisson density needs mean > 0");
  return UnivariateDensity(PoissonDist{mean});
}

Support UnivariateDensity::support() const {
  if (is_normal()) return Support::RealLine;
  if (is_exponential()) return Support::HalfLine;
  return Support::Counting;
}

double UnivariateDensity::mean() const {
  return std::visit([](const auto& d) { return d.mean; }, kind_);
}

double UnivariateDensity::variance() const {
  if (const auto* n = std::get_if<NormalDist>(&kind_)) return n->sd * n->sd;
  if (const auto* e = std::get_if<ExponentialDist>(&kind_)) return e->mean * e->mean;
  return std::get<PoissonDist>(kind_).mean;
}

double UnivariateDensity::sd() const { return std::sqrt(variance()); }

double UnivariateDensity::log_pdf(double y) const {
  if (const auto* n = std::get_if<NormalDist>(&kind_)) {
    const double z = (y - n->mean) / n->sd;
    return -0.5 * z * z - std::log(n->sd) - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  if (const auto* e = std::get_if<ExponentialDist>(&kind_)) {
    if (y < 0.0) return -kInf;
    return -std::log(e->mean) - y / e->mean;
  }
  return poisson_log_pmf(y, std::get<PoissonDist>(kind_).mean);
}

double UnivariateDensity::pdf(double y) const { return std::exp(log_pdf(y)); }

std::pair<double, double> UnivariateDensity::window(double tail_tol) const {
  if (const auto* n = std::get_if<NormalDist>(&kind_)) {
    const double k = std::sqrt(2.0 * std::log(2.0 / tail_tol));
    return {n->mean - k * n->sd, n->mean + k * n->sd};
  }
  if (const auto* e = std::get_if<ExponentialDist>(&kind_))
    return {0.0, e->mean * std::log(1.0 / tail_tol)};
  const auto w = poisson_window(mean(), tail_tol);
  return {static_cast<double>(w.lo), static_cast<double>(w.hi)};
}

double gaussian_cross_moment(double mu1, double s1, double mu2, double s2, double alpha) {
  check_alpha(alpha);
  if (!(s1 > 0.0) || !(s2 > 0.0)) throw InvalidParameter("standard deviations must be > 0");
  const double v = alpha * s1 * s1 + s2 * s2;
  const double d = mu1 - mu2;
  return std::pow(2.0 * std::numbers::pi, -0.5 * alpha) * std::pow(s2, 1.0 - alpha) /
         std::sqrt(v) * std::exp(-alpha * d * d / (2.0 * v));
}

namespace {

PoissonPowerSums poisson_sums(double lambda, double a1, double tail_tol, bool with_first) {
  if (std::isnan(lambda)) return {lambda, lambda};
  if (std::isinf(lambda)) return {0.0, 0.0};
  const auto w = poisson_window(lambda, tail_tol);
  const double width = std::sqrt(lambda / a1);
  PoissonPowerSums s;
  if (width < 10.0 || w.hi - w.lo <= 400 || w.lo == 0) {
    // Walk out from the mode with the pmf ratio; terms are log-concave in y,
    // so each side stops once a term drops below the rounding level.
    const auto mode = std::clamp(static_cast<std::int64_t>(std::floor(lambda)), w.lo, w.hi);
    const double log_lambda = std::log(lambda);
    const double lp_mode = poisson_log_pmf(static_cast<double>(mode), lambda);
    const double cutoff = a1 * lp_mode + std::log(1e-20);
    const auto add = [&](std::int64_t y, double lp) {
      const double t = std::exp(a1 * lp);
      s.mass += t;
      if (with_first) s.first += (static_cast<double>(y) - lambda) * t;
    };
    add(mode, lp_mode);
    double lp = lp_mode;
    for (std::int64_t y = mode + 1; y <= w.hi; ++y) {
      lp += log_lambda - std::log(static_cast<double>(y));
      if (!(a1 * lp >= cutoff)) break;
      add(y, lp);
    }
    lp = lp_mode;
    for (std::int64_t y = mode - 1; y >= w.lo; --y) {
      lp -= log_lambda - std::log(static_cast<double>(y + 1));
      if (!(a1 * lp >= cutoff)) break;
      add(y, lp);
    }
    return s;
  }
  s.mass = lattice_sum(w, width, [&](double y) { return std::exp(a1 * poisson_log_pmf(y, lambda)); });
  if (with_first)
    s.first = lattice_sum(w, width, [&](double y) {
      return (y - lambda) * std::exp(a1 * poisson_log_pmf(y, lambda));
    });
  return s;
}

}  // namespace

double power_norm(const UnivariateDensity& f, double alpha, double sum_tail_tol) {
  check_alpha(alpha);
  if (const auto* n = std::get_if<NormalDist>(&f.kind()))
    return std::pow(2.0 * std::numbers::pi, -0.5 * alpha) / std::sqrt(1.0 + alpha) *
           std::pow(n->sd, -alpha);
  if (const auto* e = std::get_if<ExponentialDist>(&f.kind()))
    return 1.0 / ((1.0 + alpha) * std::pow(e->mean, alpha));
  const double lambda = f.mean();
  if (lambda == 0.0) return 1.0;
  return poisson_sums(lambda, 1.0 + alpha, sum_tail_tol, false).mass;
}

PoissonPowerSums poisson_power_sums(double lambda, double alpha, double tail_tol) {
  check_alpha(alpha);
  if (lambda == 0.0) return {1.0, 0.0};
  return poisson_sums(lambda, 1.0 + alpha, tail_tol, true);
}
double cross_power(const UnivariateDensity& g, const UnivariateDensity& f, const DpdConfig& cfg) {
  const double alpha = cfg.alpha;
  check_alpha(alpha);
  require_same_support(f, g);
  if (alpha == 0.0) return 1.0;
  if (f.is_normal() && g.is_normal())
    return gaussian_cross_moment(g.mean(), g.sd(), f.mean(), f.sd(), alpha);
  if (f.is_exponential() && g.is_exponential()) {
    const double p = f.mean(), b = g.mean();
    return std::pow(p, 1.0 - alpha) / (alpha * b + p);
  }
  if (f.is_poisson()) {
    const double p = f.mean(), b = g.mean();
    if (b == 0.0) return std::exp(alpha * poisson_log_pmf(0.0, p));
    const double curv = (p > 0.0 ? alpha / p : kInf) + 1.0 / b;
    return lattice_sum(poisson_window(b, cfg.sum_tail_tol), 1.0 / std::sqrt(curv), [&](double y) {
      return std::exp(alpha * poisson_log_pmf(y, p) + poisson_log_pmf(y, b));
    });
  }
  return integrate_continuous(
      [&](double y) {
        const double lg = g.log_pdf(y);
        if (lg == -kInf) return 0.0;
        return std::exp(alpha * f.log_pdf(y) + lg);
      },
      f, g, cfg.quad_tol);
}

double cross_log(const UnivariateDensity& g, const UnivariateDensity& f, const DpdConfig& cfg) {
  require_same_support(f, g);
  const double eg = g.mean();
  if (const auto* n = std::get_if<NormalDist>(&f.kind())) {
    const double d = eg - n->mean;
    return -std::log(n->sd) - 0.5 * std::log(2.0 * std::numbers::pi) -
           (g.variance() + d * d) / (2.0 * n->sd * n->sd);
  }
  if (const auto* e = std::get_if<ExponentialDist>(&f.kind())) {
    if (g.is_normal()) return -kInf;
    return -std::log(e->mean) - eg / e->mean;
  }
  const double p = f.mean();
  if (eg == 0.0) return -p;
  if (p == 0.0) return -kInf;
  const double elf = lattice_sum(poisson_window(eg, cfg.sum_tail_tol), std::sqrt(eg), [&](double y) {
    return std::exp(poisson_log_pmf(y, eg)) * log_factorial(y);
  });
  return eg * std::log(p) - p - elf;
}

double dpd(const UnivariateDensity& g, const UnivariateDensity& f, const DpdConfig& cfg) {
  cfg.validate();
  require_same_support(f, g);
  const double alpha = cfg.alpha;
  if (alpha == 0.0) return cross_log(g, g, cfg) - cross_log(g, f, cfg);
  return power_norm(f, alpha, cfg.sum_tail_tol) - (1.0 + 1.0 / alpha) * cross_power(g, f, cfg) +
         power_norm(g, alpha, cfg.sum_tail_tol) / alpha;
}

double overlap_mass(const UnivariateDensity& f, const UnivariateDensity& g, const DpdConfig& cfg) {
  require_same_support(f, g);
  if (f.is_exponential() && g.is_exponential()) {
    const double a = std::min(f.mean(), g.mean());
    const double b = std::max(f.mean(), g.mean());
    if (a == b) return 1.0;
    const double v = std::log(b / a) / (1.0 / a - 1.0 / b);
    return 1.0 - std::exp(-v / b) + std::exp(-v / a);
  }
  if (f.is_poisson()) {
    const auto w = merge(poisson_window(f.mean(), cfg.sum_tail_tol),
                         poisson_window(g.mean(), cfg.sum_tail_tol));
    double s = 0.0;
    for (std::int64_t y = w.lo; y <= w.hi; ++y) {
      const double yy = static_cast<double>(y);
      s += std::exp(std::min(f.log_pdf(yy), g.log_pdf(yy)));
    }
    return std::min(s, 1.0);
  }
  return std::min(1.0, integrate_continuous(
                           [&](double y) { return std::exp(std::min(f.log_pdf(y), g.log_pdf(y))); },
                           f, g, cfg.quad_tol));
}

double log_overlap_mass(const UnivariateDensity& f, const UnivariateDensity& g, const DpdConfig& cfg) {
  require_same_support(f, g);
  if (!f.is_poisson()) return std::log(overlap_mass(f, g, cfg));
  const auto w = merge(poisson_window(f.mean(), cfg.sum_tail_tol), poisson_window(g.mean(), cfg.sum_tail_tol));
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(w.hi - w.lo + 1));
  double top = -kInf;
  for (std::int64_t y = w.lo; y <= w.hi; ++y) {
    const double yy = static_cast<double>(y);
    terms.push_back(std::min(f.log_pdf(yy), g.log_pdf(yy)));
    top = std::max(top, terms.back());
  }
  if (top == -kInf) return -kInf;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - top);
  return std::min(top + std::log(s), 0.0);
}

}  // namespace dpd
