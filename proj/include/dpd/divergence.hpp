#pragma once

#include <cmath>
#include <utility>
#include <variant>

#include "dpd/errors.hpp"

namespace dpd {

struct DpdConfig {
  double alpha = 0.5;
  double quad_tol = 1e-10;
  double sum_tail_tol = 1e-14;

  void validate() const;
};

struct NormalDist {
  double mean;
  double sd;
};
struct ExponentialDist {
  double mean;
};
struct PoissonDist {
  double mean;
};

enum class Support { RealLine, HalfLine, Counting };

const char* support_name(Support s);

/// Closed set of univariate laws used as model and contaminant densities.
class UnivariateDensity {
 public:
  using Kind = std::variant<NormalDist, ExponentialDist, PoissonDist>;

  static UnivariateDensity normal(double mean, double sd);
  static UnivariateDensity exponential(double mean);
  static UnivariateDensity poisson(double mean);

  const Kind& kind() const { return kind_; }
  bool is_normal() const { return std::holds_alternative<NormalDist>(kind_); }
  bool is_exponential() const { return std::holds_alternative<ExponentialDist>(kind_); }
  bool is_poisson() const { return std::holds_alternative<PoissonDist>(kind_); }
  Support support() const;

  double mean() const;
  double variance() const;
  double sd() const;

  double log_pdf(double y) const;
  double pdf(double y) const;

  /// Interval holding all but a negligible mass (continuous laws) or the
  /// Chernoff window (Poisson), as doubles.
  std::pair<double, double> window(double tail_tol) const;

 private:
  explicit UnivariateDensity(Kind k) : kind_(k) {}
  Kind kind_;
};

/// Generalised ratio-type helpers for contamination bounds; alpha must be > 0.
template <typename Scalar>
Scalar q_alpha(Scalar eps, Scalar alpha) {
  if (!(alpha > Scalar(0))) throw DomainError("q_alpha requires alpha > 0");
  return Scalar(1) - ((Scalar(1) + alpha) / alpha) * eps;
}

template <typename Scalar>
Scalar r_alpha(Scalar eps, Scalar alpha) {
  using std::pow;
  return q_alpha(eps, alpha) + pow(eps, Scalar(1) + alpha) / alpha;
}

/// Integral of phi(mu1, s1) * phi(mu2, s2)^alpha over the real line.
double gaussian_cross_moment(double mu1, double s1, double mu2, double s2, double alpha);

/// M_f = integral of f^(1 + alpha).
double power_norm(const UnivariateDensity& f, double alpha, double sum_tail_tol = 1e-14);

/// Integral of f^alpha * g (the cross term of the divergence).
double cross_power(const UnivariateDensity& g, const UnivariateDensity& f, const DpdConfig& cfg);

/// Integral of g * log f, used by the alpha = 0 limit.
double cross_log(const UnivariateDensity& g, const UnivariateDensity& f, const DpdConfig& cfg);

struct PoissonPowerSums {
  double mass = 0.0;   // sum of f^(1 + alpha)
  double first = 0.0;  // sum of (y - lambda) f^(1 + alpha)
};

PoissonPowerSums poisson_power_sums(double lambda, double alpha, double tail_tol = 1e-14);

/// Density power divergence d_alpha(g, f); Kullback-Leibler at alpha = 0.
double dpd(const UnivariateDensity& g, const UnivariateDensity& f, const DpdConfig& cfg);

/// Shared mass integral of min(f, g).
double overlap_mass(const UnivariateDensity& f, const UnivariateDensity& g,
                    const DpdConfig& cfg = DpdConfig{});

/// Natural log of overlap_mass; Poisson pairs are summed in log space so the
/// value stays finite after the mass itself underflows.
double log_overlap_mass(const UnivariateDensity& f, const UnivariateDensity& g,
                        const DpdConfig& cfg = DpdConfig{});

}  // namespace dpd
