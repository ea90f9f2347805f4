#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dpd/models.hpp"
#include "dpd/optimize.hpp"

namespace dpd {

struct MonteCarloConfig {
  std::size_t n_draws = 20000;
  std::uint64_t seed = 0;
  /// Replace Monte-Carlo inner sums by exact truncated sums.
  bool exact = false;

  void validate() const;
};

/// Mixture (1 - eps) g_i + eps k_i with one contaminating density per row.
class ContaminationScheme {
 public:
  ContaminationScheme() = default;
  ContaminationScheme(double eps, std::vector<UnivariateDensity> contaminants,
                      std::optional<Vector> source_theta = std::nullopt);

  /// Contaminants taken from the model family at parameter theta_c.
  static ContaminationScheme from_model(const ModelFamily& model, const Vector& theta_c, double eps);
  /// Contaminants of the model's density type whose mean is affine in the
  /// covariates: c0 + c1 x_1 + ... + cp x_p. `sd` is required for Normal.
  /// The reference parameter is their Kullback-Leibler projection onto the family.
  static ContaminationScheme affine_mean(const ModelFamily& model, const Vector& coef, double eps,
                                         std::optional<double> sd = std::nullopt);

  ContaminationScheme with_eps(double eps) const;

  double eps() const { return eps_; }
  const std::vector<UnivariateDensity>& contaminants() const { return contaminants_; }
  /// Parameter generating the contaminants, or their projection onto the family.
  const std::optional<Vector>& source_theta() const { return source_theta_; }

  void validate(const ModelFamily& model) const;

 private:
  double eps_ = 0.0;
  std::vector<UnivariateDensity> contaminants_;
  std::optional<Vector> source_theta_;
};

/// H*_{n,alpha}(theta) at the contaminated true distributions. Poisson cross
/// terms use fixed per-row draws (common random numbers) unless mc.exact.
class PopulationObjective {
 public:
  PopulationObjective(const ModelFamily& model, const ParameterVector& theta0, const ContaminationScheme& cont,
                      double alpha, const MonteCarloConfig& mc = {}, const DpdConfig& tol = {});

  /// Evaluate at a valid theta (not re-validated).
  double operator()(const Vector& theta) const;
  double value(const ParameterVector& theta) const;
  /// Monte-Carlo standard error of the value; 0 for exact evaluation.
  double standard_error(const Vector& theta) const;

  const ModelFamily& model() const { return *model_; }
  double alpha() const { return alpha_; }

 private:
  struct Histogram {
    std::vector<double> y;
    std::vector<double> log_fact;
    std::vector<double> weight;  // count / n_draws
  };

  double cross_term(Eigen::Index i, const UnivariateDensity& f, double* var) const;

  const ModelFamily* model_;
  std::vector<UnivariateDensity> g_;
  std::vector<UnivariateDensity> k_;
  double eps_;
  double alpha_;
  DpdConfig tol_;
  bool monte_carlo_ = false;
  std::size_t n_draws_ = 0;
  std::vector<Histogram> g_draws_, k_draws_;
  // Mixture moments for the alpha = 0 branch.
  Vector mix_mean_, mix_second_, mix_log_fact_;
};

/// argmin over theta of the average Kullback-Leibler divergence from the
/// targets to the model rows; none when the likelihood fit fails.
std::optional<Vector> kl_projection(const ModelFamily& model, const std::vector<UnivariateDensity>& targets);

double population_objective(const ModelFamily& model, const ParameterVector& theta0,
                            const ContaminationScheme& cont, const ParameterVector& theta, double alpha,
                            const MonteCarloConfig& mc = {});

struct FunctionalResult {
  ParameterVector theta_star;
  double objective = 0.0;
  double eps = 0.0;
  double alpha = 0.0;
  bool converged = false;
  double gradient_norm = 0.0;
};

/// Minimiser of H* over theta. Starts: theta0, the contaminant's parameter,
/// the alpha = 0 solution, their midpoint, scale-inflated copies (Normal),
/// caller warm starts, then dispersed random starts.
FunctionalResult mdpdf(const ModelFamily& model, const ParameterVector& theta0, const ContaminationScheme& cont,
                       double alpha, const OptimizerConfig& opt, const MonteCarloConfig& mc = {},
                       const std::vector<Vector>& warm_starts = {});

}  // namespace dpd
