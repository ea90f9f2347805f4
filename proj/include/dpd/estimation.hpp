#pragma once

#include <optional>

#include "dpd/models.hpp"
#include "dpd/optimize.hpp"

namespace dpd {

struct FitResult {
  ParameterVector theta_hat;
  double objective = 0.0;
  double ee_residual_norm = 0.0;
  bool converged = false;
  int n_restarts_used = 0;
  int iterations = 0;
};

/// H_{n,alpha}(theta); at alpha = 0 the likelihood form 1 - mean log f.
double empirical_objective(const ModelFamily& model, const Vector& y, const ParameterVector& theta,
                           double alpha);

/// Sum_i [u_i(y_i) f_i^alpha(y_i) - integral u_i f_i^(1+alpha)]; at alpha = 0
/// the likelihood score sum. The gradient of the objective equals
/// -(1 + alpha) / n times this vector.
Vector estimating_equation(const ModelFamily& model, const Vector& y, const ParameterVector& theta,
                           double alpha);

/// Integral of u_i f_i^(1+alpha) for one observation.
Vector score_power_integral(const ModelFamily& model, Eigen::Index i, const Vector& theta, double alpha,
                            double sum_tail_tol = 1e-14);

/// Likelihood fit: least squares for linear/affine means, Gauss-Newton for
/// Michaelis-Menten, Newton iterations for the log-link families.
std::optional<ParameterVector> likelihood_fit(const ModelFamily& model, const Vector& y,
                                              const std::optional<Vector>& start = std::nullopt);

/// Least-median-of-squares fit over elemental subsets (linearised for the
/// log-link families). Deterministic in `seed` when subsets are sampled.
std::optional<ParameterVector> robust_start(const ModelFamily& model, const Vector& y, std::uint64_t seed);

FitResult mdpde_fit(const ModelFamily& model, const Vector& y, double alpha, const OptimizerConfig& opt,
                    const std::optional<ParameterVector>& init = std::nullopt);

}  // namespace dpd
