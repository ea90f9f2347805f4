#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace dpd {

using Objective = std::function<double(const Eigen::VectorXd&)>;
using GradientFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct OptimizerConfig {
  int n_starts = 10;
  int max_iters = 5000;
  double x_tol = 1e-8;
  double f_tol = 1e-10;
  /// Estimating-equation residual allowed per observation.
  double stationarity_tol = 1e-5;
  /// Spread of random starts around the deterministic ones.
  double start_dispersion = 0.5;
  std::uint64_t seed = 0;
  /// Additional deterministic starts in natural coordinates.
  std::vector<Eigen::VectorXd> extra_starts;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Downhill simplex; stops when the spread of simplex values is below
/// f_tol * max(1, |f|) and the simplex diameter is below sqrt(f_tol).
NelderMeadResult nelder_mead(const Objective& f, const Eigen::VectorXd& x0, double f_tol,
                             int max_iters, double initial_step = 0.1);

struct PolishResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
};

/// Damped Newton refinement with a finite-difference Hessian. Uses `grad`
/// when provided, central differences of f otherwise. Never increases f.
PolishResult newton_polish(const Objective& f, const GradientFn& grad, Eigen::VectorXd x, double x_tol,
                           int max_iters = 60);

Eigen::VectorXd numeric_gradient(const Objective& f, const Eigen::VectorXd& x);

struct MultiStartResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  int starts_used = 0;
  int best_start = -1;
  bool simplex_converged = false;
};

/// Run simplex + polish from every start and keep the lowest value. Values
/// within f_tol of the best are tied; ties go to the start closest to
/// starts[0], then to the lower start index.
MultiStartResult minimize_multistart(const Objective& f, const GradientFn& grad,
                                     const std::vector<Eigen::VectorXd>& starts, const OptimizerConfig& cfg);

/// Random starts: each deterministic anchor perturbed by Gaussian noise of
/// scale dispersion * max(1, |z_j|). Deterministic in `seed`.
std::vector<Eigen::VectorXd> dispersed_starts(const std::vector<Eigen::VectorXd>& anchors, int count,
                                              double dispersion, std::uint64_t seed);

}  // namespace dpd
