#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dpd/functional.hpp"

namespace dpd {

struct BoundProblem {
  double C = 1.0;
  double L0 = 0.1;
  double alpha = 0.5;

  void validate() const;
};

/// h(x) = (C / alpha) x^(1 + alpha) + q_alpha(1 - x) L0, increasing on (0, 1).
double bound_equation(const BoundProblem& prob, double x);

struct BoundSolution {
  double root = 0.0;
  double bound = 0.0;  // min(root, 1/2)
  double residual = 0.0;
  int iterations = 0;
};

BoundSolution solve_bound(const BoundProblem& prob);
double abp_lower_bound(const BoundProblem& prob);

/// L0 at which the root of h equals `level` (requires level < 1/(1 + alpha)).
double implicit_L0(double C, double alpha, double level);

struct L0Estimate {
  double value = 0.0;
  double standard_error = 0.0;
};

/// n^{-1} sum_i M_{g_i} at theta0; Poisson uses Monte-Carlo unless mc.exact.
L0Estimate compute_L0(const ModelFamily& model, const ParameterVector& theta0, double alpha,
                      const MonteCarloConfig& mc = {});

/// compute_L0 for several alphas from one set of draws per row.
std::vector<L0Estimate> compute_L0_grid(const ModelFamily& model, const ParameterVector& theta0,
                                        const std::vector<double>& alphas, const MonteCarloConfig& mc = {});

struct BoundRow {
  double alpha = 0.0;
  double L0 = 0.0;
  double bound = 0.0;
};

/// compute_L0 followed by abp_lower_bound for each alpha.
std::vector<BoundRow> poisson_bound_sweep(const ModelFamily& model, const ParameterVector& theta0,
                                          const std::vector<double>& alpha_grid, const MonteCarloConfig& mc,
                                          double C = 1.0);
/// Bounds over a user (alpha, L0) grid.
std::vector<BoundRow> bound_grid(const std::vector<double>& alpha_grid, const std::vector<double>& L0_grid,
                                 double C);
/// Level set {bound = level} as (alpha, L0) pairs; alphas where no L0 exists are skipped.
std::vector<BoundRow> implicit_curve(const std::vector<double>& alpha_grid, double C, double level);

struct SweepCell {
  double alpha = 0.0;
  double eps = 0.0;
  Vector theta;
  double objective = 0.0;
  bool converged = false;
  std::string status;  // empty on success, error text otherwise
};

/// Functional (or estimator) values over an alpha x eps grid, alpha-major.
struct SweepTable {
  std::vector<double> alpha_grid;
  std::vector<double> eps_grid;
  std::vector<SweepCell> cells;

  void validate() const;
  const SweepCell& at(std::size_t a, std::size_t e) const { return cells.at(a * eps_grid.size() + e); }
  std::vector<Vector> curve(std::size_t a) const;
};

/// mdpdf on every cell; rows (alphas) run in parallel, each row warm-starts
/// from its previous eps. Cell failures are recorded in `status`.
SweepTable mdpdf_sweep(const ModelFamily& model, const ParameterVector& theta0, const ContaminationScheme& cont,
                       const std::vector<double>& alpha_grid, const std::vector<double>& eps_grid,
                       const OptimizerConfig& opt, const MonteCarloConfig& mc, int threads = 1);

struct BreakdownOptions {
  /// A point also counts as broken when its normalised distance from theta0
  /// exceeds escape_radius times the theta0-to-contaminant distance.
  double escape_radius = 1.0;
  /// Largest grid eps inspected.
  double eps_max = 0.5;
};

struct BreakdownResult {
  std::optional<double> eps;      // sustained breakdown point
  bool ambiguous = false;         // an earlier flip was later undone
  std::vector<double> candidates; // first flip, then sustained point
  std::vector<bool> broken;       // per inspected grid point
};

/// Per-coordinate-normalised basin assignment along a curve.
bool in_contaminant_basin(const Vector& theta, const Vector& theta0, const Vector& theta_c,
                          double escape_radius = 1.0);

BreakdownResult empirical_breakdown_point(const std::vector<double>& eps_grid, const std::vector<Vector>& curve,
                                          const Vector& theta0, const Vector& theta_c,
                                          const BreakdownOptions& opts = {});

struct AssumptionRow {
  int m = 0;
  double eta = 0.0;
  double overlap_model_contaminant = 0.0;  // integral of min{f, k_m}
  double log_overlap_model_contaminant = 0.0;
  double overlap_true_model = 0.0;         // integral of min{g, f_m}
  double log_overlap_true_model = 0.0;
  double contaminant_power_norm = 0.0;     // M_{k_m}
};

struct AssumptionReport {
  std::vector<AssumptionRow> rows;
  double sup_contaminant_power_norm = 0.0;
  double C = 0.0;
  bool decreasing = false;
};

/// Overlap masses along a schedule: contaminants k_m = family(eta_m) against
/// the model density f, and diverging model densities f_m = family(eta_m)
/// against the true density g.
AssumptionReport check_assumptions(const UnivariateDensity& f, const UnivariateDensity& g,
                                   const std::function<UnivariateDensity(double)>& family,
                                   const std::vector<double>& etas, double alpha);

}  // namespace dpd
