#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dpd/estimation.hpp"
#include "dpd/functional.hpp"

namespace dpd {

struct SimulationPlan {
  ModelFamily model;
  ParameterVector theta0;
  /// Contaminating densities; the eps stored here is ignored.
  ContaminationScheme contamination;
  std::vector<double> alpha_grid;
  std::vector<double> eps_grid;
  int n_reps = 100;
  std::uint64_t base_seed = 0;
  OptimizerConfig opt;
  /// Contaminate exactly floor(eps * n) rows instead of Bernoulli flags.
  bool fixed_count = false;
  int threads = 1;
  /// Keep every replicate estimate in the summary.
  bool keep_estimates = false;

  void validate() const;
};

struct CellSummary {
  double alpha = 0.0;
  double eps = 0.0;
  Vector median, q25, q75;
  double conv_rate = 0.0;
  int n_converged = 0;
  bool flagged = false;  // fewer than half the replicates converged
  std::vector<Vector> estimates;
};

struct ReplicateSummary {
  std::vector<double> alpha_grid;
  std::vector<double> eps_grid;
  std::vector<CellSummary> cells;  // alpha-major

  const CellSummary& at(std::size_t a, std::size_t e) const { return cells.at(a * eps_grid.size() + e); }
  std::vector<Vector> median_curve(std::size_t a) const;
};

/// Per row: y from g_i on the main stream; with probability eps (flags on
/// their own stream) it is replaced by a draw from k_i on a third stream, so
/// eps = 0 reproduces `sample` with the same seed. `flags` receives the
/// per-row contamination indicators when given.
Vector sample_contaminated(const ModelFamily& model, const ParameterVector& theta0, const ContaminationScheme& cont,
                           double eps, std::uint64_t seed, bool fixed_count = false,
                           std::vector<bool>* flags = nullptr);

/// Seed of the dataset used for grid eps index e and replicate r; shared by
/// every alpha so estimators are compared on the same data.
std::uint64_t replicate_seed(std::uint64_t base_seed, std::size_t e, std::size_t r);

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

ReplicateSummary run_simulation(const SimulationPlan& plan, const ProgressFn& progress = {});

}  // namespace dpd
