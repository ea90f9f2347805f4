#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dpd/breakdown.hpp"
#include "dpd/simulation.hpp"

namespace dpdbp {

using dpd::Vector;

struct ColumnSpec {
  std::string dist;  // normal | uniform | linspace | constant
  double a = 0.0, b = 1.0;
};

struct DesignSpec {
  std::optional<std::filesystem::path> path;
  int n = 0;
  std::uint64_t seed = 0;
  std::vector<ColumnSpec> columns;
};

struct ContaminationSpec {
  std::string rule;  // model | affine-mean
  Vector coef;
  std::optional<double> sd;
};

struct BoundSpec {
  std::string mode = "model";  // model | L0-grid
  double C = 1.0;
  std::vector<int> sample_sizes;
  std::vector<double> L0_grid;
  std::optional<double> level;
};

struct AssumptionSpec {
  std::string family;
  double model_mean = 1.0;
  double true_mean = 1.0;
  double schedule_base = 10.0;
  int m_max = 6;
  double alpha = 0.5;
};

struct PlotSpec {
  std::map<int, std::pair<double, double>> y_limits;  // coordinate (1-based) -> limits
  std::vector<std::string> coord_names;
};

/// Parsed experiment file. Paths inside the file are resolved against its
/// directory. Every error names the offending key path.
struct ExperimentConfig {
  std::string command;
  std::string name;
  std::filesystem::path base_dir;

  std::string family;
  std::string mean;
  DesignSpec design;
  std::optional<std::filesystem::path> response_path;
  std::optional<Vector> theta0;
  std::optional<ContaminationSpec> contamination;
  std::vector<double> alpha_grid;
  std::vector<double> eps_grid;
  std::optional<double> alpha;

  dpd::OptimizerConfig opt;
  dpd::MonteCarloConfig mc;
  int n_reps = 100;
  std::uint64_t base_seed = 0;
  bool fixed_count = false;
  dpd::BreakdownOptions breakdown;
  BoundSpec bound;
  AssumptionSpec assumptions;
  PlotSpec plot;
};

ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);

/// Design matrix and optional responses; `n_override` replaces the generator size.
dpd::DesignData build_design(const ExperimentConfig& cfg, std::optional<int> n_override = std::nullopt);
dpd::ModelFamily build_model(const ExperimentConfig& cfg, const dpd::DesignMatrix& design);
dpd::ContaminationScheme build_contamination(const ExperimentConfig& cfg, const dpd::ModelFamily& model);

}  // namespace dpdbp
