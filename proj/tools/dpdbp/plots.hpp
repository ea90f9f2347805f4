#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"

namespace dpdbp {

namespace fs = std::filesystem;

/// Every plot is rebuilt from a CSV written by a command, so re-running a
/// plot function on the same file reproduces the same SVG.

/// One SVG per coordinate: value vs eps, one curve per alpha.
std::vector<fs::path> plot_sweep(const fs::path& csv, const fs::path& out_dir, const PlotSpec& spec,
                                 const std::vector<std::string>& coord_names);
/// One SVG per coordinate: median vs eps with an interquartile band per alpha.
std::vector<fs::path> plot_simulation(const fs::path& csv, const fs::path& out_dir, const PlotSpec& spec,
                                      const std::vector<std::string>& coord_names);
/// Bound vs alpha, one curve per labelled CSV.
fs::path plot_bounds(const std::vector<std::pair<std::string, fs::path>>& csvs, const fs::path& out);
/// Heatmap of the bound over (alpha, L0) with an optional level curve.
fs::path plot_bound_grid(const fs::path& grid_csv, const fs::path* level_csv, const fs::path& out);
/// Bound vs alpha, one curve per L0 value of the grid.
fs::path plot_bound_grid_curves(const fs::path& grid_csv, const fs::path& out);
/// Overlap masses vs schedule index on a log axis.
fs::path plot_assumptions(const fs::path& csv, const fs::path& out);

}  // namespace dpdbp
