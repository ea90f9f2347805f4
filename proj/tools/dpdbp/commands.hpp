#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace dpdbp {

enum ExitCode : int { kOk = 0, kUsage = 1, kConfigError = 2, kNumericalFailure = 3 };

struct RunOptions {
  std::filesystem::path out_dir;
  int threads = 1;
  std::optional<std::uint64_t> seed;
};

/// Names of the estimated coordinates for plot labels.
std::vector<std::string> coordinate_names(const ExperimentConfig& cfg);

void cmd_fit(ExperimentConfig cfg, const RunOptions& opts, std::ostream& log);
void cmd_mdpdf_sweep(ExperimentConfig cfg, const RunOptions& opts, std::ostream& log);
void cmd_abp_bound(ExperimentConfig cfg, const RunOptions& opts, std::ostream& log);
void cmd_simulate(ExperimentConfig cfg, const RunOptions& opts, std::ostream& log);
void cmd_check_assumptions(ExperimentConfig cfg, const RunOptions& opts, std::ostream& log);

/// Parse argv, dispatch, and map failures to exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dpdbp
