#include "commands.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <iostream>
#include <thread>

#include "dpd/csv.hpp"
#include "dpd/errors.hpp"
#include "dpd/random.hpp"
#include "plots.hpp"

namespace dpdbp {

namespace fs = std::filesystem;
using dpd::ConfigError;
using dpd::CsvWriter;
using dpd::format_number;

namespace {

void apply_seed(ExperimentConfig& cfg, const RunOptions& opts) {
  if (!opts.seed) return;
  cfg.opt.seed = *opts.seed;
  cfg.mc.seed = *opts.seed;
  cfg.base_seed = *opts.seed;
}

fs::path prepare_out(const ExperimentConfig& cfg, const RunOptions& opts) {
  fs::path dir = opts.out_dir.empty() ? fs::path("out") / cfg.name : opts.out_dir;
  fs::create_directories(dir);
  return dir;
}

dpd::ParameterVector require_theta0(const ExperimentConfig& cfg, const dpd::ModelFamily& model) {
  if (!cfg.theta0) throw ConfigError("theta0", "missing true parameter");
  try {
    return model.parameter(*cfg.theta0);
  } catch (const dpd::InvalidParameter& e) {
    throw ConfigError("theta0", e.what());
  }
}

void require_grid(const std::vector<double>& g, const char* key) {
  if (g.empty()) throw ConfigError(key, "missing grid");
}

std::vector<std::string> theta_header(Eigen::Index d) {
  std::vector<std::string> h;
  for (Eigen::Index j = 0; j < d; ++j) h.push_back("theta_" + std::to_string(j + 1));
  return h;
}

std::string clean_status(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return s.empty() ? "ok" : s;
}

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : "nan"; }

}  // namespace

std::vector<std::string> coordinate_names(const ExperimentConfig& cfg) {
  if (!cfg.plot.coord_names.empty()) return cfg.plot.coord_names;
  if (cfg.family == "normal" && cfg.mean == "linear") return {"beta_0", "beta_1", "sigma"};
  if (cfg.family == "normal" && cfg.mean == "michaelis-menten") return {"beta_1", "beta_2", "sigma"};
  return {};
}

void cmd_fit(ExperimentConfig cfg, const RunOptions& opts, std::ostream& log) {
  apply_seed(cfg, opts);
  const auto data = build_design(cfg);
  if (!data.y) throw ConfigError("model.response", "fit needs responses (a `y` column or model.response.path)");
  const auto model = build_model(cfg, data.design);
  if (!cfg.alpha) throw ConfigError("alpha", "missing tuning parameter");
  try {
    model.check_response(*data.y);
  } catch (const dpd::InvalidParameter& e) {
    throw ConfigError(cfg.response_path ? "model.response.path" : "model.design.path", e.what());
  }
  std::optional<dpd::ParameterVector> init;
  if (cfg.theta0) init = require_theta0(cfg, model);
  const auto fit = dpd::mdpde_fit(model, *data.y, *cfg.alpha, cfg.opt, init);
  const fs::path dir = prepare_out(cfg, opts);
  CsvWriter w((dir / "fit.csv").string(), {"name", "value"});
  w.row(std::vector<std::string>{"alpha", format_number(*cfg.alpha)});
  for (Eigen::Index j = 0; j < fit.theta_hat.size(); ++j)
    w.row(std::vector<std::string>{"theta_" + std::to_string(j + 1), format_number(fit.theta_hat[j])});
  w.row(std::vector<std::string>{"objective", format_number(fit.objective)});
  w.row(std::vector<std::string>{"ee_residual_norm", format_number(fit.ee_residual_norm)});
  w.row(std::vector<std::string>{"converged", fit.converged ? "1" : "0"});
  w.row(std::vector<std::string>{"n_restarts_used", std::to_string(fit.n_restarts_used)});
  w.row(std::vector<std::string>{"iterations", std::to_string(fit.iterations)});
  w.close();
  log << "fit: objective " << format_number(fit.objective) << (fit.converged ? "" : " (not converged)") << "\n";
  if (!std::isfinite(fit.objective)) throw dpd::NumericalFailure("no start produced a finite objective");
}

void cmd_mdpdf_sweep(ExperimentConfig cfg, const RunOptions& opts, std::ostream& log) {
  apply_seed(cfg, opts);
  const auto data = build_design(cfg);
  const auto model = build_model(cfg, data.design);
  const auto theta0 = require_theta0(cfg, model);
  const auto cont = build_contamination(cfg, model);
  require_grid(cfg.alpha_grid, "alpha_grid");
  require_grid(cfg.eps_grid, "eps_grid");
  const fs::path dir = prepare_out(cfg, opts);
  dpd::write_design_csv((dir / "design.csv").string(), data.design, std::nullopt);

  const auto table = dpd::mdpdf_sweep(model, theta0, cont, cfg.alpha_grid, cfg.eps_grid, cfg.opt, cfg.mc, opts.threads);
  auto header = std::vector<std::string>{"alpha", "eps"};
  for (auto& h : theta_header(model.dim())) header.push_back(h);
  header.push_back("objective");
  header.push_back("status");
  {
    CsvWriter w((dir / "sweep.csv").string(), header);
    for (const auto& c : table.cells) {
      std::vector<std::string> row{format_number(c.alpha), format_number(c.eps)};
      for (Eigen::Index j = 0; j < model.dim(); ++j) row.push_back(format_number(c.theta[j]));
      row.push_back(format_number(c.objective));
      row.push_back(clean_status(c.status));
      w.row(row);
    }
  }
  if (cont.source_theta()) {
    CsvWriter w((dir / "breakdown.csv").string(), {"alpha", "breakdown_eps", "ambiguous", "first_flip"});
    for (std::size_t a = 0; a < table.alpha_grid.size(); ++a) {
      const auto bp = dpd::empirical_breakdown_point(table.eps_grid, table.curve(a), theta0.values(),
                                                     *cont.source_theta(), cfg.breakdown);
      w.row(std::vector<std::string>{format_number(table.alpha_grid[a]), opt_number(bp.eps), bp.ambiguous ? "1" : "0",
                                     bp.candidates.empty() ? "nan" : format_number(bp.candidates.front())});
      log << "alpha " << format_number(table.alpha_grid[a]) << ": breakdown " << opt_number(bp.eps)
          << (bp.ambiguous ? " (ambiguous)" : "") << "\n";
    }
  }
  plot_sweep(dir / "sweep.csv", dir, cfg.plot, coordinate_names(cfg));
  std::size_t failed = 0;
  for (const auto& c : table.cells) failed += c.status.rfind("error", 0) == 0;
  if (failed == table.cells.size()) throw dpd::NumericalFailure("every sweep cell failed");
}

void cmd_abp_bound(ExperimentConfig cfg, const RunOptions& opts, std::ostream& log) {
  apply_seed(cfg, opts);
  require_grid(cfg.alpha_grid, "alpha_grid");
  for (std::size_t k = 0; k < cfg.alpha_grid.size(); ++k)
    if (!(cfg.alpha_grid[k] > 0.0)) throw ConfigError("alpha_grid[" + std::to_string(k) + "]", "bounds need alpha > 0");
  const fs::path dir = prepare_out(cfg, opts);
  if (cfg.bound.mode == "L0-grid") {
    const auto rows = dpd::bound_grid(cfg.alpha_grid, cfg.bound.L0_grid, cfg.bound.C);
    {
      CsvWriter w((dir / "bounds_grid.csv").string(), {"alpha", "L0", "bound"});
      for (const auto& r : rows) w.row(std::vector<double>{r.alpha, r.L0, r.bound});
    }
    std::optional<fs::path> level_csv;
    if (cfg.bound.level) {
      level_csv = dir / "implicit_curve.csv";
      CsvWriter w(level_csv->string(), {"alpha", "L0", "bound"});
      for (const auto& r : dpd::implicit_curve(cfg.alpha_grid, cfg.bound.C, *cfg.bound.level))
        w.row(std::vector<double>{r.alpha, r.L0, r.bound});
    }
    plot_bound_grid(dir / "bounds_grid.csv", level_csv ? &*level_csv : nullptr, dir / "bounds_grid.svg");
    plot_bound_grid_curves(dir / "bounds_grid.csv", dir / "bounds_vs_alpha.svg");
    log << "bound grid: " << rows.size() << " cells\n";
    return;
  }
  std::vector<int> sizes = cfg.bound.sample_sizes;
  if (sizes.empty()) sizes.push_back(0);
  std::vector<std::pair<std::string, fs::path>> files;
  for (int n : sizes) {
    const auto data = build_design(cfg, n > 0 ? std::optional<int>(n) : std::nullopt);
    const auto model = build_model(cfg, data.design);
    const auto theta0 = require_theta0(cfg, model);
    const std::string tag = "n" + std::to_string(model.n());
    dpd::write_design_csv((dir / ("design_" + tag + ".csv")).string(), data.design, std::nullopt);
    const fs::path f = dir / ("bounds_" + tag + ".csv");
    CsvWriter w(f.string(), {"alpha", "L0", "bound"});
    const auto l0 = dpd::compute_L0_grid(model, theta0, cfg.alpha_grid, cfg.mc);
    for (std::size_t k = 0; k < l0.size(); ++k) {
      const double a = cfg.alpha_grid[k];
      w.row(std::vector<double>{a, l0[k].value, dpd::abp_lower_bound({cfg.bound.C, l0[k].value, a})});
    }
    w.close();
    files.push_back({"n = " + std::to_string(model.n()), f});
    log << "bounds for n = " << model.n() << " written\n";
  }
  plot_bounds(files, dir / "bounds.svg");
}

void cmd_simulate(ExperimentConfig cfg, const RunOptions& opts, std::ostream& log) {
  apply_seed(cfg, opts);
  const auto data = build_design(cfg);
  const auto model = build_model(cfg, data.design);
  const auto theta0 = require_theta0(cfg, model);
  const auto cont = build_contamination(cfg, model);
  require_grid(cfg.alpha_grid, "alpha_grid");
  require_grid(cfg.eps_grid, "eps_grid");
  for (std::size_t k = 0; k < cfg.alpha_grid.size(); ++k)
    if (cfg.alpha_grid[k] > 1.0) throw ConfigError("alpha_grid[" + std::to_string(k) + "]", "must be <= 1");
  const fs::path dir = prepare_out(cfg, opts);
  dpd::write_design_csv((dir / "design.csv").string(), data.design, std::nullopt);

  dpd::SimulationPlan plan{model, theta0, cont, cfg.alpha_grid, cfg.eps_grid, cfg.n_reps, cfg.base_seed, cfg.opt,
                           cfg.fixed_count, opts.threads, false};
  const auto start = std::chrono::steady_clock::now();
  std::size_t last = 0;
  const auto summary = dpd::run_simulation(plan, [&](std::size_t done, std::size_t total) {
    const std::size_t pct = 10 * done / total;
    if (pct != last) {
      last = pct;
      const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      log << "simulate: " << done << "/" << total << " datasets (" << static_cast<int>(sec) << " s)\n";
    }
  });
  {
    CsvWriter w((dir / "simulation.csv").string(), {"alpha", "eps", "coord", "median", "q25", "q75", "conv_rate"});
    for (const auto& c : summary.cells)
      for (Eigen::Index j = 0; j < model.dim(); ++j)
        w.row(std::vector<double>{c.alpha, c.eps, static_cast<double>(j + 1), c.median[j], c.q25[j], c.q75[j],
                                  c.conv_rate});
  }
  if (cont.source_theta()) {
    CsvWriter w((dir / "simulation_breakdown.csv").string(), {"alpha", "breakdown_eps", "ambiguous", "first_flip"});
    for (std::size_t a = 0; a < summary.alpha_grid.size(); ++a) {
      const auto bp = dpd::empirical_breakdown_point(summary.eps_grid, summary.median_curve(a), theta0.values(),
                                                     *cont.source_theta(), cfg.breakdown);
      w.row(std::vector<std::string>{format_number(summary.alpha_grid[a]), opt_number(bp.eps), bp.ambiguous ? "1" : "0",
                                     bp.candidates.empty() ? "nan" : format_number(bp.candidates.front())});
      log << "alpha " << format_number(summary.alpha_grid[a]) << ": median-curve breakdown " << opt_number(bp.eps)
          << (bp.ambiguous ? " (ambiguous)" : "") << "\n";
    }
  }
  for (const auto& c : summary.cells)
    if (c.flagged)
      log << "warning: alpha " << format_number(c.alpha) << ", eps " << format_number(c.eps) << ": only "
          << c.n_converged << " of " << cfg.n_reps << " fits converged\n";
  plot_simulation(dir / "simulation.csv", dir, cfg.plot, coordinate_names(cfg));
}

void cmd_check_assumptions(ExperimentConfig cfg, const RunOptions& opts, std::ostream& log) {
  const auto& a = cfg.assumptions;
  if (a.family.empty()) throw ConfigError("assumptions", "missing assumptions section");
  std::function<dpd::UnivariateDensity(double)> family;
  if (a.family == "exponential") family = [](double m) { return dpd::UnivariateDensity::exponential(m); };
  else if (a.family == "poisson") family = [](double m) { return dpd::UnivariateDensity::poisson(m); };
  else family = [](double m) { return dpd::UnivariateDensity::normal(m, 1.0); };
  std::vector<double> etas;
  for (int m = 1; m <= a.m_max; ++m) etas.push_back(std::pow(a.schedule_base, m));
  dpd::AssumptionReport rep;
  try {
    rep = dpd::check_assumptions(family(a.model_mean), family(a.true_mean), family, etas, a.alpha);
  } catch (const dpd::InvalidParameter& e) {
    throw ConfigError("assumptions", e.what());
  }
  const fs::path dir = prepare_out(cfg, opts);
  {
    CsvWriter w((dir / "assumptions.csv").string(),
                {"m", "eta", "overlap_model_contaminant", "overlap_true_model", "log_overlap_model_contaminant",
                 "log_overlap_true_model", "M_k"});
    for (const auto& r : rep.rows)
      w.row(std::vector<double>{static_cast<double>(r.m), r.eta, r.overlap_model_contaminant, r.overlap_true_model,
                                r.log_overlap_model_contaminant, r.log_overlap_true_model,
                                r.contaminant_power_norm});
  }
  {
    CsvWriter w((dir / "assumptions_summary.csv").string(), {"name", "value"});
    w.row(std::vector<std::string>{"sup_M_k", format_number(rep.sup_contaminant_power_norm)});
    w.row(std::vector<std::string>{"C", format_number(rep.C)});
    w.row(std::vector<std::string>{"decreasing", rep.decreasing ? "1" : "0"});
  }
  plot_assumptions(dir / "assumptions.csv", dir / "assumptions.svg");
  log << "overlap at m = " << a.m_max << ": " << format_number(rep.rows.back().overlap_model_contaminant)
      << ", C = " << format_number(rep.C) << "\n";
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Density power divergence breakdown experiments"};
  app.require_subcommand(1);
  std::string config;
  RunOptions opts;
  std::uint64_t seed = 0;
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  opts.threads = static_cast<int>(hw);

  struct Entry {
    const char* name;
    const char* help;
    void (*fn)(ExperimentConfig, const RunOptions&, std::ostream&);
  };
  const Entry entries[] = {
      {"fit", "Fit the MDPDE to a dataset", cmd_fit},
      {"mdpdf-sweep", "Minimum DPD functional over an (alpha, eps) grid", cmd_mdpdf_sweep},
      {"abp-bound", "Lower bounds of the asymptotic breakdown point", cmd_abp_bound},
      {"simulate", "Replicated contaminated-sample experiment", cmd_simulate},
      {"check-assumptions", "Overlap masses along a divergence schedule", cmd_check_assumptions},
  };
  std::vector<CLI::App*> subs;
  for (const auto& e : entries) {
    auto* s = app.add_subcommand(e.name, e.help);
    s->add_option("--config", config, "Experiment configuration (JSON)")->required();
    s->add_option("--out", opts.out_dir, "Output directory (default out/<name>)");
    s->add_option("--threads", opts.threads, "Worker threads")->check(CLI::PositiveNumber);
    s->add_option("--seed", seed, "Override every random seed in the configuration");
    subs.push_back(s);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }
  for (std::size_t k = 0; k < subs.size(); ++k) {
    if (!subs[k]->parsed()) continue;
    if (subs[k]->count("--seed") > 0) opts.seed = seed;
    try {
      ExperimentConfig cfg = load_config(config);
      if (!cfg.command.empty() && cfg.command != entries[k].name)
        throw ConfigError("command", "configuration is for `" + cfg.command + "`, not `" + entries[k].name + "`");
      entries[k].fn(std::move(cfg), opts, out);
      return kOk;
    } catch (const ConfigError& e) {
      err << "config error: " << e.what() << "\n";
      return kConfigError;
    } catch (const dpd::InvalidParameter& e) {
      err << "config error: " << e.what() << "\n";
      return kConfigError;
    } catch (const dpd::DomainError& e) {
      err << "config error: " << e.what() << "\n";
      return kConfigError;
    } catch (const dpd::NumericalFailure& e) {
      err << "numerical failure: " << e.what() << "\n";
      return kNumericalFailure;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kNumericalFailure;
    }
  }
  return kUsage;
}

}  // namespace dpdbp
