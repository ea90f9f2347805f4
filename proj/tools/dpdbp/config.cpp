#include "config.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "dpd/csv.hpp"
#include "dpd/errors.hpp"
#include "dpd/random.hpp"

namespace dpdbp {

using dpd::ConfigError;
using json = nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

const json* find(const json& j, const std::string& key) {
  if (!j.is_object()) return nullptr;
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  return v.get<double>();
}

double number(const json& j, const std::string& path, const std::string& key, std::optional<double> fallback = {}) {
  const json* v = find(j, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(join(path, key), "missing required number");
  }
  return as_number(*v, join(path, key));
}

std::uint64_t seed_value(const json& j, const std::string& path, const std::string& key, std::uint64_t fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_number_integer() || v->get<long long>() < 0)
    throw ConfigError(join(path, key), "expected a non-negative integer seed");
  return v->get<std::uint64_t>();
}

int integer(const json& j, const std::string& path, const std::string& key, std::optional<int> fallback = {}) {
  const json* v = find(j, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(join(path, key), "missing required integer");
  }
  if (!v->is_number_integer()) throw ConfigError(join(path, key), "expected an integer");
  return v->get<int>();
}

std::string text(const json& j, const std::string& path, const std::string& key,
                  std::optional<std::string> fallback = {}) {
  const json* v = find(j, key);
  if (!v) {
    if (fallback) return *fallback;
    throw ConfigError(join(path, key), "missing required string");
  }
  if (!v->is_string()) throw ConfigError(join(path, key), "expected a string");
  return v->get<std::string>();
}

bool flag(const json& j, const std::string& path, const std::string& key, bool fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_boolean()) throw ConfigError(join(path, key), "expected true or false");
  return v->get<bool>();
}

Vector vector_value(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ConfigError(path, "expected a non-empty array of numbers");
  Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t k = 0; k < v.size(); ++k)
    out[static_cast<Eigen::Index>(k)] = as_number(v[k], path + "[" + std::to_string(k) + "]");
  return out;
}

// Either an explicit array or {"from", "to", "step"}.
std::vector<double> grid_value(const json& v, const std::string& path) {
  std::vector<double> g;
  if (v.is_array()) {
    const Vector x = vector_value(v, path);
    g.assign(x.begin(), x.end());
  } else if (v.is_object()) {
    const double from = number(v, path, "from"), to = number(v, path, "to"), step = number(v, path, "step");
    if (!(step > 0.0)) throw ConfigError(path + ".step", "must be > 0");
    if (!(to >= from)) throw ConfigError(path + ".to", "must be >= from");
    const auto count = static_cast<long>(std::floor((to - from) / step + 1e-9));
    for (long k = 0; k <= count; ++k) g.push_back(std::round((from + static_cast<double>(k) * step) * 1e12) / 1e12);
  } else {
    throw ConfigError(path, "expected an array or {from, to, step}");
  }
  for (std::size_t k = 1; k < g.size(); ++k)
    if (!(g[k] > g[k - 1])) throw ConfigError(path, "grid must be strictly increasing");
  return g;
}

}  // namespace

ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("", "configuration must be a JSON object");
  ExperimentConfig c;
  c.base_dir = base_dir;
  c.command = text(j, "", "command", std::string());
  c.name = text(j, "", "name", std::string("experiment"));

  if (const json* m = find(j, "model")) {
    c.family = text(*m, "model", "family");
    if (c.family != "normal" && c.family != "poisson" && c.family != "exponential")
      throw ConfigError("model.family", "expected normal, poisson or exponential");
    c.mean = text(*m, "model", "mean", std::string(c.family == "normal" ? "linear" : "affine"));
    if (c.mean != "linear" && c.mean != "affine" && c.mean != "michaelis-menten")
      throw ConfigError("model.mean", "expected linear, affine or michaelis-menten");
    if (c.family != "normal" && c.mean != "affine")
      throw ConfigError("model.mean", "log-link families use the affine predictor");
    const json* d = find(*m, "design");
    if (!d) throw ConfigError("model.design", "missing design section");
    if (const json* p = find(*d, "path")) {
      if (!p->is_string()) throw ConfigError("model.design.path", "expected a string");
      c.design.path = base_dir / p->get<std::string>();
      if (!std::filesystem::exists(*c.design.path))
        throw ConfigError("model.design.path", "file not found: " + c.design.path->string());
    } else if (const json* g = find(*d, "generate")) {
      const std::string gp = "model.design.generate";
      c.design.n = integer(*g, gp, "n");
      if (c.design.n < 1) throw ConfigError(gp + ".n", "must be >= 1");
      c.design.seed = seed_value(*g, gp, "seed", 0);
      const json* cols = find(*g, "columns");
      if (!cols || !cols->is_array() || cols->empty()) throw ConfigError(gp + ".columns", "expected a non-empty array");
      for (std::size_t k = 0; k < cols->size(); ++k) {
        const std::string cp = gp + ".columns[" + std::to_string(k) + "]";
        ColumnSpec col;
        col.dist = text((*cols)[k], cp, "dist");
        if (col.dist == "normal") {
          col.a = number((*cols)[k], cp, "mean");
          col.b = number((*cols)[k], cp, "sd");
          if (!(col.b > 0.0)) throw ConfigError(cp + ".sd", "must be > 0");
        } else if (col.dist == "uniform" || col.dist == "linspace") {
          col.a = number((*cols)[k], cp, "lo");
          col.b = number((*cols)[k], cp, "hi");
        } else if (col.dist == "constant") {
          col.a = number((*cols)[k], cp, "value");
        } else {
          throw ConfigError(cp + ".dist", "expected normal, uniform, linspace or constant");
        }
        c.design.columns.push_back(col);
      }
    } else {
      throw ConfigError("model.design", "expected `path` or `generate`");
    }
    if (const json* r = find(*m, "response")) {
      const std::string p = text(*r, "model.response", "path");
      c.response_path = base_dir / p;
      if (!std::filesystem::exists(*c.response_path))
        throw ConfigError("model.response.path", "file not found: " + c.response_path->string());
    }
  }

  if (const json* t = find(j, "theta0")) c.theta0 = vector_value(*t, "theta0");
  if (const json* k = find(j, "contamination")) {
    ContaminationSpec s;
    s.rule = text(*k, "contamination", "rule", std::string("model"));
    if (s.rule == "model") {
      const json* t = find(*k, "theta");
      if (!t) throw ConfigError("contamination.theta", "missing contaminant parameter");
      s.coef = vector_value(*t, "contamination.theta");
    } else if (s.rule == "affine-mean") {
      const json* t = find(*k, "coef");
      if (!t) throw ConfigError("contamination.coef", "missing affine mean coefficients");
      s.coef = vector_value(*t, "contamination.coef");
      if (find(*k, "sd")) s.sd = number(*k, "contamination", "sd");
    } else {
      throw ConfigError("contamination.rule", "expected model or affine-mean");
    }
    c.contamination = s;
  }
  if (const json* g = find(j, "alpha_grid")) {
    c.alpha_grid = grid_value(*g, "alpha_grid");
    for (std::size_t k = 0; k < c.alpha_grid.size(); ++k)
      if (!(c.alpha_grid[k] >= 0.0)) throw ConfigError("alpha_grid[" + std::to_string(k) + "]", "must be >= 0");
  }
  if (const json* g = find(j, "eps_grid")) {
    c.eps_grid = grid_value(*g, "eps_grid");
    for (std::size_t k = 0; k < c.eps_grid.size(); ++k)
      if (!(c.eps_grid[k] >= 0.0 && c.eps_grid[k] < 1.0))
        throw ConfigError("eps_grid[" + std::to_string(k) + "]", "must lie in [0, 1)");
  }
  if (find(j, "alpha")) {
    c.alpha = number(j, "", "alpha");
    if (!(*c.alpha >= 0.0)) throw ConfigError("alpha", "must be >= 0");
  }

  if (const json* o = find(j, "optimizer")) {
    const std::string p = "optimizer";
    c.opt.n_starts = integer(*o, p, "n_starts", c.opt.n_starts);
    c.opt.max_iters = integer(*o, p, "max_iters", c.opt.max_iters);
    c.opt.x_tol = number(*o, p, "x_tol", c.opt.x_tol);
    c.opt.f_tol = number(*o, p, "f_tol", c.opt.f_tol);
    c.opt.stationarity_tol = number(*o, p, "stationarity_tol", c.opt.stationarity_tol);
    c.opt.start_dispersion = number(*o, p, "start_dispersion", c.opt.start_dispersion);
    c.opt.seed = seed_value(*o, p, "seed", c.opt.seed);
    if (c.opt.n_starts < 0) throw ConfigError(p + ".n_starts", "must be >= 0");
    if (c.opt.max_iters < 1) throw ConfigError(p + ".max_iters", "must be >= 1");
    for (const char* k : {"x_tol", "f_tol", "stationarity_tol", "start_dispersion"})
      if (!(number(*o, p, k, 1.0) > 0.0)) throw ConfigError(p + "." + k, "must be > 0");
  }
  if (const json* m = find(j, "monte_carlo")) {
    const int nd = integer(*m, "monte_carlo", "n_draws", static_cast<int>(c.mc.n_draws));
    if (nd < 1) throw ConfigError("monte_carlo.n_draws", "must be >= 1");
    c.mc.n_draws = static_cast<std::size_t>(nd);
    c.mc.seed = seed_value(*m, "monte_carlo", "seed", c.mc.seed);
    c.mc.exact = flag(*m, "monte_carlo", "exact", false);
  }
  if (const json* s = find(j, "simulation")) {
    c.n_reps = integer(*s, "simulation", "n_reps", c.n_reps);
    if (c.n_reps < 1) throw ConfigError("simulation.n_reps", "must be >= 1");
    c.base_seed = seed_value(*s, "simulation", "base_seed", 0);
    c.fixed_count = flag(*s, "simulation", "fixed_count", false);
  }
  if (const json* b = find(j, "breakdown")) {
    c.breakdown.escape_radius = number(*b, "breakdown", "escape_radius", c.breakdown.escape_radius);
    c.breakdown.eps_max = number(*b, "breakdown", "eps_max", c.breakdown.eps_max);
    if (!(c.breakdown.escape_radius > 0.0)) throw ConfigError("breakdown.escape_radius", "must be > 0");
  }
  if (const json* b = find(j, "bound")) {
    c.bound.mode = text(*b, "bound", "mode", std::string("model"));
    if (c.bound.mode != "model" && c.bound.mode != "L0-grid") throw ConfigError("bound.mode", "expected model or L0-grid");
    c.bound.C = number(*b, "bound", "C", 1.0);
    if (!(c.bound.C >= 0.0)) throw ConfigError("bound.C", "must be >= 0");
    if (const json* s = find(*b, "sample_sizes")) {
      if (!s->is_array()) throw ConfigError("bound.sample_sizes", "expected an array of integers");
      for (std::size_t k = 0; k < s->size(); ++k) {
        if (!(*s)[k].is_number_integer() || (*s)[k].get<int>() < 1)
          throw ConfigError("bound.sample_sizes[" + std::to_string(k) + "]", "expected a positive integer");
        c.bound.sample_sizes.push_back((*s)[k].get<int>());
      }
    }
    if (const json* g = find(*b, "L0_grid")) {
      c.bound.L0_grid = grid_value(*g, "bound.L0_grid");
      for (double v : c.bound.L0_grid)
        if (!(v > 0.0)) throw ConfigError("bound.L0_grid", "values must be > 0");
    }
    if (find(*b, "level")) c.bound.level = number(*b, "bound", "level");
    if (c.bound.mode == "L0-grid" && c.bound.L0_grid.empty())
      throw ConfigError("bound.L0_grid", "required in L0-grid mode");
  }
  if (const json* a = find(j, "assumptions")) {
    const std::string p = "assumptions";
    c.assumptions.family = text(*a, p, "family");
    if (c.assumptions.family != "exponential" && c.assumptions.family != "poisson" && c.assumptions.family != "normal")
      throw ConfigError(p + ".family", "expected exponential, poisson or normal");
    c.assumptions.model_mean = number(*a, p, "model_mean", 1.0);
    c.assumptions.true_mean = number(*a, p, "true_mean", c.assumptions.model_mean);
    c.assumptions.alpha = number(*a, p, "alpha", 0.5);
    if (const json* s = find(*a, "schedule")) {
      c.assumptions.schedule_base = number(*s, p + ".schedule", "base", 10.0);
      c.assumptions.m_max = integer(*s, p + ".schedule", "m_max", 6);
    }
    if (c.assumptions.m_max < 1) throw ConfigError(p + ".schedule.m_max", "must be >= 1");
    if (!(c.assumptions.schedule_base > 1.0)) throw ConfigError(p + ".schedule.base", "must be > 1");
  }
  if (const json* p = find(j, "plot")) {
    if (const json* y = find(*p, "y_limits")) {
      if (!y->is_object()) throw ConfigError("plot.y_limits", "expected an object keyed by coordinate number");
      for (const auto& [k, v] : y->items()) {
        const std::string kp = "plot.y_limits." + k;
        int coord = 0;
        try {
          coord = std::stoi(k);
        } catch (...) {
          throw ConfigError(kp, "key must be a coordinate number");
        }
        const Vector lim = vector_value(v, kp);
        if (lim.size() != 2 || !(lim[1] > lim[0])) throw ConfigError(kp, "expected [low, high]");
        c.plot.y_limits[coord] = {lim[0], lim[1]};
      }
    }
    if (const json* n = find(*p, "coord_names")) {
      if (!n->is_array()) throw ConfigError("plot.coord_names", "expected an array of strings");
      for (const auto& s : *n) {
        if (!s.is_string()) throw ConfigError("plot.coord_names", "expected an array of strings");
        c.plot.coord_names.push_back(s.get<std::string>());
      }
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j, path.parent_path());
}

dpd::DesignData build_design(const ExperimentConfig& cfg, std::optional<int> n_override) {
  dpd::DesignData data;
  if (cfg.design.path) {
    try {
      data = dpd::read_design_csv(cfg.design.path->string());
    } catch (const std::exception& e) {
      throw ConfigError("model.design.path", e.what());
    }
  } else {
    if (cfg.design.columns.empty()) throw ConfigError("model.design", "no design source");
    const int n = n_override.value_or(cfg.design.n);
    dpd::Matrix x(n, static_cast<Eigen::Index>(cfg.design.columns.size()));
    for (std::size_t j = 0; j < cfg.design.columns.size(); ++j) {
      const auto& col = cfg.design.columns[j];
      auto gen = dpd::make_rng(dpd::derive_seed(cfg.design.seed, {j}));
      std::normal_distribution<double> nd(col.a, col.b);
      std::uniform_real_distribution<double> ud(col.a, col.b);
      for (int i = 0; i < n; ++i) {
        double v = col.a;
        if (col.dist == "normal") v = nd(gen);
        else if (col.dist == "uniform") v = ud(gen);
        else if (col.dist == "linspace") v = n == 1 ? col.a : col.a + (col.b - col.a) * i / (n - 1);
        x(i, static_cast<Eigen::Index>(j)) = v;
      }
    }
    data.design = dpd::DesignMatrix(std::move(x));
  }
  if (cfg.response_path) {
    try {
      const dpd::CsvTable t = dpd::read_csv(cfg.response_path->string());
      const int c = t.column("y");
      if (c < 0) throw dpd::InvalidParameter("response file needs a `y` column");
      Vector y(static_cast<Eigen::Index>(t.rows.size()));
      for (std::size_t i = 0; i < t.rows.size(); ++i) y[static_cast<Eigen::Index>(i)] = t.number(i, c);
      data.y = y;
    } catch (const std::exception& e) {
      throw ConfigError("model.response.path", e.what());
    }
  }
  return data;
}

dpd::ModelFamily build_model(const ExperimentConfig& cfg, const dpd::DesignMatrix& design) {
  if (cfg.family.empty()) throw ConfigError("model", "missing model section");
  try {
    if (cfg.family == "poisson") return dpd::ModelFamily::poisson(design);
    if (cfg.family == "exponential") return dpd::ModelFamily::exponential(design);
    const dpd::MeanKind k = cfg.mean == "linear"   ? dpd::MeanKind::Linear
                            : cfg.mean == "affine" ? dpd::MeanKind::AffineVector
                                                   : dpd::MeanKind::MichaelisMenten;
    return dpd::ModelFamily::normal(dpd::MeanFunction(k), design);
  } catch (const dpd::InvalidParameter& e) {
    throw ConfigError("model.mean", e.what());
  }
}

dpd::ContaminationScheme build_contamination(const ExperimentConfig& cfg, const dpd::ModelFamily& model) {
  if (!cfg.contamination) throw ConfigError("contamination", "missing contamination section");
  const auto& s = *cfg.contamination;
  try {
    if (s.rule == "model") return dpd::ContaminationScheme::from_model(model, s.coef, 0.0);
    return dpd::ContaminationScheme::affine_mean(model, s.coef, 0.0, s.sd);
  } catch (const dpd::InvalidParameter& e) {
    throw ConfigError(s.rule == "model" ? "contamination.theta" : "contamination.coef", e.what());
  }
}

}  // namespace dpdbp
