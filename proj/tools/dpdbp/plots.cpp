#include "plots.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "dpd/csv.hpp"
#include "dpd/svg_plot.hpp"

namespace dpdbp {

namespace {

std::string alpha_label(double a) { return "alpha = " + dpd::format_number(a); }

std::string coord_name(const std::vector<std::string>& names, int j) {
  return j - 1 < static_cast<int>(names.size()) ? names[static_cast<std::size_t>(j - 1)] : "theta_" + std::to_string(j);
}

void apply_limits(dpd::SvgPlot& p, const PlotSpec& spec, int coord) {
  auto it = spec.y_limits.find(coord);
  if (it != spec.y_limits.end()) p.y_limits = it->second;
}

// Group the rows of a table by the value of column `key`, keeping file order.
std::vector<std::pair<double, std::vector<std::size_t>>> group_rows(const dpd::CsvTable& t, int key) {
  std::vector<std::pair<double, std::vector<std::size_t>>> groups;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double v = t.number(r, key);
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == v; });
    if (it == groups.end()) groups.push_back({v, {r}});
    else it->second.push_back(r);
  }
  return groups;
}

}  // namespace

std::vector<fs::path> plot_sweep(const fs::path& csv, const fs::path& out_dir, const PlotSpec& spec,
                                 const std::vector<std::string>& coord_names) {
  const auto t = dpd::read_csv(csv.string());
  const int ca = t.column("alpha"), ce = t.column("eps");
  std::vector<fs::path> out;
  const auto groups = group_rows(t, ca);
  for (int j = 1;; ++j) {
    const int cj = t.column("theta_" + std::to_string(j));
    if (cj < 0) break;
    dpd::SvgPlot p;
    p.title = "Functional " + coord_name(coord_names, j) + " under contamination";
    p.x_label = "contamination proportion eps";
    p.y_label = coord_name(coord_names, j);
    apply_limits(p, spec, j);
    std::size_t k = 0;
    for (const auto& [a, rows] : groups) {
      dpd::PlotSeries s{alpha_label(a), {}, {}, dpd::palette(k++), false, false};
      for (std::size_t r : rows) {
        s.x.push_back(t.number(r, ce));
        s.y.push_back(t.number(r, cj));
      }
      p.add(std::move(s));
    }
    const fs::path f = out_dir / ("sweep_theta_" + std::to_string(j) + ".svg");
    p.save(f.string());
    out.push_back(f);
  }
  return out;
}

std::vector<fs::path> plot_simulation(const fs::path& csv, const fs::path& out_dir, const PlotSpec& spec,
                                      const std::vector<std::string>& coord_names) {
  const auto t = dpd::read_csv(csv.string());
  const int ca = t.column("alpha"), ce = t.column("eps"), cc = t.column("coord"), cm = t.column("median"),
            c25 = t.column("q25"), c75 = t.column("q75");
  std::vector<fs::path> out;
  const auto coords = group_rows(t, cc);
  for (const auto& [coord, rows] : coords) {
    const int j = static_cast<int>(coord);
    dpd::CsvTable sub = t;
    sub.rows.clear();
    for (std::size_t r : rows) sub.rows.push_back(t.rows[r]);
    dpd::SvgPlot p;
    p.title = "Median MDPDE of " + coord_name(coord_names, j) + " with 25-75% band";
    p.x_label = "contamination proportion eps";
    p.y_label = coord_name(coord_names, j);
    apply_limits(p, spec, j);
    std::size_t k = 0;
    for (const auto& [a, arows] : group_rows(sub, ca)) {
      const std::string col = dpd::palette(k++);
      dpd::PlotBand b{{}, {}, {}, col};
      dpd::PlotSeries s{alpha_label(a), {}, {}, col, false, false};
      for (std::size_t r : arows) {
        const double e = sub.number(r, ce);
        b.x.push_back(e);
        b.lo.push_back(sub.number(r, c25));
        b.hi.push_back(sub.number(r, c75));
        s.x.push_back(e);
        s.y.push_back(sub.number(r, cm));
      }
      p.add(std::move(b));
      p.add(std::move(s));
    }
    const fs::path f = out_dir / ("simulation_theta_" + std::to_string(j) + ".svg");
    p.save(f.string());
    out.push_back(f);
  }
  return out;
}

fs::path plot_bounds(const std::vector<std::pair<std::string, fs::path>>& csvs, const fs::path& out) {
  dpd::SvgPlot p;
  p.title = "Lower bound of the asymptotic breakdown point";
  p.x_label = "alpha";
  p.y_label = "lower bound";
  std::size_t k = 0;
  for (const auto& [label, path] : csvs) {
    const auto t = dpd::read_csv(path.string());
    const int ca = t.column("alpha"), cb = t.column("bound");
    dpd::PlotSeries s{label, {}, {}, dpd::palette(k), k % 2 == 1, false};
    ++k;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      s.x.push_back(t.number(r, ca));
      s.y.push_back(t.number(r, cb));
    }
    p.add(std::move(s));
  }
  p.save(out.string());
  return out;
}

fs::path plot_bound_grid(const fs::path& grid_csv, const fs::path* level_csv, const fs::path& out) {
  const auto t = dpd::read_csv(grid_csv.string());
  const int ca = t.column("alpha"), cl = t.column("L0"), cb = t.column("bound");
  std::vector<double> alphas, l0s;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    alphas.push_back(t.number(r, ca));
    l0s.push_back(t.number(r, cl));
  }
  std::sort(alphas.begin(), alphas.end());
  alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());
  std::sort(l0s.begin(), l0s.end());
  l0s.erase(std::unique(l0s.begin(), l0s.end()), l0s.end());
  dpd::PlotHeatmap h{alphas, l0s, std::vector<std::vector<double>>(l0s.size(), std::vector<double>(alphas.size(), NAN)),
                     "bound"};
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto ia = std::lower_bound(alphas.begin(), alphas.end(), t.number(r, ca)) - alphas.begin();
    const auto il = std::lower_bound(l0s.begin(), l0s.end(), t.number(r, cl)) - l0s.begin();
    h.z[static_cast<std::size_t>(il)][static_cast<std::size_t>(ia)] = t.number(r, cb);
  }
  dpd::SvgPlot p;
  p.title = "Lower bound over (alpha, L0)";
  p.x_label = "alpha";
  p.y_label = "L0";
  p.set(std::move(h));
  if (level_csv) {
    const auto lv = dpd::read_csv(level_csv->string());
    const int la = lv.column("alpha"), ll = lv.column("L0"), lb = lv.column("bound");
    dpd::PlotSeries s{"", {}, {}, "#d62728", false, false};
    for (std::size_t r = 0; r < lv.rows.size(); ++r) {
      s.x.push_back(lv.number(r, la));
      s.y.push_back(lv.number(r, ll));
    }
    if (!lv.rows.empty()) s.label = "bound = " + dpd::format_number(lv.number(0, lb));
    p.add(std::move(s));
  }
  p.save(out.string());
  return out;
}

fs::path plot_bound_grid_curves(const fs::path& grid_csv, const fs::path& out) {
  const auto t = dpd::read_csv(grid_csv.string());
  const int ca = t.column("alpha"), cl = t.column("L0"), cb = t.column("bound");
  auto groups = group_rows(t, cl);
  // Thin the legend to at most ten curves.
  const std::size_t stride = std::max<std::size_t>(1, (groups.size() + 9) / 10);
  dpd::SvgPlot p;
  p.title = "Lower bound against alpha for fixed L0";
  p.x_label = "alpha";
  p.y_label = "lower bound";
  std::size_t k = 0;
  for (std::size_t g = 0; g < groups.size(); g += stride) {
    dpd::PlotSeries s{"L0 = " + dpd::format_number(groups[g].first), {}, {}, dpd::palette(k++), false, false};
    for (std::size_t r : groups[g].second) {
      s.x.push_back(t.number(r, ca));
      s.y.push_back(t.number(r, cb));
    }
    p.add(std::move(s));
  }
  p.save(out.string());
  return out;
}

fs::path plot_assumptions(const fs::path& csv, const fs::path& out) {
  const auto t = dpd::read_csv(csv.string());
  const int cm = t.column("m");
  dpd::SvgPlot p;
  p.title = "Overlap masses along the divergence schedule";
  p.x_label = "m";
  p.y_label = "log10 overlap mass";
  std::size_t k = 0;
  for (const char* col : {"log_overlap_model_contaminant", "log_overlap_true_model"}) {
    const int c = t.column(col);
    dpd::PlotSeries s{col, {}, {}, dpd::palette(k++), false, true};
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
      s.x.push_back(t.number(r, cm));
      s.y.push_back(t.number(r, c) / std::log(10.0));
    }
    p.add(std::move(s));
  }
  p.save(out.string());
  return out;
}

}  // namespace dpdbp
