#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dpd {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  std::string color;
  bool dashed = false;
  bool markers = false;
};

struct PlotBand {
  std::vector<double> x, lo, hi;
  std::string color;
};

/// Values z[row][col] on the grid (x[col], y[row]), drawn as coloured cells.
struct PlotHeatmap {
  std::vector<double> x, y;
  std::vector<std::vector<double>> z;
  std::string z_label;
};

/// Minimal line/band/heatmap chart written as standalone SVG.
class SvgPlot {
 public:
  std::string title, x_label, y_label;
  std::optional<std::pair<double, double>> x_limits, y_limits;
  bool log_y = false;

  void add(PlotSeries s) { series_.push_back(std::move(s)); }
  void add(PlotBand b) { bands_.push_back(std::move(b)); }
  void set(PlotHeatmap h) { heatmap_ = std::move(h); }

  std::string render(int width = 760, int height = 480) const;
  void save(const std::string& path) const;

 private:
  std::vector<PlotSeries> series_;
  std::vector<PlotBand> bands_;
  std::optional<PlotHeatmap> heatmap_;
};

/// Colour for curve index i.
std::string palette(std::size_t i);

}  // namespace dpd
