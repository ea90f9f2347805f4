#include "dpd/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dpd {

namespace {

std::string esc(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '&': o += "&amp;"; break;
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '"': o += "&quot;"; break;
      default: o += c;
    }
  }
  return o;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v, double step) {
  char buf[32];
  if (std::abs(v) < step * 1e-9) v = 0.0;
  const int dec = std::max(0, static_cast<int>(std::ceil(-std::log10(step) - 1e-9)));
  std::snprintf(buf, sizeof buf, "%.*f", std::min(dec, 6), v);
  return buf;
}

std::vector<double> nice_ticks(double lo, double hi, int target, double* step_out) {
  const double span = hi - lo;
  const double raw = span / std::max(1, target);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> t;
  for (double v = std::ceil(lo / step - 1e-9) * step; v <= hi + step * 1e-9; v += step) t.push_back(v);
  *step_out = step;
  return t;
}

void widen(double& lo, double& hi) {
  if (!(hi > lo)) {
    const double c = std::isfinite(lo) ? lo : 0.0;
    const double pad = std::max(1e-9, std::abs(c) * 0.05 + (c == 0.0 ? 1.0 : 0.0));
    lo = c - pad;
    hi = c + pad;
  }
}

// Blue-to-yellow ramp for t in [0, 1].
std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(68 + t * (253 - 68));
  const int g = static_cast<int>(1 + t * (231 - 1));
  const int b = static_cast<int>(84 + t * (37 - 84));
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

}  // namespace

std::string palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                 "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"};
  return colors[i % (sizeof colors / sizeof colors[0])];
}

std::string SvgPlot::render(int width, int height) const {
  const double ml = 72, mr = heatmap_ ? 90 : 150, mt = 40, mb = 56;
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto ty = [&](double v) { return log_y ? (v > 0 ? std::log10(v) : std::numeric_limits<double>::quiet_NaN()) : v; };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto grow_x = [&](double v) {
    if (std::isfinite(v)) x0 = std::min(x0, v), x1 = std::max(x1, v);
  };
  auto grow_y = [&](double v) {
    v = ty(v);
    if (std::isfinite(v)) y0 = std::min(y0, v), y1 = std::max(y1, v);
  };
  for (const auto& s : series_) {
    for (double v : s.x) grow_x(v);
    for (double v : s.y) grow_y(v);
  }
  for (const auto& b : bands_) {
    for (double v : b.x) grow_x(v);
    for (double v : b.lo) grow_y(v);
    for (double v : b.hi) grow_y(v);
  }
  if (heatmap_) {
    for (double v : heatmap_->x) grow_x(v);
    for (double v : heatmap_->y) grow_y(v);
  }
  if (x_limits) x0 = x_limits->first, x1 = x_limits->second;
  if (y_limits) y0 = ty(y_limits->first), y1 = ty(y_limits->second);
  if (!std::isfinite(x0)) x0 = 0, x1 = 1;
  if (!std::isfinite(y0)) y0 = 0, y1 = 1;
  widen(x0, x1);
  widen(y0, y1);
  if (!y_limits && !heatmap_) {
    const double pad = 0.04 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
  }
  auto px = [&](double v) { return ml + (v - x0) / (x1 - x0) * pw; };
  auto py = [&](double v) { return mt + ph - (ty(v) - y0) / (y1 - y0) * ph; };
  auto py_raw = [&](double v) { return mt + ph - (v - y0) / (y1 - y0) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<defs><clipPath id=\"plot\"><rect x=\"" << num(ml) << "\" y=\"" << num(mt) << "\" width=\"" << num(pw)
    << "\" height=\"" << num(ph) << "\"/></clipPath></defs>\n";
  if (!title.empty())
    o << "<text x=\"" << num(ml + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << esc(title)
      << "</text>\n";

  if (heatmap_) {
    const auto& h = *heatmap_;
    double zlo = std::numeric_limits<double>::infinity(), zhi = -zlo;
    for (const auto& row : h.z)
      for (double v : row)
        if (std::isfinite(v)) zlo = std::min(zlo, v), zhi = std::max(zhi, v);
    widen(zlo, zhi);
    auto edges = [](const std::vector<double>& c, std::size_t k) {
      const double left = k == 0 ? c[0] - 0.5 * (c.size() > 1 ? c[1] - c[0] : 1.0) : 0.5 * (c[k - 1] + c[k]);
      const double right = k + 1 == c.size() ? c[k] + 0.5 * (c.size() > 1 ? c[k] - c[k - 1] : 1.0)
                                             : 0.5 * (c[k] + c[k + 1]);
      return std::make_pair(left, right);
    };
    o << "<g clip-path=\"url(#plot)\">\n";
    for (std::size_t r = 0; r < h.y.size(); ++r)
      for (std::size_t c = 0; c < h.x.size(); ++c) {
        const double v = h.z[r][c];
        if (!std::isfinite(v)) continue;
        const auto [xa, xb] = edges(h.x, c);
        const auto [ya, yb] = edges(h.y, r);
        o << "<rect x=\"" << num(px(xa)) << "\" y=\"" << num(py_raw(yb)) << "\" width=\""
          << num(px(xb) - px(xa) + 0.5) << "\" height=\"" << num(py_raw(ya) - py_raw(yb) + 0.5) << "\" fill=\""
          << ramp((v - zlo) / (zhi - zlo)) << "\"/>\n";
      }
    o << "</g>\n";
    const double cx = ml + pw + 20, cw = 16;
    for (int k = 0; k < 50; ++k) {
      const double t = k / 49.0;
      o << "<rect x=\"" << num(cx) << "\" y=\"" << num(mt + ph - (k + 1) * ph / 50) << "\" width=\"" << cw
        << "\" height=\"" << num(ph / 50 + 0.5) << "\" fill=\"" << ramp(t) << "\"/>\n";
    }
    double zs = 0;
    for (double t : nice_ticks(zlo, zhi, 5, &zs))
      o << "<text x=\"" << num(cx + cw + 4) << "\" y=\"" << num(mt + ph - (t - zlo) / (zhi - zlo) * ph + 4)
        << "\" font-size=\"10\">" << tick_label(t, zs) << "</text>\n";
    if (!h.z_label.empty())
      o << "<text x=\"" << num(cx) << "\" y=\"" << num(mt - 8) << "\" font-size=\"11\">" << esc(h.z_label)
        << "</text>\n";
  }

  double xs = 0, ys = 0;
  const auto xt = nice_ticks(x0, x1, 8, &xs);
  const auto yt = log_y ? std::vector<double>{} : nice_ticks(y0, y1, 6, &ys);
  for (double t : xt) {
    o << "<line x1=\"" << num(px(t)) << "\" y1=\"" << num(mt) << "\" x2=\"" << num(px(t)) << "\" y2=\""
      << num(mt + ph) << "\" stroke=\"#e5e5e5\"/>\n";
    o << "<text x=\"" << num(px(t)) << "\" y=\"" << num(mt + ph + 16) << "\" text-anchor=\"middle\">"
      << tick_label(t, xs) << "</text>\n";
  }
  if (log_y) {
    for (double e = std::ceil(y0); e <= y1 + 1e-9; e += std::max(1.0, std::ceil((y1 - y0) / 8))) {
      o << "<line x1=\"" << num(ml) << "\" y1=\"" << num(py_raw(e)) << "\" x2=\"" << num(ml + pw) << "\" y2=\""
        << num(py_raw(e)) << "\" stroke=\"#e5e5e5\"/>\n";
      o << "<text x=\"" << num(ml - 6) << "\" y=\"" << num(py_raw(e) + 4) << "\" text-anchor=\"end\">1e"
        << static_cast<int>(e) << "</text>\n";
    }
  } else {
    for (double t : yt) {
      o << "<line x1=\"" << num(ml) << "\" y1=\"" << num(py_raw(t)) << "\" x2=\"" << num(ml + pw) << "\" y2=\""
        << num(py_raw(t)) << "\" stroke=\"#e5e5e5\"/>\n";
      o << "<text x=\"" << num(ml - 6) << "\" y=\"" << num(py_raw(t) + 4) << "\" text-anchor=\"end\">"
        << tick_label(t, ys) << "</text>\n";
    }
  }

  o << "<g clip-path=\"url(#plot)\">\n";
  for (const auto& b : bands_) {
    std::string upper, lower;
    for (std::size_t k = 0; k < b.x.size(); ++k) {
      if (!std::isfinite(b.lo[k]) || !std::isfinite(b.hi[k])) continue;
      upper += num(px(b.x[k])) + "," + num(py(b.hi[k])) + " ";
    }
    for (std::size_t k = b.x.size(); k-- > 0;) {
      if (!std::isfinite(b.lo[k]) || !std::isfinite(b.hi[k])) continue;
      lower += num(px(b.x[k])) + "," + num(py(b.lo[k])) + " ";
    }
    if (!upper.empty())
      o << "<polygon points=\"" << upper << lower << "\" fill=\"" << b.color
        << "\" fill-opacity=\"0.22\" stroke=\"none\"/>\n";
  }
  for (const auto& s : series_) {
    std::string pts;
    auto flush = [&] {
      if (!pts.empty())
        o << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.8\""
          << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
      pts.clear();
    };
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      const double yy = py(s.y[k]);
      if (!std::isfinite(yy) || !std::isfinite(s.x[k])) {
        flush();
        continue;
      }
      pts += num(px(s.x[k])) + "," + num(yy) + " ";
      if (s.markers)
        o << "<circle cx=\"" << num(px(s.x[k])) << "\" cy=\"" << num(yy) << "\" r=\"2.2\" fill=\"" << s.color
          << "\"/>\n";
    }
    flush();
  }
  o << "</g>\n";
  o << "<rect x=\"" << num(ml) << "\" y=\"" << num(mt) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
    << "\" fill=\"none\" stroke=\"#333\"/>\n";
  o << "<text x=\"" << num(ml + pw / 2) << "\" y=\"" << num(height - 14) << "\" text-anchor=\"middle\">"
    << esc(x_label) << "</text>\n";
  o << "<text transform=\"translate(18," << num(mt + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
    << esc(y_label) << "</text>\n";

  if (!heatmap_) {
    int row = 0;
    for (const auto& s : series_) {
      if (s.label.empty()) continue;
      const double ly = mt + 10 + 18 * row++;
      o << "<line x1=\"" << num(ml + pw + 12) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(ml + pw + 36)
        << "\" y2=\"" << num(ly) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\""
        << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
      o << "<text x=\"" << num(ml + pw + 42) << "\" y=\"" << num(ly + 4) << "\">" << esc(s.label) << "</text>\n";
    }
  } else {
    for (const auto& s : series_)
      if (!s.label.empty())
        o << "<text x=\"" << num(ml + 6) << "\" y=\"" << num(mt + 16) << "\" fill=\"" << s.color << "\">"
          << esc(s.label) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void SvgPlot::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << render();
}

}  // namespace dpd
