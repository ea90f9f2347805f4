#include "dpd/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace dpd {

namespace {

constexpr std::size_t kTableSize = 1 << 16;

const std::vector<double>& log_factorial_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kTableSize);
    for (std::size_t k = 0; k < kTableSize; ++k) t[k] = std::lgamma(static_cast<double>(k) + 1.0);
    return t;
  }();
  return table;
}

// ln(y!) - [(y + 1/2) ln y - y + ln(2 pi)/2], the Stirling remainder.
double stirling_error(double y) {
  if (y <= 15.0) {
    return log_factorial(y) - (y + 0.5) * std::log(y) + y - 0.5 * std::log(2.0 * std::numbers::pi);
  }
  const double y2 = y * y;
  return (1.0 / 12 - (1.0 / 360 - (1.0 / 1260 - (1.0 / 1680 - 1.0 / (1188 * y2)) / y2) / y2) / y2) / y;
}

// y ln(y / m) + m - y without cancellation when y is close to m.
double deviance_term(double y, double m) {
  if (std::abs(y - m) < 0.1 * (y + m)) {
    const double v = (y - m) / (y + m);
    double s = (y - m) * v;
    double ej = 2.0 * y * v;
    const double v2 = v * v;
    for (int j = 1; j < 1000; ++j) {
      ej *= v2;
      const double next = s + ej / (2 * j + 1);
      if (next == s) return s;
      s = next;
    }
    return s;
  }
  return y * std::log(y / m) + m - y;
}

}  // namespace

double log_factorial(double y) {
  if (y >= 0.0 && y < static_cast<double>(kTableSize) && y == std::floor(y))
    return log_factorial_table()[static_cast<std::size_t>(y)];
  return std::lgamma(y + 1.0);
}

double poisson_log_pmf(double y, double lambda) {
  if (y < 0.0 || y != std::floor(y)) return -std::numeric_limits<double>::infinity();
  if (lambda == 0.0) return y == 0.0 ? 0.0 : -std::numeric_limits<double>::infinity();
  if (y == 0.0) return -lambda;
  // Saddle-point form keeps full relative accuracy at large means.
  return -0.5 * std::log(2.0 * std::numbers::pi * y) - stirling_error(y) - deviance_term(y, lambda);
}

LatticeWindow poisson_window(double lambda, double tail_tol) {
  const double L = std::log(2.0 / std::max(tail_tol, 1e-300));
  const double up = L / 3.0 + std::sqrt(L * L / 9.0 + 2.0 * L * lambda);
  const double down = std::sqrt(2.0 * L * lambda);
  LatticeWindow w;
  w.lo = static_cast<std::int64_t>(std::max(0.0, std::floor(lambda - down)));
  w.hi = static_cast<std::int64_t>(std::ceil(lambda + up)) + 1;
  return w;
}

LatticeWindow merge(const LatticeWindow& a, const LatticeWindow& b) {
  return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

}  // namespace dpd
