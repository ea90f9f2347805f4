#pragma once

#include <cmath>
#include <cstdint>

namespace dpd {

/// ln(y!) for y >= 0; table lookup for small integers, lgamma otherwise.
double log_factorial(double y);

/// Poisson log-probability, -inf off the non-negative integers.
double poisson_log_pmf(double y, double lambda);

struct LatticeWindow {
  std::int64_t lo = 0;
  std::int64_t hi = 0;
};

/// Integer window holding all but `tail_tol` of a Poisson(lambda) law
/// (Chernoff/Bernstein bound on each tail).
LatticeWindow poisson_window(double lambda, double tail_tol);

/// Union of two windows.
LatticeWindow merge(const LatticeWindow& a, const LatticeWindow& b);

/// Sum h(y) for y = lo..hi. When `width` (the spread of h, in lattice units)
/// is large the sum is evaluated on a coarser stride; for smooth unimodal h
/// whose tails vanish at the window edges the aliasing error is of order
/// exp(-2 pi^2 (width/stride)^2).
template <class H>
double lattice_sum(const LatticeWindow& w, double width, H&& h) {
  const std::int64_t span = w.hi - w.lo;
  std::int64_t stride = 1;
  if (width >= 10.0 && span > 400 && w.lo > 0) stride = static_cast<std::int64_t>(width / 5.0);
  if (stride < 1) stride = 1;
  double s = 0.0;
  for (std::int64_t y = w.lo; y <= w.hi; y += stride) s += h(static_cast<double>(y));
  return s * static_cast<double>(stride);
}

}  // namespace dpd
