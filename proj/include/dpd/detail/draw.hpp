#pragma once

#include <random>

namespace dpd {

template <class Gen>
double draw(const UnivariateDensity& d, Gen& gen) {
  if (const auto* n = std::get_if<NormalDist>(&d.kind()))
    return std::normal_distribution<double>(n->mean, n->sd)(gen);
  if (const auto* e = std::get_if<ExponentialDist>(&d.kind()))
    return std::exponential_distribution<double>(1.0 / e->mean)(gen);
  const double m = d.mean();
  if (m == 0.0) return 0.0;
  return static_cast<double>(std::poisson_distribution<long long>(m)(gen));
}

}  // namespace dpd
