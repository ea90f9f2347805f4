#pragma once

#include <vector>

namespace dpd {

/// Sample quantile, linear interpolation between order statistics (type 7).
double quantile(std::vector<double> v, double p);
double median(std::vector<double> v);

}  // namespace dpd
