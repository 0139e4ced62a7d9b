#pragma once

#include <span>
#include <vector>

namespace trackhdr {

// Type-7 quantile (linear interpolation between order statistics) of an
// already sorted sample. q in [0, 1]; sample must be non-empty.
double quantile_sorted(std::span<const double> sorted, double q);

struct Quartiles {
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
};

// Sorts a copy. Empty input yields all zeros.
Quartiles quartiles(std::vector<double> values);

}  // namespace trackhdr
