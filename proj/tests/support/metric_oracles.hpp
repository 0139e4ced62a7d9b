#pragma once

#include <cstdint>
#include <vector>

#include "trackhdr/metrics.hpp"

namespace trackhdr::testing {

// Brute-force reference implementations. Quadratic where convenient.
double oracle_metric(Metric m, const std::vector<std::uint8_t>& labels, const std::vector<double>& probs,
                     double threshold);

struct OracleFixture {
  std::vector<std::uint8_t> labels;
  std::vector<double> probs;
};
// n in [1, 200]; scores drawn from a coarse grid so ties occur.
OracleFixture random_fixture(std::uint64_t seed);

// Largest absolute deviation between compute_metric and the oracle over
// every metric and `fixtures` random fixtures.
double max_oracle_deviation(std::size_t fixtures, std::uint64_t seed);

}  // namespace trackhdr::testing
