#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "trackhdr/matrix.hpp"
#include "trackhdr/models.hpp"
#include "trackhdr/rng.hpp"

namespace trackhdr::detail {

enum class Criterion { gini, newton };
enum class TieBreak { lowest_index, random };

struct TreeOptions {
  Criterion criterion = Criterion::gini;
  int max_depth = 0;
  std::size_t min_samples_leaf = 1;
  // 0 = every non-constant feature is a candidate.
  std::size_t max_features = 0;
  TieBreak tie_break = TieBreak::lowest_index;
  double leaf_l2 = 1.0;
};

// Per-sample additive statistics. Gini: (weight, positive weight).
// Newton: (gradient, hessian).
struct SampleStats {
  std::vector<double> a;
  std::vector<double> b;
};

// Grows one tree over the given samples (indices into mat.rows; repeated
// indices are not allowed, use weights instead). Randomness only comes from
// `rng` and only when max_features or TieBreak::random ask for it.
Tree grow_tree(const BinaryFeatureMatrix& mat, std::span<const std::uint32_t> samples,
               const SampleStats& stats, const TreeOptions& options, Rng& rng);

}  // namespace trackhdr::detail
