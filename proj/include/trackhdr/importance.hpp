#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "trackhdr/calibration.hpp"
#include "trackhdr/matrix.hpp"
#include "trackhdr/metrics.hpp"

namespace trackhdr {

enum class ImportanceMethod { impurity, permutation };
std::string_view to_string(ImportanceMethod m);
ImportanceMethod parse_importance_method(std::string_view s);

struct ImportanceReport {
  ImportanceMethod method = ImportanceMethod::impurity;
  Metric metric = Metric::f1;
  std::vector<std::string> columns;
  // Before scaling: impurity shares sum to 1; permutation means are the
  // average metric degradation (can be negative).
  std::vector<double> raw;
  // Clipped at 0 and scaled so the largest is 1.
  std::vector<double> scores;
  std::size_t repeats = 0;
  std::uint64_t seed = 0;
};

// Impurity: per-tree split gains normalised per tree and averaged (AdaBoost
// stages weighted by their stage weight). Requires a tree-based model and
// throws MethodModelMismatch otherwise. Permutation: each column is shuffled
// `repeats` times with Rng(derive_seed(seed, column * repeats + r)) and the
// mean degradation of `metric` on mat is reported.
ImportanceReport compute_feature_importance(const ModelFile& model, const BinaryFeatureMatrix& mat,
                                            const std::vector<std::string>& columns, Metric metric,
                                            ImportanceMethod method, std::uint64_t seed,
                                            std::size_t repeats = 5);

nlohmann::json to_json(const ImportanceReport& r);

}  // namespace trackhdr
