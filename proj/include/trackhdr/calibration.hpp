#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trackhdr/matrix.hpp"
#include "trackhdr/models.hpp"

namespace trackhdr {

// Right-continuous step function: for a score s, the value of the last
// block whose threshold is <= s. Scores below the first threshold take the
// first value.
struct IsotonicMapping {
  std::vector<double> thresholds;
  std::vector<double> values;

  double operator()(double score) const;
  bool operator==(const IsotonicMapping&) const = default;
};

// Pool-adjacent-violators on (score, label) pairs; equal scores are pooled
// before fitting. Returns the fitted value for each input pair, in input
// order, alongside the mapping.
struct IsotonicFit {
  IsotonicMapping mapping;
  std::vector<double> fitted;
};
IsotonicFit fit_isotonic(std::span<const double> scores, std::span<const std::uint8_t> labels);

struct CalibratedClassifier {
  TrainedClassifier base;
  IsotonicMapping mapping;

  bool operator==(const CalibratedClassifier&) const = default;
};

// Throws SingleClassCalibration unless both classes occur in calib.
CalibratedClassifier calibrate_isotonic(const TrainedClassifier& model,
                                        const BinaryFeatureMatrix& calib);

std::vector<double> predict_proba(const CalibratedClassifier& model, const BinaryFeatureMatrix& mat);

nlohmann::json to_json(const IsotonicMapping& m);
IsotonicMapping mapping_from_json(const nlohmann::json& j);

// Model files hold either a plain or a calibrated classifier together with
// a digest of the serialized model; loading verifies it.
struct ModelFile {
  TrainedClassifier base;
  std::optional<IsotonicMapping> mapping;

  const std::string& vocabulary_digest() const { return base.vocabulary_digest; }
  std::vector<double> predict(const BinaryFeatureMatrix& mat) const;
};

std::string serialize_model(const TrainedClassifier& m);
std::string serialize_model(const CalibratedClassifier& m);
ModelFile deserialize_model(std::string_view text);
ModelFile load_model(const std::string& path);

}  // namespace trackhdr
