#include "trackhdr/calibration.hpp"

#include <algorithm>
#include <numeric>

#include "trackhdr/digest.hpp"
#include "trackhdr/error.hpp"
#include "trackhdr/features.hpp"
#include "trackhdr/io.hpp"

namespace trackhdr {

namespace {

constexpr int kModelFileVersion = 1;

struct Block {
  double threshold;
  double last;
  double sum;
  double weight;
  std::size_t first;  // first sorted position covered
  double value() const { return sum / weight; }
};

nlohmann::json model_body(const TrainedClassifier& base, const IsotonicMapping* mapping) {
  nlohmann::json body = {{"classifier", to_json(base)}};
  if (mapping) body["mapping"] = to_json(*mapping);
  return body;
}

std::string wrap(nlohmann::json body) {
  const std::string digest = sha256_hex(body.dump());
  nlohmann::json out = {{"v", kModelFileVersion}, {"body", std::move(body)}, {"model_digest", digest}};
  return out.dump() + "\n";
}

}  // namespace

double IsotonicMapping::operator()(double score) const {
  if (thresholds.empty()) return 0.0;
  const auto it = std::upper_bound(thresholds.begin(), thresholds.end(), score);
  if (it == thresholds.begin()) return values.front();
  return values[static_cast<std::size_t>(it - thresholds.begin()) - 1];
}

IsotonicFit fit_isotonic(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw LengthMismatch("isotonic: scores and labels differ in length");
  if (scores.empty()) throw EmptyInput("isotonic: no calibration pairs");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  std::vector<Block> blocks;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const double s = scores[order[k]];
    const double y = labels[order[k]];
    if (!blocks.empty() && blocks.back().last == s) {
      blocks.back().sum += y;
      blocks.back().weight += 1.0;
    } else {
      blocks.push_back({s, s, y, 1.0, k});
    }
    while (blocks.size() > 1 && blocks[blocks.size() - 2].value() >= blocks.back().value()) {
      Block last = blocks.back();
      blocks.pop_back();
      blocks.back().sum += last.sum;
      blocks.back().weight += last.weight;
      blocks.back().last = last.last;
    }
  }

  IsotonicFit fit;
  fit.fitted.resize(scores.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    fit.mapping.thresholds.push_back(blocks[b].threshold);
    fit.mapping.values.push_back(blocks[b].value());
    const std::size_t end = b + 1 < blocks.size() ? blocks[b + 1].first : order.size();
    for (std::size_t k = blocks[b].first; k < end; ++k) fit.fitted[order[k]] = blocks[b].value();
  }
  return fit;
}

CalibratedClassifier calibrate_isotonic(const TrainedClassifier& model,
                                        const BinaryFeatureMatrix& calib) {
  const std::size_t pos = calib.positives();
  if (pos == 0 || pos == calib.n_rows) {
    throw SingleClassCalibration("calibration set must contain both classes");
  }
  const auto scores = predict_proba(model, calib);
  return {model, fit_isotonic(scores, calib.labels).mapping};
}

std::vector<double> predict_proba(const CalibratedClassifier& model, const BinaryFeatureMatrix& mat) {
  auto out = predict_proba(model.base, mat);
  for (auto& p : out) p = model.mapping(p);
  return out;
}

nlohmann::json to_json(const IsotonicMapping& m) {
  return {{"thresholds", m.thresholds}, {"values", m.values}};
}

IsotonicMapping mapping_from_json(const nlohmann::json& j) {
  IsotonicMapping m;
  try {
    m.thresholds = j.at("thresholds").get<std::vector<double>>();
    m.values = j.at("values").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("mapping: ") + e.what());
  }
  if (m.thresholds.size() != m.values.size() || m.values.empty()) {
    throw ParseError("mapping: malformed step function");
  }
  for (std::size_t i = 1; i < m.values.size(); ++i) {
    if (m.values[i] < m.values[i - 1] || m.thresholds[i] <= m.thresholds[i - 1]) {
      throw ParseError("mapping: not monotone");
    }
  }
  return m;
}

std::vector<double> ModelFile::predict(const BinaryFeatureMatrix& mat) const {
  auto out = predict_proba(base, mat);
  if (mapping) {
    for (auto& p : out) p = (*mapping)(p);
  }
  return out;
}

std::string serialize_model(const TrainedClassifier& m) { return wrap(model_body(m, nullptr)); }

std::string serialize_model(const CalibratedClassifier& m) {
  return wrap(model_body(m.base, &m.mapping));
}

ModelFile deserialize_model(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model file: ") + e.what());
  }
  if (!j.is_object() || !j.contains("v") || !j["v"].is_number_integer()) {
    throw ParseError("model file: missing version");
  }
  if (j["v"].get<int>() != kModelFileVersion) {
    throw SchemaVersionError("model file: unsupported version " + j["v"].dump());
  }
  if (!j.contains("body") || !j.contains("model_digest")) throw ParseError("model file: incomplete");
  if (sha256_hex(j["body"].dump()) != j["model_digest"].get<std::string>()) {
    throw DigestMismatch("model file: digest does not match contents");
  }
  ModelFile out;
  out.base = classifier_from_json(j["body"].at("classifier"));
  if (j["body"].contains("mapping")) out.mapping = mapping_from_json(j["body"]["mapping"]);
  return out;
}

ModelFile load_model(const std::string& path) { return deserialize_model(read_text_file(path)); }

}  // namespace trackhdr
