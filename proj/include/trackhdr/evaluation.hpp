#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "trackhdr/calibration.hpp"
#include "trackhdr/features.hpp"
#include "trackhdr/metrics.hpp"
#include "trackhdr/models.hpp"
#include "trackhdr/record.hpp"

namespace trackhdr {

struct PipelineParams {
  VocabularyParams vocabulary;
  ModelParams model;
  double threshold = 0.5;
};

struct CvFold {
  std::size_t repeat = 0;
  std::size_t fold = 0;
  std::vector<std::uint64_t> test_ids;
  std::string vocabulary_digest;
  MetricsReport metrics;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

struct CvResult {
  ModelKind kind = ModelKind::random_forest;
  std::size_t repeats = 0;
  std::size_t folds = 0;
  std::uint64_t seed = 0;
  // repeats * folds entries, repeat-major.
  std::vector<CvFold> fold_reports;
  std::map<Metric, MeanStd> aggregate;
};

// Fold index per record position for one repeat. Each class is shuffled with
// Rng(derive_seed(derive_seed(seed, repeat), class)) and dealt round-robin.
// Throws InsufficientClassCount when a class has fewer than k records.
std::vector<std::size_t> stratified_fold_assignment(const Dataset& ds, std::size_t k,
                                                    std::uint64_t seed, std::size_t repeat);

// Vocabulary, binarization and model are rebuilt from each fold's training
// part; the held-out fold never influences them.
CvResult repeated_stratified_cv(ModelKind kind, const Dataset& ds, const PipelineParams& params,
                                std::size_t repeats, std::size_t k, std::uint64_t seed);

// Binarizes each test set with the frozen vocabulary and scores it.
std::vector<std::pair<std::string, MetricsReport>> cross_evaluate(
    const ModelFile& model, const HeaderVocabulary& vocab,
    const std::vector<std::pair<std::string, Dataset>>& tests, double threshold = 0.5,
    bool with_ci = false, std::uint64_t seed = 0);

nlohmann::json to_json(const CvResult& r);

}  // namespace trackhdr
