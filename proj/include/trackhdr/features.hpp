#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "trackhdr/matrix.hpp"
#include "trackhdr/record.hpp"

namespace trackhdr {

// ---------------------------------------------------------------- splitting

struct SplitSpec {
  double train = 0.70;
  double calibration = 0.10;
  double test = 0.20;
  std::uint64_t seed = 42;
  bool stratified = true;
};

// Throws InvalidFractions unless every fraction is in (0,1) and they sum
// to 1 within 1e-9.
void validate(const SplitSpec& spec);
SplitSpec parse_split_fractions(std::string_view csv, std::uint64_t seed);

struct DatasetSplit {
  Dataset train;
  Dataset calibration;
  Dataset test;
  // Record ids per split plus the spec; byte-identical for identical input.
  nlohmann::json manifest;
};

// Disjoint, exhaustive, deterministic partition. Records keep their
// original relative order inside each split. When stratified, each class is
// allocated separately so per-split class counts are within one record of
// the global proportions.
DatasetSplit split_dataset(const Dataset& ds, const SplitSpec& spec);

// Builds a sub-dataset from record positions (ascending), keeping labels.
Dataset subset(const Dataset& ds, const std::vector<std::size_t>& positions);

// --------------------------------------------------------------- vocabulary

struct VocabularyParams {
  double min_presence_rate = 1e-4;
  double w_dl = 0.7;
  double w_h = 0.3;
  double tau_name = 0.88;
  double tau_value = 0.5;

  bool operator==(const VocabularyParams&) const = default;
};

enum class DropReason { low_variance, missing_ratio, single_label };
std::string_view to_string(DropReason r);

struct HeaderVocabulary {
  // Column order; dimension d = canonical.size().
  std::vector<std::string> canonical;
  // Training presence count per canonical column (records containing any
  // member of the merged group).
  std::vector<std::uint64_t> frequency;
  std::map<std::string, std::string> alias_map;
  std::map<std::string, DropReason> dropped;
  VocabularyParams params;
  std::string train_digest;
  std::string digest;

  std::size_t dim() const { return canonical.size(); }
  // Column for an observed header name, after alias resolution; -1 if the
  // header is not part of the vocabulary.
  long column_of(const std::string& name) const;

  bool operator==(const HeaderVocabulary&) const = default;
};

// Digest over columns, aliases, drops, params and the training digest.
std::string compute_vocabulary_digest(const HeaderVocabulary& v);

// Applies, in order: (i) single-valued headers, (ii) presence rate below
// min_presence_rate, (iii) headers seen under one label only, (iv) fuzzy
// merging of the survivors; merged groups are then re-checked against
// (iii). A header failing several of (i)-(iii) is reported under (ii) first,
// then (i), then (iii). Reads the training split only.
HeaderVocabulary build_vocabulary(const Dataset& train, const VocabularyParams& params);

// Unrestricted Damerau-Levenshtein distance (adjacent transpositions, no
// restriction on edits between them).
std::size_t damerau_levenshtein(std::string_view a, std::string_view b);

// w_dl * (1 - DL/max_len) + w_h * (1 - hamming/len); the Hamming term is 0
// for names of different length.
double name_similarity(std::string_view a, std::string_view b, const VocabularyParams& params);

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

// Pairs (i < j, indices into names) whose name similarity reaches tau_name.
std::vector<std::pair<std::size_t, std::size_t>> similar_name_pairs(
    const std::vector<std::string>& names, const VocabularyParams& params);

// Merges names whose similarity >= tau_name and whose value-set Jaccard >=
// tau_value; groups are the transitive closure (union-find). Each group's
// most frequent name (ties: lexicographically smallest) is canonical.
// Returns alias -> canonical for non-canonical members only.
// Throws InvalidWeights unless w_dl + w_h == 1.
std::map<std::string, std::string> fuzzy_merge_headers(
    const std::vector<std::string>& names,
    const std::map<std::string, std::set<std::string>>& value_sets,
    const std::map<std::string, std::uint64_t>& frequencies, const VocabularyParams& params);

nlohmann::json to_json(const HeaderVocabulary& v);
HeaderVocabulary vocabulary_from_json(const nlohmann::json& j);
void save_vocabulary(const HeaderVocabulary& v, const std::string& path);
HeaderVocabulary load_vocabulary(const std::string& path);

// ------------------------------------------------------------- binarization

// Row i has column j set iff record i carries a header resolving to
// canonical[j]. Out-of-vocabulary headers are ignored. Requires labels.
BinaryFeatureMatrix binarize(const Dataset& ds, const HeaderVocabulary& vocab);

// Throws VocabularyDigestMismatch when digests differ.
void expect_vocabulary(const std::string& expected, const std::string& actual,
                       std::string_view what);

}  // namespace trackhdr
