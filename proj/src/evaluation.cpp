#include "trackhdr/evaluation.hpp"

#include <cmath>

#include "trackhdr/error.hpp"
#include "trackhdr/parallel.hpp"
#include "trackhdr/rng.hpp"

namespace trackhdr {

std::vector<std::size_t> stratified_fold_assignment(const Dataset& ds, std::size_t k,
                                                    std::uint64_t seed, std::size_t repeat) {
  if (k < 2) throw InvalidArgument("cross-validation needs at least two folds");
  std::array<std::vector<std::size_t>, 2> by_class;
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    by_class[static_cast<int>(ds.label_of(ds.records[i]))].push_back(i);
  }
  std::vector<std::size_t> fold(ds.records.size(), 0);
  const std::uint64_t repeat_seed = derive_seed(seed, repeat);
  for (std::size_t c = 0; c < 2; ++c) {
    auto& members = by_class[c];
    if (members.size() < k) {
      throw InsufficientClassCount("class " + std::string(to_string(static_cast<Label>(c))) + " has " +
                                   std::to_string(members.size()) + " records, need " +
                                   std::to_string(k));
    }
    Rng rng(derive_seed(repeat_seed, c));
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t p = 0; p < members.size(); ++p) fold[members[p]] = p % k;
  }
  return fold;
}

CvResult repeated_stratified_cv(ModelKind kind, const Dataset& ds, const PipelineParams& params,
                                std::size_t repeats, std::size_t k, std::uint64_t seed) {
  if (!ds.labeled()) throw UnlabeledDataset("cross-validation needs a labeled dataset");
  if (repeats == 0) throw InvalidArgument("cross-validation needs at least one repeat");
  std::vector<std::vector<std::size_t>> assignment(repeats);
  for (std::size_t r = 0; r < repeats; ++r) assignment[r] = stratified_fold_assignment(ds, k, seed, r);

  CvResult out;
  out.kind = kind;
  out.repeats = repeats;
  out.folds = k;
  out.seed = seed;
  out.fold_reports.resize(repeats * k);
  parallel_for(repeats * k, [&](std::size_t task) {
    const std::size_t r = task / k;
    const std::size_t f = task % k;
    std::vector<std::size_t> train_pos;
    std::vector<std::size_t> test_pos;
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
      (assignment[r][i] == f ? test_pos : train_pos).push_back(i);
    }
    const Dataset train = subset(ds, train_pos);
    const Dataset test = subset(ds, test_pos);
    const auto vocab = build_vocabulary(train, params.vocabulary);
    const auto train_mat = binarize(train, vocab);
    const auto test_mat = binarize(test, vocab);
    const auto model = train_classifier(kind, train_mat, params.model, derive_seed(seed, task));
    const auto probs = predict_proba(model, test_mat);
    CvFold& fold = out.fold_reports[task];
    fold.repeat = r;
    fold.fold = f;
    for (const auto& rec : test.records) fold.test_ids.push_back(rec.record_id);
    fold.vocabulary_digest = vocab.digest;
    fold.metrics = compute_metrics(test_mat.labels, probs, params.threshold);
  });
  for (const auto m : kAllMetrics) {
    double sum = 0.0;
    for (const auto& f : out.fold_reports) sum += f.metrics.get(m);
    const double n = static_cast<double>(out.fold_reports.size());
    const double mean = sum / n;
    double ss = 0.0;
    for (const auto& f : out.fold_reports) ss += (f.metrics.get(m) - mean) * (f.metrics.get(m) - mean);
    out.aggregate[m] = {mean, n > 1 ? std::sqrt(ss / (n - 1)) : 0.0};
  }
  return out;
}

std::vector<std::pair<std::string, MetricsReport>> cross_evaluate(
    const ModelFile& model, const HeaderVocabulary& vocab,
    const std::vector<std::pair<std::string, Dataset>>& tests, double threshold, bool with_ci,
    std::uint64_t seed) {
  expect_vocabulary(model.vocabulary_digest(), vocab.digest, "cross-evaluate");
  std::vector<std::pair<std::string, MetricsReport>> out;
  for (std::size_t t = 0; t < tests.size(); ++t) {
    const auto& [tag, ds] = tests[t];
    if (!ds.labeled()) throw UnlabeledDataset("test dataset '" + tag + "' is not labeled");
    const auto mat = binarize(ds, vocab);
    const auto probs = model.predict(mat);
    out.emplace_back(tag, compute_metrics(mat.labels, probs, threshold, with_ci, derive_seed(seed, t)));
  }
  return out;
}

nlohmann::json to_json(const CvResult& r) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : r.fold_reports) {
    folds.push_back({{"repeat", f.repeat},
                     {"fold", f.fold},
                     {"test_ids", f.test_ids},
                     {"vocabulary_digest", f.vocabulary_digest},
                     {"metrics", to_json(f.metrics)}});
  }
  nlohmann::json agg = nlohmann::json::object();
  for (const auto& [m, v] : r.aggregate) agg[std::string(to_string(m))] = {{"mean", v.mean}, {"std", v.std}};
  return {{"kind", std::string(to_string(r.kind))},
          {"repeats", r.repeats},
          {"folds", r.folds},
          {"seed", r.seed},
          {"fold_reports", std::move(folds)},
          {"aggregate", std::move(agg)}};
}

}  // namespace trackhdr
