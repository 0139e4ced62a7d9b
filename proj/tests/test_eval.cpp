#include <doctest.h>

#include <cmath>

#include "support/metric_oracles.hpp"
#include "support/synthetic.hpp"
#include "trackhdr/error.hpp"
#include "trackhdr/evaluation.hpp"
#include "trackhdr/features.hpp"
#include "trackhdr/metrics.hpp"
#include "trackhdr/report.hpp"
#include "trackhdr/rng.hpp"

using namespace trackhdr;

namespace {

std::vector<std::uint8_t> balance(std::size_t neg, std::size_t pos) {
  std::vector<std::uint8_t> y(neg, 0);
  y.insert(y.end(), pos, 1);
  return y;
}

}  // namespace

TEST_CASE("metrics agree with brute-force oracles") {
  CHECK(testing::max_oracle_deviation(300, 77) <= 1e-12);
  for (std::uint64_t k = 0; k < 50; ++k) {
    const auto f = testing::random_fixture(k + 5000);
    for (const double thr : {0.25, 0.7}) {
      for (const auto m : kAllMetrics) {
        CHECK(compute_metric(m, f.labels, f.probs, thr) ==
              doctest::Approx(testing::oracle_metric(m, f.labels, f.probs, thr)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("perfect predictions") {
  const std::vector<std::uint8_t> y{0, 1, 1, 0, 1};
  const std::vector<double> p{0, 1, 1, 0, 1};
  const auto r = compute_metrics(y, p);
  CHECK(r.accuracy == 1.0);
  CHECK(r.f1 == 1.0);
  CHECK(r.mcc == 1.0);
  CHECK(r.roc_auc == 1.0);
  CHECK(r.auprc == 1.0);
  CHECK(r.log_loss < 1e-14);
  CHECK(r.cm == ConfusionMatrix{3, 0, 2, 0});
}

TEST_CASE("constant predictor log-loss on a 70:30 split") {
  const auto y = balance(70, 30);
  const std::vector<double> p(100, 0.3);
  CHECK(log_loss(y, p) == doctest::Approx(0.611).epsilon(0.001 / 0.611));
  CHECK(log_loss(y, p) == doctest::Approx(-(0.3 * std::log(0.3) + 0.7 * std::log(0.7))).epsilon(1e-12));
}

TEST_CASE("published confusion matrix reproduces its scores") {
  const ConfusionMatrix cm{180417, 18998, 577068, 26330};
  CHECK(accuracy(cm) == doctest::Approx(0.944).epsilon(0.001 / 0.944));
  CHECK(f1_score(cm) == doctest::Approx(0.888).epsilon(0.001 / 0.888));
  CHECK(mcc(cm) == doctest::Approx(0.851).epsilon(0.001 / 0.851));
}

TEST_CASE("zero-denominator conventions") {
  const auto y = balance(80, 20);
  const std::vector<double> p(100, 0.0);
  const auto r = compute_metrics(y, p);
  CHECK(r.balanced_accuracy == 0.5);
  CHECK(r.mcc == 0.0);
  CHECK(r.precision == 0.0);
  CHECK(r.f1 == 0.0);
  CHECK(r.roc_auc == 0.5);
  const std::vector<std::uint8_t> none(10, 0);
  CHECK(auprc(none, std::vector<double>(10, 0.4)) == 0.0);
  CHECK(roc_auc(none, std::vector<double>(10, 0.4)) == 0.5);
}

TEST_CASE("label inversion symmetry") {
  for (std::uint64_t k = 0; k < 50; ++k) {
    auto f = testing::random_fixture(k + 9000);
    // Keep clear of the threshold so inversion maps >= onto >= exactly.
    for (auto& p : f.probs) {
      if (p == 0.5) p = 0.6;
    }
    std::vector<std::uint8_t> yi;
    std::vector<double> pi;
    for (std::size_t i = 0; i < f.labels.size(); ++i) {
      yi.push_back(1 - f.labels[i]);
      pi.push_back(1 - f.probs[i]);
    }
    const auto a = compute_metrics(f.labels, f.probs);
    const auto b = compute_metrics(yi, pi);
    CHECK(a.accuracy == doctest::Approx(b.accuracy));
    CHECK(a.mcc == doctest::Approx(b.mcc));
    CHECK(a.balanced_accuracy == doctest::Approx(b.balanced_accuracy));
    CHECK(a.roc_auc == doctest::Approx(b.roc_auc));
    CHECK(a.cm.tp == b.cm.tn);
    CHECK(a.cm.fp == b.cm.fn);
  }
}

TEST_CASE("metric input validation") {
  const std::vector<std::uint8_t> y{0, 1};
  CHECK_THROWS_AS(compute_metrics(y, std::vector<double>{0.5}), LengthMismatch);
  CHECK_THROWS_AS(compute_metrics({}, {}), EmptyInput);
  CHECK_THROWS_AS(compute_metrics(y, std::vector<double>{0.5, 1.5}), InvalidArgument);
  const std::vector<std::uint8_t> one{1};
  CHECK_THROWS_AS(bootstrap_ci(one, std::vector<double>{0.5}, kAllMetrics, 10, 0), EmptyInput);
}

TEST_CASE("bootstrap intervals") {
  Rng rng(4);
  std::vector<std::uint8_t> y(1000);
  std::vector<double> p(1000);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = rng.bernoulli(0.3);
    p[i] = std::clamp(0.5 * y[i] + 0.5 * rng.uniform(), 0.0, 1.0);
  }
  const auto boot = bootstrap_ci(y, p, kAllMetrics, kDefaultResamples, 11);
  for (const auto m : kAllMetrics) {
    CHECK(boot.draws.at(m).size() == 599);
    CHECK(boot.intervals.at(m).draws == 599);
    CHECK(boot.intervals.at(m).low <= boot.intervals.at(m).high);
  }
  CHECK(boot.single_class_draws == 0);
  const auto again = bootstrap_ci(y, p, kAllMetrics, kDefaultResamples, 11);
  CHECK(again.draws == boot.draws);

  const std::vector<std::uint8_t> same(50, 1);
  const std::vector<double> right(50, 0.9);
  const auto flat = bootstrap_ci(same, right, kAllMetrics, 200, 3);
  CHECK(flat.intervals.at(Metric::accuracy).low == 1.0);
  CHECK(flat.intervals.at(Metric::accuracy).high == 1.0);
  CHECK(flat.single_class_draws == 200);
  CHECK(flat.intervals.at(Metric::f1).draws == 0);
}

TEST_CASE("point accuracy lies inside its percentile interval") {
  for (std::uint64_t k = 0; k < 100; ++k) {
    auto f = testing::random_fixture(k + 300);
    if (f.labels.size() < 2) continue;
    const auto r = compute_metrics(f.labels, f.probs, 0.5, true, k, 199);
    const auto& ci = r.cis->at(Metric::accuracy);
    CHECK(ci.low <= r.accuracy + 1e-12);
    CHECK(r.accuracy <= ci.high + 1e-12);
  }
}

TEST_CASE("stratified repeated cross-validation") {
  const auto ds = testing::synthetic_dataset(400, 0.3, 5);
  std::size_t pos = 0;
  for (const auto& r : ds.records) pos += ds.label_of(r) == Label::T;
  const std::size_t neg = ds.records.size() - pos;

  const auto a = stratified_fold_assignment(ds, 5, 42, 0);
  for (std::size_t f = 0; f < 5; ++f) {
    double fp = 0, fn = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] != f) continue;
      (ds.label_of(ds.records[i]) == Label::T ? fp : fn) += 1;
    }
    CHECK(std::abs(fp - pos / 5.0) <= 1.0);
    CHECK(std::abs(fn - neg / 5.0) <= 1.0);
  }
  CHECK(stratified_fold_assignment(ds, 5, 42, 0) == a);
  CHECK_FALSE(stratified_fold_assignment(ds, 5, 42, 1) == a);

  PipelineParams params;
  params.model = default_params(ModelKind::decision_tree);
  const auto cv = repeated_stratified_cv(ModelKind::decision_tree, ds, params, 5, 5, 42);
  CHECK(cv.fold_reports.size() == 25);
  for (const auto& fold : cv.fold_reports) CHECK(fold.metrics.accuracy > 0.8);
  CHECK(cv.aggregate.at(Metric::f1).mean > 0.8);
  CHECK(to_json(repeated_stratified_cv(ModelKind::decision_tree, ds, params, 5, 5, 42)).dump() ==
        to_json(cv).dump());

  // Each fold's vocabulary comes from its training part alone.
  const auto& fold = cv.fold_reports[7];
  const auto assign = stratified_fold_assignment(ds, 5, 42, fold.repeat);
  std::vector<std::size_t> train_pos;
  for (std::size_t i = 0; i < assign.size(); ++i) {
    if (assign[i] != fold.fold) train_pos.push_back(i);
  }
  CHECK(build_vocabulary(subset(ds, train_pos), params.vocabulary).digest == fold.vocabulary_digest);
}

TEST_CASE("too few records per class for the fold count") {
  auto ds = testing::synthetic_dataset(40, 0.0, 6);
  auto& labels = *ds.label_map;
  std::size_t flipped = 0;
  for (auto& [id, l] : labels) {
    if (flipped < 3) {
      l = Label::T;
      ++flipped;
    }
  }
  CHECK_THROWS_AS(stratified_fold_assignment(ds, 5, 1, 0), InsufficientClassCount);
}

TEST_CASE("cross evaluation with a frozen vocabulary") {
  const auto train = testing::synthetic_dataset(600, 0.3, 7);
  const auto test = testing::synthetic_dataset(300, 0.3, 8, 10000);
  const auto vocab = build_vocabulary(train, {});
  const ModelFile model{train_classifier(ModelKind::random_forest, binarize(train, vocab),
                                         default_params(ModelKind::random_forest), 1),
                        std::nullopt};
  const auto mat = binarize(test, vocab);
  const auto direct = compute_metrics(mat.labels, model.predict(mat));
  const auto crossed = cross_evaluate(model, vocab, {{"same", test}});
  REQUIRE(crossed.size() == 1);
  CHECK(crossed[0].first == "same");
  for (const auto m : kAllMetrics) CHECK(crossed[0].second.get(m) == direct.get(m));
  CHECK(crossed[0].second.cm == direct.cm);

  Dataset unseen;
  unseen.label_map.emplace();
  for (std::uint64_t i = 0; i < 4; ++i) {
    HttpMessageRecord r;
    r.record_id = i;
    r.remote_hostname = "h" + std::to_string(i) + ".example";
    r.headers = {{"x-never-seen-" + std::to_string(i), "v"}};
    unseen.records.push_back(r);
    (*unseen.label_map)[i] = i % 2 ? Label::T : Label::NT;
  }
  const auto zero = binarize(unseen, vocab);
  for (const auto& row : zero.rows) CHECK(row.empty());
  const double zero_score = model.base.predict_row({});
  for (const double p : model.predict(zero)) CHECK(p == zero_score);
  CHECK_NOTHROW(cross_evaluate(model, vocab, {{"unseen", unseen}}));

  auto other = vocab;
  other.digest = "elsewhere";
  CHECK_THROWS_AS(cross_evaluate(model, other, {{"same", test}}), VocabularyDigestMismatch);
  auto unlabeled = test;
  unlabeled.label_map.reset();
  CHECK_THROWS_AS(cross_evaluate(model, vocab, {{"u", unlabeled}}), UnlabeledDataset);
}

TEST_CASE("report table and plot data") {
  const std::vector<std::uint8_t> y{0, 0, 1, 1, 1};
  const std::vector<double> p{0.1, 0.6, 0.4, 0.8, 0.9};
  const auto plain = compute_metrics(y, p);
  const auto with_ci = compute_metrics(y, p, 0.5, true, 3, 99);
  const std::vector<ReportRow> rows{{"RF", plain}, {"ET", with_ci}};
  const auto table = format_metrics_table(rows);
  CHECK(table.rfind("Model", 0) == 0);
  for (const char* h : {"Accuracy", "Log-Loss", "ROC-AUC", "AUPRC", "BACC", "F1-Score", "Precision",
                        "Recall", "MCC", "FP", "TN", "FN", "TP"}) {
    CHECK(table.find(h) != std::string::npos);
  }
  std::size_t lines = 0;
  for (const char c : table) lines += c == '\n';
  CHECK(lines == 5);
  CHECK(table.find("[") != std::string::npos);

  const auto back = rows_from_json(report_json(rows));
  REQUIRE(back.size() == 2);
  CHECK(back[1].first == "ET");
  CHECK(to_json(back[1].second) == to_json(with_ci));
  CHECK(format_metrics_table(back) == table);

  const auto csv = curve_csvs(y, p);
  CHECK(csv.pr_csv.rfind("threshold,recall,precision\n", 0) == 0);
  CHECK(csv.roc_csv.rfind("threshold,fpr,tpr\n", 0) == 0);
  const auto roc = roc_curve(y, p);
  CHECK(roc.front().x == 0.0);
  CHECK(roc.front().y == 0.0);
  CHECK(roc.back().x == 1.0);
  CHECK(roc.back().y == 1.0);
  const auto bins = reliability_bins(y, p);
  CHECK(bins.size() == 10);
  std::uint64_t total = 0;
  for (const auto& b : bins) total += b.count;
  CHECK(total == 5);
}
