#include <doctest.h>

#include <cmath>
#include <limits>

#include "support/synthetic.hpp"
#include "trackhdr/calibration.hpp"
#include "trackhdr/error.hpp"
#include "trackhdr/importance.hpp"
#include "trackhdr/metrics.hpp"
#include "trackhdr/models.hpp"
#include "trackhdr/parallel.hpp"
#include "trackhdr/rng.hpp"

using namespace trackhdr;

namespace {

BinaryFeatureMatrix from_dense(const std::vector<std::vector<int>>& x, const std::vector<int>& y) {
  BinaryFeatureMatrix m;
  m.n_rows = x.size();
  m.dim = x.empty() ? 0 : x[0].size();
  m.vocabulary_digest = "dense";
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<std::uint32_t> row;
    for (std::size_t f = 0; f < x[i].size(); ++f) {
      if (x[i][f]) row.push_back(static_cast<std::uint32_t>(f));
    }
    m.rows.push_back(row);
    m.labels.push_back(static_cast<std::uint8_t>(y[i]));
  }
  return m;
}

ModelParams small(ModelKind kind) {
  auto p = default_params(kind);
  if (kind == ModelKind::random_forest || kind == ModelKind::extra_trees) p.n_estimators = 20;
  if (kind == ModelKind::grad_boost) p.n_estimators = 30;
  if (kind == ModelKind::adaboost) p.n_estimators = 30;
  return p;
}

constexpr ModelKind kKinds[] = {ModelKind::decision_tree, ModelKind::random_forest,
                                ModelKind::extra_trees,   ModelKind::bernoulli_nb,
                                ModelKind::logistic_regression, ModelKind::adaboost,
                                ModelKind::grad_boost};

double accuracy_of(const std::vector<double>& p, const std::vector<std::uint8_t>& y) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < y.size(); ++i) ok += (p[i] >= 0.5) == (y[i] == 1);
  return static_cast<double>(ok) / static_cast<double>(y.size());
}

}  // namespace

TEST_CASE("decision tree separates an OR fixture") {
  auto m = testing::random_matrix(200, 6, 0.3, 0.5, 3);
  for (std::size_t i = 0; i < m.n_rows; ++i) m.labels[i] = m.has(i, 0) || m.has(i, 1);
  const auto model = train_classifier(ModelKind::decision_tree, m, default_params(ModelKind::decision_tree), 1);
  CHECK(model.trees[0].depth() >= 2);
  CHECK(accuracy_of(predict_proba(model, m), m.labels) == 1.0);
}

TEST_CASE("single-class training yields a constant predictor") {
  auto m = testing::random_matrix(50, 5, 0.3, 1.0, 4);
  for (const auto kind : kKinds) {
    const auto model = train_classifier(kind, m, small(kind), 1);
    REQUIRE(model.constant.has_value());
    CHECK(model.warnings.size() == 1);
    CHECK(model.warnings[0].rfind("SingleClassTraining", 0) == 0);
    for (const double p : predict_proba(model, m)) CHECK(p == 1.0);
  }
  BinaryFeatureMatrix empty;
  CHECK_THROWS_AS(train_classifier(ModelKind::decision_tree, empty, {}, 1), EmptyMatrix);
}

TEST_CASE("Bernoulli naive Bayes posterior by hand") {
  const auto m = from_dense({{1, 0}, {1, 1}, {0, 1}, {0, 0}}, {1, 1, 0, 0});
  const auto model = train_classifier(ModelKind::bernoulli_nb, m, default_params(ModelKind::bernoulli_nb), 0);
  // T: p(f0)=3/4, p(f1)=1/2; NT: p(f0)=1/4, p(f1)=1/2; equal priors.
  const double t = 0.5 * 0.75 * 0.5;
  const double nt = 0.5 * 0.25 * 0.5;
  CHECK(predict_proba(model, m)[0] == doctest::Approx(t / (t + nt)).epsilon(1e-12));
  CHECK(t / (t + nt) == doctest::Approx(0.75));
}

TEST_CASE("Gaussian naive Bayes mode runs on binary data") {
  const auto [kind, params] = preset_params("gnb");
  CHECK(kind == ModelKind::bernoulli_nb);
  CHECK(params.nb_variant == NaiveBayesVariant::gaussian);
  const auto m = testing::planted_matrix({600, 20, 6, 0.4, 0.7, 0.1, 0.05, 0.0, 2});
  const auto model = train_classifier(kind, m, params, 0);
  CHECK(accuracy_of(predict_proba(model, m), m.labels) > 0.8);
}

TEST_CASE("forest of one unbootstrapped tree over all features equals the tree") {
  const auto m = testing::planted_matrix({400, 15, 6, 0.3, 0.6, 0.1, 0.1, 0.1, 5});
  auto rf = default_params(ModelKind::random_forest);
  rf.n_estimators = 1;
  rf.bootstrap = false;
  rf.max_features = m.dim;
  const auto forest = train_classifier(ModelKind::random_forest, m, rf, 42);
  const auto tree = train_classifier(ModelKind::decision_tree, m, default_params(ModelKind::decision_tree), 42);
  CHECK(forest.trees[0] == tree.trees[0]);
  CHECK(predict_proba(forest, m) == predict_proba(tree, m));
}

TEST_CASE("root split equals exhaustive Gini search") {
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    Rng rng(trial);
    const auto n = 2 + rng.below(63);
    const auto d = 1 + rng.below(12);
    auto m = testing::random_matrix(n, d, 0.2 + 0.6 * rng.uniform(), 0.2 + 0.6 * rng.uniform(), trial);
    const std::size_t pos = m.positives();
    const auto model = train_classifier(ModelKind::decision_tree, m, default_params(ModelKind::decision_tree), 0);
    if (pos == 0 || pos == n) continue;
    // Oracle: smallest weighted child impurity over features with both sides
    // non-empty.
    double best = std::numeric_limits<double>::infinity();
    for (std::uint32_t f = 0; f < d; ++f) {
      double n1 = 0, p1 = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (m.has(i, f)) {
          n1 += 1;
          p1 += m.labels[i];
        }
      }
      const double n0 = static_cast<double>(n) - n1;
      const double p0 = static_cast<double>(pos) - p1;
      if (n1 == 0 || n0 == 0) continue;
      const double imp = n1 * 2 * (p1 / n1) * (1 - p1 / n1) + n0 * 2 * (p0 / n0) * (1 - p0 / n0);
      best = std::min(best, imp);
    }
    const auto& root = model.trees[0].nodes[0];
    if (!std::isfinite(best)) {
      CHECK(root.feature == -1);
      continue;
    }
    REQUIRE(root.feature >= 0);
    const auto f = static_cast<std::uint32_t>(root.feature);
    double n1 = 0, p1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (m.has(i, f)) {
        n1 += 1;
        p1 += m.labels[i];
      }
    }
    const double n0 = static_cast<double>(n) - n1;
    const double p0 = static_cast<double>(pos) - p1;
    const double chosen = n1 * 2 * (p1 / n1) * (1 - p1 / n1) + n0 * 2 * (p0 / n0) * (1 - p0 / n0);
    CHECK(chosen == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("training is deterministic and independent of the thread count") {
  const auto m = testing::planted_matrix({800, 40, 8, 0.3, 0.6, 0.1, 0.05, 0.05, 9});
  const auto before = thread_count();
  for (const auto kind : kKinds) {
    set_thread_count(1);
    const auto a = train_classifier(kind, m, small(kind), 7);
    set_thread_count(4);
    const auto b = train_classifier(kind, m, small(kind), 7);
    CHECK(a == b);
    CHECK(predict_proba(a, m) == predict_proba(b, m));
    const auto c = train_classifier(kind, m, small(kind), 8);
    if (kind == ModelKind::random_forest || kind == ModelKind::extra_trees) CHECK_FALSE(a == c);
  }
  set_thread_count(before);
}

TEST_CASE("every family learns the planted signal and stays in [0,1]") {
  const auto train = testing::planted_matrix({2000, 50, 8, 0.3, 0.6, 0.1, 0.05, 0.0, 10});
  const auto test = testing::planted_matrix({1000, 50, 8, 0.3, 0.6, 0.1, 0.05, 0.0, 11});
  for (const auto kind : kKinds) {
    const auto model = train_classifier(kind, train, small(kind), 3);
    const auto p = predict_proba(model, test);
    for (const double v : p) CHECK((v >= 0.0 && v <= 1.0));
    INFO(to_string(kind));
    CHECK(roc_auc(test.labels, p) > (kind == ModelKind::decision_tree ? 0.85 : 0.9));
  }
}

TEST_CASE("model serialization reproduces predictions bit for bit") {
  const auto m = testing::planted_matrix({500, 30, 6, 0.3, 0.6, 0.1, 0.05, 0.05, 12});
  for (const auto kind : kKinds) {
    const auto model = train_classifier(kind, m, small(kind), 5);
    const auto text = serialize_model(model);
    const auto back = deserialize_model(text);
    CHECK(back.base == model);
    CHECK_FALSE(back.mapping.has_value());
    CHECK(back.predict(m) == predict_proba(model, m));
    CHECK(serialize_model(back.base) == text);
  }
}

TEST_CASE("model files detect tampering and version drift") {
  const auto m = testing::planted_matrix({100, 10, 4, 0.3, 0.6, 0.1, 0.05, 0.0, 13});
  auto j = nlohmann::json::parse(serialize_model(train_classifier(ModelKind::bernoulli_nb, m, {}, 1)));
  j["body"]["classifier"]["seed"] = 99;
  CHECK_THROWS_AS(deserialize_model(j.dump()), DigestMismatch);
  j["v"] = 2;
  CHECK_THROWS_AS(deserialize_model(j.dump()), SchemaVersionError);
  CHECK_THROWS_AS(deserialize_model("{oops"), ParseError);
}

TEST_CASE("prediction checks the vocabulary digest") {
  auto m = testing::planted_matrix({100, 10, 4, 0.3, 0.6, 0.1, 0.05, 0.0, 14});
  const auto model = train_classifier(ModelKind::decision_tree, m, {}, 1);
  m.vocabulary_digest = "different";
  CHECK_THROWS_AS(predict_proba(model, m), VocabularyDigestMismatch);
}

TEST_CASE("boosting training loss never increases") {
  const auto m = testing::planted_matrix({1500, 60, 8, 0.3, 0.6, 0.1, 0.05, 0.05, 15});
  for (const char* preset : {"gbm", "lgbm", "histgb", "xgboost"}) {
    const auto [kind, params] = preset_params(preset);
    CHECK(kind == ModelKind::grad_boost);
    const auto model = train_classifier(kind, m, params, 1);
    REQUIRE(model.training_loss.size() == model.trees.size() + 1);
    for (std::size_t s = 1; s < model.training_loss.size(); ++s) {
      CHECK(model.training_loss[s] <= model.training_loss[s - 1]);
    }
    CHECK(model.training_loss.back() < model.training_loss.front());
  }
}

TEST_CASE("logistic gradient matches central finite differences") {
  const auto m = testing::planted_matrix({120, 8, 4, 0.4, 0.6, 0.2, 0.2, 0.1, 16});
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> w(m.dim);
    for (auto& v : w) v = rng.uniform() * 2 - 1;
    const double b = rng.uniform() - 0.5;
    const double l2 = 0.01;
    const auto g = logistic_objective(m, w, b, l2);
    const double h = 1e-5;
    for (std::size_t f = 0; f <= m.dim; ++f) {
      auto wp = w, wm = w;
      double bp = b, bm = b;
      if (f < m.dim) {
        wp[f] += h;
        wm[f] -= h;
      } else {
        bp += h;
        bm -= h;
      }
      const double numeric = (logistic_objective(m, wp, bp, l2).loss - logistic_objective(m, wm, bm, l2).loss) / (2 * h);
      const double analytic = f < m.dim ? g.grad_w[f] : g.grad_b;
      CHECK(std::abs(numeric - analytic) <= 1e-4 * std::max(1e-3, std::abs(analytic)));
    }
  }
}

TEST_CASE("logistic regression converges to the tolerance") {
  const auto m = testing::planted_matrix({1000, 30, 6, 0.3, 0.6, 0.1, 0.05, 0.05, 17});
  const auto model = train_classifier(ModelKind::logistic_regression, m, default_params(ModelKind::logistic_regression), 1);
  CHECK(model.converged);
  const auto g = logistic_objective(m, model.weights, model.bias, model.params.l2);
  double norm = g.grad_b * g.grad_b;
  for (const double v : g.grad_w) norm += v * v;
  CHECK(std::sqrt(norm) <= model.params.tolerance);
}

TEST_CASE("AdaBoost weights stumps and maps the margin through a logistic") {
  const auto m = testing::planted_matrix({800, 20, 6, 0.3, 0.6, 0.1, 0.05, 0.0, 18});
  const auto model = train_classifier(ModelKind::adaboost, m, small(ModelKind::adaboost), 1);
  CHECK(!model.trees.empty());
  for (const auto& t : model.trees) CHECK(t.depth() <= 1);
  for (const double a : model.tree_weights) CHECK(a > 0.0);
}

// ---------------------------------------------------------------- calibration

TEST_CASE("PAV hand trace") {
  const std::vector<double> s{0.1, 0.35, 0.4, 0.8};
  const std::vector<std::uint8_t> y{0, 1, 0, 1};
  const auto fit = fit_isotonic(s, y);
  CHECK(fit.fitted == std::vector<double>{0.0, 0.5, 0.5, 1.0});
  CHECK(fit.mapping(0.0) == 0.0);
  CHECK(fit.mapping(0.37) == 0.5);
  CHECK(fit.mapping(0.9) == 1.0);
}

TEST_CASE("perfect ranking gives a 0/1 step") {
  const std::vector<double> s{0.1, 0.2, 0.3, 0.7, 0.8};
  const std::vector<std::uint8_t> y{0, 0, 0, 1, 1};
  const auto fit = fit_isotonic(s, y);
  CHECK(fit.mapping.values == std::vector<double>{0.0, 1.0});
  CHECK(fit.mapping.thresholds == std::vector<double>{0.1, 0.7});
}

TEST_CASE("tied scores are pooled") {
  const std::vector<double> s{0.5, 0.5, 0.5, 0.9};
  const std::vector<std::uint8_t> y{1, 0, 0, 1};
  const auto fit = fit_isotonic(s, y);
  CHECK(fit.fitted[0] == doctest::Approx(1.0 / 3));
  CHECK(fit.fitted[1] == fit.fitted[0]);
}

TEST_CASE("isotonic fits are monotone and never worsen calibration-set log-loss") {
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Rng rng(trial + 1000);
    const auto n = 2 + rng.below(200);
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = std::round(rng.uniform() * 50) / 50;
      y[i] = rng.bernoulli(0.2 + 0.6 * s[i]);
    }
    y[0] = 0;
    y[1] = 1;
    const auto fit = fit_isotonic(s, y);
    for (std::size_t k = 1; k < fit.mapping.values.size(); ++k) {
      CHECK(fit.mapping.values[k] >= fit.mapping.values[k - 1]);
    }
    std::vector<double> mapped(n);
    for (std::size_t i = 0; i < n; ++i) mapped[i] = fit.mapping(s[i]);
    CHECK(mapped == fit.fitted);
    CHECK(log_loss(y, mapped) <= log_loss(y, s) + 1e-12);
  }
}

TEST_CASE("calibrated model composes the mapping with the base scores") {
  const auto train = testing::planted_matrix({800, 20, 6, 0.3, 0.6, 0.1, 0.05, 0.05, 19});
  const auto cal = testing::planted_matrix({300, 20, 6, 0.3, 0.6, 0.1, 0.05, 0.05, 20});
  const auto base = train_classifier(ModelKind::random_forest, train, small(ModelKind::random_forest), 2);
  const auto calibrated = calibrate_isotonic(base, cal);
  const auto raw = predict_proba(base, train);
  const auto out = predict_proba(calibrated, train);
  for (std::size_t i = 0; i < raw.size(); ++i) CHECK(out[i] == calibrated.mapping(raw[i]));
  const auto back = deserialize_model(serialize_model(calibrated));
  REQUIRE(back.mapping.has_value());
  CHECK(*back.mapping == calibrated.mapping);
  CHECK(back.predict(train) == out);

  auto one_class = cal;
  std::fill(one_class.labels.begin(), one_class.labels.end(), 0);
  CHECK_THROWS_AS(calibrate_isotonic(base, one_class), SingleClassCalibration);
}

// ----------------------------------------------------------------- importance

TEST_CASE("impurity importance concentrates on the informative column") {
  auto m = testing::random_matrix(400, 10, 0.5, 0.5, 21);
  for (std::size_t i = 0; i < m.n_rows; ++i) m.labels[i] = m.has(i, 0);
  const std::vector<std::string> names{"c0", "c1", "c2", "c3", "c4", "c5", "c6", "c7", "c8", "c9"};
  for (const auto kind : {ModelKind::decision_tree, ModelKind::random_forest, ModelKind::extra_trees,
                          ModelKind::adaboost, ModelKind::grad_boost}) {
    const ModelFile file{train_classifier(kind, m, small(kind), 3), std::nullopt};
    const auto r = compute_feature_importance(file, m, names, Metric::f1, ImportanceMethod::impurity, 0);
    double sum = 0;
    for (const double v : r.raw) sum += v;
    INFO(to_string(kind));
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.raw[0] >= 0.9);
    for (std::size_t f = 1; f < 10; ++f) CHECK(r.raw[f] < r.raw[0]);
    CHECK(r.scores[0] == 1.0);
  }
}

TEST_CASE("permutation importance") {
  auto m = testing::random_matrix(300, 6, 0.4, 0.5, 22);
  for (auto& row : m.rows) row.erase(std::remove(row.begin(), row.end(), 5u), row.end());
  for (std::size_t i = 0; i < m.n_rows; ++i) m.labels[i] = m.has(i, 0);
  const std::vector<std::string> names{"a", "b", "c", "d", "e", "zero"};
  const ModelFile file{train_classifier(ModelKind::logistic_regression, m, {}, 1), std::nullopt};
  const auto r = compute_feature_importance(file, m, names, Metric::f1, ImportanceMethod::permutation, 4);
  CHECK(std::abs(r.raw[5]) < 1e-9);
  CHECK(r.scores[0] == 1.0);
  CHECK(r.repeats == 5);
  const auto again = compute_feature_importance(file, m, names, Metric::f1, ImportanceMethod::permutation, 4);
  CHECK(again.raw == r.raw);
  CHECK_THROWS_AS(compute_feature_importance(file, m, names, Metric::f1, ImportanceMethod::impurity, 0),
                  MethodModelMismatch);
}
