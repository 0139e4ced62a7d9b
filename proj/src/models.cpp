#include "trackhdr/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trackhdr/error.hpp"
#include "trackhdr/features.hpp"
#include "trackhdr/parallel.hpp"
#include "trackhdr/rng.hpp"
#include "tree_builder.hpp"

namespace trackhdr {

using detail::Criterion;
using detail::SampleStats;
using detail::TieBreak;
using detail::TreeOptions;

namespace {

constexpr double kProbClip = 1e-15;

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double clip(double p) { return std::clamp(p, kProbClip, 1.0 - kProbClip); }

std::vector<std::uint32_t> all_samples(std::size_t n) {
  std::vector<std::uint32_t> s(n);
  std::iota(s.begin(), s.end(), 0u);
  return s;
}

SampleStats unit_gini_stats(const BinaryFeatureMatrix& mat) {
  SampleStats st;
  st.a.assign(mat.n_rows, 1.0);
  st.b.resize(mat.n_rows);
  for (std::size_t i = 0; i < mat.n_rows; ++i) st.b[i] = mat.labels[i];
  return st;
}

double leaf_fraction(const TreeNode& leaf) {
  const double w = leaf.w_neg + leaf.w_pos;
  return w > 0.0 ? leaf.w_pos / w : 0.0;
}

std::size_t forest_features(const ModelParams& p, std::size_t d) {
  if (p.max_features > 0) return p.max_features;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))));
}

void fit_forest(TrainedClassifier& m, const BinaryFeatureMatrix& mat) {
  const bool extra = m.kind == ModelKind::extra_trees;
  TreeOptions opt;
  opt.max_depth = m.params.max_depth;
  opt.min_samples_leaf = m.params.min_samples_leaf;
  opt.max_features = forest_features(m.params, mat.dim);
  opt.tie_break = extra ? TieBreak::random : TieBreak::lowest_index;
  const bool bootstrap = !extra && m.params.bootstrap;
  m.trees.resize(m.params.n_estimators);
  parallel_for(m.params.n_estimators, [&](std::size_t t) {
    Rng rng(derive_seed(m.seed, t));
    SampleStats st;
    std::vector<std::uint32_t> samples;
    if (bootstrap) {
      std::vector<std::uint32_t> counts(mat.n_rows, 0);
      for (std::size_t i = 0; i < mat.n_rows; ++i) ++counts[rng.below(mat.n_rows)];
      st.a.resize(mat.n_rows);
      st.b.resize(mat.n_rows);
      for (std::uint32_t i = 0; i < mat.n_rows; ++i) {
        st.a[i] = counts[i];
        st.b[i] = counts[i] * static_cast<double>(mat.labels[i]);
        if (counts[i] > 0) samples.push_back(i);
      }
    } else {
      st = unit_gini_stats(mat);
      samples = all_samples(mat.n_rows);
    }
    m.trees[t] = detail::grow_tree(mat, samples, st, opt, rng);
  });
}

void fit_decision_tree(TrainedClassifier& m, const BinaryFeatureMatrix& mat) {
  TreeOptions opt;
  opt.max_depth = m.params.max_depth;
  opt.min_samples_leaf = m.params.min_samples_leaf;
  opt.max_features = m.params.max_features;
  Rng rng(derive_seed(m.seed, 0));
  const auto samples = all_samples(mat.n_rows);
  m.trees = {detail::grow_tree(mat, samples, unit_gini_stats(mat), opt, rng)};
}

void fit_naive_bayes(TrainedClassifier& m, const BinaryFeatureMatrix& mat) {
  const std::size_t d = mat.dim;
  std::array<double, 2> n_class{};
  std::array<std::vector<double>, 2> counts{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  for (std::size_t i = 0; i < mat.n_rows; ++i) {
    const int c = mat.labels[i];
    n_class[c] += 1.0;
    for (const auto f : mat.rows[i]) counts[c][f] += 1.0;
  }
  const double n = static_cast<double>(mat.n_rows);
  for (int c = 0; c < 2; ++c) {
    m.log_prior[c] = std::log(n_class[c] / n);
    m.log_present[c].resize(d);
    m.log_absent[c].resize(d);
  }
  if (m.params.nb_variant == NaiveBayesVariant::bernoulli) {
    const double a = m.params.alpha;
    for (int c = 0; c < 2; ++c) {
      for (std::size_t f = 0; f < d; ++f) {
        const double p = (counts[c][f] + a) / (n_class[c] + 2.0 * a);
        m.log_present[c][f] = std::log(p);
        m.log_absent[c][f] = std::log1p(-p);
      }
    }
    return;
  }
  // Gaussian likelihood of a 0/1 feature: mean = presence rate,
  // variance = rate * (1 - rate) + epsilon.
  double max_var = 0.0;
  for (std::size_t f = 0; f < d; ++f) {
    const double mu = (counts[0][f] + counts[1][f]) / n;
    max_var = std::max(max_var, mu * (1.0 - mu));
  }
  const double eps = m.params.var_smoothing * max_var;
  constexpr double kLog2Pi = 1.8378770664093453;
  for (int c = 0; c < 2; ++c) {
    for (std::size_t f = 0; f < d; ++f) {
      const double mu = counts[c][f] / n_class[c];
      const double var = mu * (1.0 - mu) + eps;
      if (var <= 0.0) {
        // Constant feature everywhere: contributes equally to both classes.
        m.log_present[c][f] = 0.0;
        m.log_absent[c][f] = 0.0;
        continue;
      }
      const double norm = -0.5 * (kLog2Pi + std::log(var));
      m.log_present[c][f] = norm - (1.0 - mu) * (1.0 - mu) / (2.0 * var);
      m.log_absent[c][f] = norm - mu * mu / (2.0 * var);
    }
  }
}

double dot_row(std::span<const double> w, std::span<const std::uint32_t> row) {
  double z = 0.0;
  for (const auto f : row) z += w[f];
  return z;
}

double squared_norm(const LossAndGradient& g) {
  double s = g.grad_b * g.grad_b;
  for (const double v : g.grad_w) s += v * v;
  return s;
}

// Nesterov-accelerated full-batch gradient descent, fixed step 1/L, with
// function-value restarts. Stops when the gradient norm reaches tolerance.
void fit_logistic(TrainedClassifier& m, const BinaryFeatureMatrix& mat) {
  const std::size_t d = mat.dim;
  std::size_t max_nnz = 0;
  for (const auto& r : mat.rows) max_nnz = std::max(max_nnz, r.size());
  // Hessian of the mean loss is bounded by 0.25 * max ||x_i||^2 (+ bias).
  const double lipschitz = 0.25 * static_cast<double>(max_nnz + 1) + m.params.l2;
  const double step = 1.0 / lipschitz;
  const double tol2 = m.params.tolerance * m.params.tolerance;

  std::vector<double> x(d, 0.0);
  double xb = 0.0;
  std::vector<double> y = x;
  double yb = xb;
  std::vector<double> x_prev = x;
  double xb_prev = xb;
  double t = 1.0;
  auto at_x = logistic_objective(mat, x, xb, m.params.l2);
  m.converged = squared_norm(at_x) <= tol2;
  std::size_t it = 0;
  while (!m.converged && it < m.params.max_iter) {
    ++it;
    const auto at_y = logistic_objective(mat, y, yb, m.params.l2);
    x_prev = x;
    xb_prev = xb;
    for (std::size_t f = 0; f < d; ++f) x[f] = y[f] - step * at_y.grad_w[f];
    xb = yb - step * at_y.grad_b;
    const double prev_loss = at_x.loss;
    at_x = logistic_objective(mat, x, xb, m.params.l2);
    if (squared_norm(at_x) <= tol2) {
      m.converged = true;
      break;
    }
    if (at_x.loss > prev_loss) {
      // Restart momentum from the previous iterate with a plain step.
      t = 1.0;
      const auto at_prev = logistic_objective(mat, x_prev, xb_prev, m.params.l2);
      for (std::size_t f = 0; f < d; ++f) x[f] = x_prev[f] - step * at_prev.grad_w[f];
      xb = xb_prev - step * at_prev.grad_b;
      at_x = logistic_objective(mat, x, xb, m.params.l2);
      y = x;
      yb = xb;
      if (squared_norm(at_x) <= tol2) m.converged = true;
      continue;
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = (t - 1.0) / t_next;
    for (std::size_t f = 0; f < d; ++f) y[f] = x[f] + beta * (x[f] - x_prev[f]);
    yb = xb + beta * (xb - xb_prev);
    t = t_next;
  }
  m.iterations = it;
  m.weights = std::move(x);
  m.bias = xb;
  if (!m.converged) {
    m.warnings.push_back("ConvergenceWarning: gradient norm above tolerance after max_iter");
  }
}

void fit_adaboost(TrainedClassifier& m, const BinaryFeatureMatrix& mat) {
  const std::size_t n = mat.n_rows;
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  TreeOptions opt;
  opt.max_depth = 1;
  Rng rng(derive_seed(m.seed, 0));
  const auto samples = all_samples(n);
  for (std::size_t stage = 0; stage < m.params.n_estimators; ++stage) {
    SampleStats st;
    st.a = w;
    st.b.resize(n);
    for (std::size_t i = 0; i < n; ++i) st.b[i] = w[i] * mat.labels[i];
    Tree stump = detail::grow_tree(mat, samples, st, opt, rng);
    double err = 0.0;
    double total = 0.0;
    std::vector<char> miss(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& leaf = stump.leaf(mat.rows[i]);
      const int pred = leaf.w_pos > leaf.w_neg ? 1 : 0;
      miss[i] = pred != mat.labels[i];
      if (miss[i]) err += w[i];
      total += w[i];
    }
    err /= total;
    if (err <= 0.0) {
      m.trees.push_back(std::move(stump));
      m.tree_weights.push_back(1.0);
      break;
    }
    if (err >= 0.5) {
      if (m.trees.empty()) {
        m.trees.push_back(std::move(stump));
        m.tree_weights.push_back(1.0);
      }
      break;
    }
    const double alpha = m.params.learning_rate * std::log((1.0 - err) / err);
    m.trees.push_back(std::move(stump));
    m.tree_weights.push_back(alpha);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (miss[i]) w[i] *= std::exp(alpha);
      sum += w[i];
    }
    for (auto& v : w) v /= sum;
  }
}

// Stagewise Newton boosting on the logistic loss. A stage whose shrunken
// step would raise the training loss is halved until it does not.
void fit_grad_boost(TrainedClassifier& m, const BinaryFeatureMatrix& mat) {
  const std::size_t n = mat.n_rows;
  const double prior = static_cast<double>(mat.positives()) / static_cast<double>(n);
  m.base_score = std::log(prior / (1.0 - prior));
  std::vector<double> score(n, m.base_score);
  std::vector<double> prob(n);
  for (std::size_t i = 0; i < n; ++i) prob[i] = sigmoid(score[i]);
  double loss = mean_log_loss(mat.labels, prob);
  m.training_loss.push_back(loss);

  TreeOptions opt;
  opt.criterion = Criterion::newton;
  opt.max_depth = m.params.max_depth;
  opt.min_samples_leaf = m.params.min_samples_leaf;
  opt.leaf_l2 = m.params.leaf_l2;
  Rng rng(derive_seed(m.seed, 0));
  const auto samples = all_samples(n);
  std::vector<double> leaf_out(n);
  std::vector<double> trial(n);
  for (std::size_t stage = 0; stage < m.params.n_estimators; ++stage) {
    SampleStats st;
    st.a.resize(n);
    st.b.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      st.a[i] = prob[i] - mat.labels[i];
      st.b[i] = prob[i] * (1.0 - prob[i]);
    }
    Tree tree = detail::grow_tree(mat, samples, st, opt, rng);
    if (tree.nodes.size() == 1 && std::abs(tree.nodes[0].value) < 1e-15) break;
    for (std::size_t i = 0; i < n; ++i) leaf_out[i] = tree.leaf(mat.rows[i]).value;
    double multiplier = m.params.learning_rate;
    double new_loss = loss;
    bool accepted = false;
    for (int halving = 0; halving < 30; ++halving) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = sigmoid(score[i] + multiplier * leaf_out[i]);
      new_loss = mean_log_loss(mat.labels, trial);
      if (new_loss <= loss) {
        accepted = true;
        break;
      }
      multiplier *= 0.5;
    }
    if (!accepted) break;
    for (std::size_t i = 0; i < n; ++i) {
      score[i] += multiplier * leaf_out[i];
      prob[i] = trial[i];
    }
    loss = new_loss;
    m.training_loss.push_back(loss);
    m.trees.push_back(std::move(tree));
    m.tree_weights.push_back(multiplier);
  }
}

nlohmann::json params_to_json(const ModelParams& p) {
  return {{"max_depth", p.max_depth},
          {"min_samples_leaf", p.min_samples_leaf},
          {"n_estimators", p.n_estimators},
          {"max_features", p.max_features},
          {"bootstrap", p.bootstrap},
          {"alpha", p.alpha},
          {"nb_variant", p.nb_variant == NaiveBayesVariant::bernoulli ? "bernoulli" : "gaussian"},
          {"var_smoothing", p.var_smoothing},
          {"l2", p.l2},
          {"tolerance", p.tolerance},
          {"max_iter", p.max_iter},
          {"learning_rate", p.learning_rate},
          {"leaf_l2", p.leaf_l2},
          {"preset", p.preset}};
}

ModelParams params_from_json(const nlohmann::json& j) {
  ModelParams p;
  p.max_depth = j.at("max_depth").get<int>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
  p.n_estimators = j.at("n_estimators").get<std::size_t>();
  p.max_features = j.at("max_features").get<std::size_t>();
  p.bootstrap = j.at("bootstrap").get<bool>();
  p.alpha = j.at("alpha").get<double>();
  p.nb_variant = j.at("nb_variant").get<std::string>() == "gaussian" ? NaiveBayesVariant::gaussian
                                                                      : NaiveBayesVariant::bernoulli;
  p.var_smoothing = j.at("var_smoothing").get<double>();
  p.l2 = j.at("l2").get<double>();
  p.tolerance = j.at("tolerance").get<double>();
  p.max_iter = j.at("max_iter").get<std::size_t>();
  p.learning_rate = j.at("learning_rate").get<double>();
  p.leaf_l2 = j.at("leaf_l2").get<double>();
  p.preset = j.at("preset").get<std::string>();
  return p;
}

}  // namespace

std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::decision_tree: return "decision_tree";
    case ModelKind::random_forest: return "random_forest";
    case ModelKind::extra_trees: return "extra_trees";
    case ModelKind::bernoulli_nb: return "bernoulli_nb";
    case ModelKind::logistic_regression: return "logistic_regression";
    case ModelKind::adaboost: return "adaboost";
    case ModelKind::grad_boost: return "grad_boost";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view s) {
  for (auto k : {ModelKind::decision_tree, ModelKind::random_forest, ModelKind::extra_trees,
                 ModelKind::bernoulli_nb, ModelKind::logistic_regression, ModelKind::adaboost,
                 ModelKind::grad_boost}) {
    if (to_string(k) == s) return k;
  }
  throw InvalidArgument("unknown model kind '" + std::string(s) + "'");
}

ModelParams default_params(ModelKind kind) {
  ModelParams p;
  switch (kind) {
    case ModelKind::decision_tree:
      p.n_estimators = 1;
      p.bootstrap = false;
      break;
    case ModelKind::random_forest:
      break;
    case ModelKind::extra_trees:
      p.bootstrap = false;
      break;
    case ModelKind::adaboost:
      p.n_estimators = 100;
      p.max_depth = 1;
      p.learning_rate = 1.0;
      break;
    case ModelKind::grad_boost:
      p.n_estimators = 200;
      p.max_depth = 6;
      p.learning_rate = 0.1;
      break;
    case ModelKind::bernoulli_nb:
    case ModelKind::logistic_regression:
      break;
  }
  return p;
}

std::pair<ModelKind, ModelParams> preset_params(std::string_view name) {
  auto gb = [&](std::size_t trees, int depth, double lr) {
    auto p = default_params(ModelKind::grad_boost);
    p.n_estimators = trees;
    p.max_depth = depth;
    p.learning_rate = lr;
    p.preset = std::string(name);
    return std::pair{ModelKind::grad_boost, p};
  };
  if (name == "gbm") return gb(100, 3, 0.1);
  if (name == "lgbm") return gb(100, 8, 0.1);
  if (name == "histgb") return gb(100, 8, 0.1);
  if (name == "xgboost") return gb(100, 6, 0.3);
  if (name == "gnb") {
    auto p = default_params(ModelKind::bernoulli_nb);
    p.nb_variant = NaiveBayesVariant::gaussian;
    p.preset = "gnb";
    return {ModelKind::bernoulli_nb, p};
  }
  const auto kind = parse_model_kind(name);
  return {kind, default_params(kind)};
}

const TreeNode& Tree::leaf(std::span<const std::uint32_t> row) const {
  const TreeNode* node = &nodes.front();
  while (node->feature >= 0) {
    const bool present =
        std::binary_search(row.begin(), row.end(), static_cast<std::uint32_t>(node->feature));
    node = &nodes[present ? node->present : node->absent];
  }
  return *node;
}

std::size_t Tree::depth() const {
  std::vector<std::size_t> depth(nodes.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, depth[i]);
    if (nodes[i].feature >= 0) {
      depth[nodes[i].absent] = depth[i] + 1;
      depth[nodes[i].present] = depth[i] + 1;
    }
  }
  return best;
}

bool TrainedClassifier::tree_based() const {
  return kind == ModelKind::decision_tree || kind == ModelKind::random_forest ||
         kind == ModelKind::extra_trees || kind == ModelKind::adaboost ||
         kind == ModelKind::grad_boost;
}

double TrainedClassifier::predict_row(std::span<const std::uint32_t> row) const {
  if (constant) return *constant;
  switch (kind) {
    case ModelKind::decision_tree:
    case ModelKind::random_forest:
    case ModelKind::extra_trees: {
      double sum = 0.0;
      for (const auto& t : trees) sum += leaf_fraction(t.leaf(row));
      return trees.empty() ? 0.0 : sum / static_cast<double>(trees.size());
    }
    case ModelKind::adaboost: {
      double margin = 0.0;
      double total = 0.0;
      for (std::size_t t = 0; t < trees.size(); ++t) {
        const auto& leaf = trees[t].leaf(row);
        margin += tree_weights[t] * (leaf.w_pos > leaf.w_neg ? 1.0 : -1.0);
        total += tree_weights[t];
      }
      return total > 0.0 ? sigmoid(2.0 * margin / total) : 0.5;
    }
    case ModelKind::grad_boost: {
      double f = base_score;
      for (std::size_t t = 0; t < trees.size(); ++t) f += tree_weights[t] * trees[t].leaf(row).value;
      return sigmoid(f);
    }
    case ModelKind::logistic_regression:
      return sigmoid(dot_row(weights, row) + bias);
    case ModelKind::bernoulli_nb: {
      std::array<double, 2> s{};
      for (int c = 0; c < 2; ++c) {
        s[c] = log_prior[c];
        for (const double v : log_absent[c]) s[c] += v;
        for (const auto f : row) s[c] += log_present[c][f] - log_absent[c][f];
      }
      return sigmoid(s[1] - s[0]);
    }
  }
  return 0.0;
}

TrainedClassifier train_classifier(ModelKind kind, const BinaryFeatureMatrix& mat,
                                   const ModelParams& params, std::uint64_t seed) {
  if (mat.n_rows == 0) throw EmptyMatrix("cannot train on an empty matrix");
  check_matrix(mat);
  TrainedClassifier m;
  m.kind = kind;
  m.params = params;
  m.seed = seed;
  m.vocabulary_digest = mat.vocabulary_digest;
  m.dim = mat.dim;
  const std::size_t pos = mat.positives();
  if (pos == 0 || pos == mat.n_rows) {
    m.constant = pos == 0 ? 0.0 : 1.0;
    m.warnings.push_back("SingleClassTraining: training labels contain one class");
    return m;
  }
  switch (kind) {
    case ModelKind::decision_tree: fit_decision_tree(m, mat); break;
    case ModelKind::random_forest:
    case ModelKind::extra_trees: fit_forest(m, mat); break;
    case ModelKind::bernoulli_nb: fit_naive_bayes(m, mat); break;
    case ModelKind::logistic_regression: fit_logistic(m, mat); break;
    case ModelKind::adaboost: fit_adaboost(m, mat); break;
    case ModelKind::grad_boost: fit_grad_boost(m, mat); break;
  }
  return m;
}

std::vector<double> predict_proba(const TrainedClassifier& model, const BinaryFeatureMatrix& mat) {
  expect_vocabulary(model.vocabulary_digest, mat.vocabulary_digest, "predict");
  std::vector<double> out(mat.n_rows);
  if (model.kind == ModelKind::bernoulli_nb && !model.constant) {
    // Hoist the all-absent baseline out of the per-row loop.
    std::array<double, 2> base{};
    for (int c = 0; c < 2; ++c) {
      base[c] = model.log_prior[c];
      for (const double v : model.log_absent[c]) base[c] += v;
    }
    parallel_for(mat.n_rows, [&](std::size_t i) {
      std::array<double, 2> s = base;
      for (int c = 0; c < 2; ++c) {
        for (const auto f : mat.rows[i]) s[c] += model.log_present[c][f] - model.log_absent[c][f];
      }
      out[i] = sigmoid(s[1] - s[0]);
    });
    return out;
  }
  parallel_for(mat.n_rows, [&](std::size_t i) { out[i] = model.predict_row(mat.rows[i]); });
  return out;
}

LossAndGradient logistic_objective(const BinaryFeatureMatrix& mat, std::span<const double> w,
                                   double b, double l2) {
  LossAndGradient out;
  out.grad_w.assign(mat.dim, 0.0);
  const double n = static_cast<double>(mat.n_rows);
  for (std::size_t i = 0; i < mat.n_rows; ++i) {
    const double z = dot_row(w, mat.rows[i]) + b;
    const double y = mat.labels[i];
    // log(1 + e^z) - y z, evaluated stably.
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    out.loss += softplus - y * z;
    const double r = sigmoid(z) - y;
    for (const auto f : mat.rows[i]) out.grad_w[f] += r;
    out.grad_b += r;
  }
  out.loss /= n;
  out.grad_b /= n;
  double reg = 0.0;
  for (std::size_t f = 0; f < mat.dim; ++f) {
    out.grad_w[f] = out.grad_w[f] / n + l2 * w[f];
    reg += w[f] * w[f];
  }
  out.loss += 0.5 * l2 * reg;
  return out;
}

double mean_log_loss(std::span<const std::uint8_t> labels, std::span<const double> probs) {
  double s = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = clip(probs[i]);
    s -= labels[i] ? std::log(p) : std::log1p(-p);
  }
  return labels.empty() ? 0.0 : s / static_cast<double>(labels.size());
}

nlohmann::json to_json(const TrainedClassifier& m) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : m.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      nodes.push_back({n.feature, n.absent, n.present, n.w_neg, n.w_pos, n.value, n.gain});
    }
    trees.push_back(std::move(nodes));
  }
  return {{"kind", std::string(to_string(m.kind))},
          {"params", params_to_json(m.params)},
          {"seed", m.seed},
          {"vocabulary_digest", m.vocabulary_digest},
          {"dim", m.dim},
          {"constant", m.constant ? nlohmann::json(*m.constant) : nlohmann::json(nullptr)},
          {"warnings", m.warnings},
          {"trees", std::move(trees)},
          {"tree_weights", m.tree_weights},
          {"base_score", m.base_score},
          {"training_loss", m.training_loss},
          {"weights", m.weights},
          {"bias", m.bias},
          {"iterations", m.iterations},
          {"converged", m.converged},
          {"log_prior", m.log_prior},
          {"log_present", m.log_present},
          {"log_absent", m.log_absent}};
}

TrainedClassifier classifier_from_json(const nlohmann::json& j) {
  TrainedClassifier m;
  try {
    m.kind = parse_model_kind(j.at("kind").get<std::string>());
    m.params = params_from_json(j.at("params"));
    m.seed = j.at("seed").get<std::uint64_t>();
    m.vocabulary_digest = j.at("vocabulary_digest").get<std::string>();
    m.dim = j.at("dim").get<std::size_t>();
    if (!j.at("constant").is_null()) m.constant = j.at("constant").get<double>();
    m.warnings = j.at("warnings").get<std::vector<std::string>>();
    for (const auto& t : j.at("trees")) {
      Tree tree;
      for (const auto& n : t) {
        tree.nodes.push_back({n.at(0).get<std::int32_t>(), n.at(1).get<std::uint32_t>(),
                              n.at(2).get<std::uint32_t>(), n.at(3).get<double>(),
                              n.at(4).get<double>(), n.at(5).get<double>(), n.at(6).get<double>()});
      }
      for (const auto& n : tree.nodes) {
        if (n.feature >= 0 && (n.absent >= tree.nodes.size() || n.present >= tree.nodes.size() ||
                               static_cast<std::size_t>(n.feature) >= m.dim)) {
          throw ParseError("model: tree node out of range");
        }
      }
      if (tree.nodes.empty()) throw ParseError("model: empty tree");
      m.trees.push_back(std::move(tree));
    }
    m.tree_weights = j.at("tree_weights").get<std::vector<double>>();
    m.base_score = j.at("base_score").get<double>();
    m.training_loss = j.at("training_loss").get<std::vector<double>>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.iterations = j.at("iterations").get<std::size_t>();
    m.converged = j.at("converged").get<bool>();
    m.log_prior = j.at("log_prior").get<std::array<double, 2>>();
    m.log_present = j.at("log_present").get<std::array<std::vector<double>, 2>>();
    m.log_absent = j.at("log_absent").get<std::array<std::vector<double>, 2>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
  return m;
}

}  // namespace trackhdr
