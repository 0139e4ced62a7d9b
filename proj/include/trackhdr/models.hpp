#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "trackhdr/matrix.hpp"

namespace trackhdr {

enum class ModelKind {
  decision_tree,
  random_forest,
  extra_trees,
  bernoulli_nb,
  logistic_regression,
  adaboost,
  grad_boost
};

std::string_view to_string(ModelKind k);
ModelKind parse_model_kind(std::string_view s);

enum class NaiveBayesVariant { bernoulli, gaussian };

// Union of the per-family hyperparameters. Only the fields relevant to the
// kind are used; all of them are written to the model file.
struct ModelParams {
  // Trees. max_depth 0 means unlimited.
  int max_depth = 0;
  std::size_t min_samples_leaf = 1;
  std::size_t n_estimators = 100;
  // Candidate features per node; 0 = floor(sqrt(d)) for forests and all
  // features for a single tree.
  std::size_t max_features = 0;
  bool bootstrap = true;
  // Naive Bayes.
  double alpha = 1.0;
  NaiveBayesVariant nb_variant = NaiveBayesVariant::bernoulli;
  double var_smoothing = 1e-9;
  // Logistic regression.
  double l2 = 1e-4;
  double tolerance = 1e-6;
  std::size_t max_iter = 10000;
  // Boosting.
  double learning_rate = 0.1;
  double leaf_l2 = 1.0;
  std::string preset;

  bool operator==(const ModelParams&) const = default;
};

ModelParams default_params(ModelKind kind);

// Named parameter profiles. "gbm", "lgbm", "histgb" and "xgboost" all map
// to grad_boost; "gnb" is bernoulli_nb in Gaussian mode.
std::pair<ModelKind, ModelParams> preset_params(std::string_view name);

struct TreeNode {
  // -1 marks a leaf.
  std::int32_t feature = -1;
  std::uint32_t absent = 0;
  std::uint32_t present = 0;
  // Weighted class mass reaching the node (classification trees).
  double w_neg = 0.0;
  double w_pos = 0.0;
  // Leaf output (regression trees).
  double value = 0.0;
  // Impurity decrease (or Newton gain) of the split at this node.
  double gain = 0.0;

  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;

  const TreeNode& leaf(std::span<const std::uint32_t> row) const;
  std::size_t depth() const;
  bool operator==(const Tree&) const = default;
};

struct TrainedClassifier {
  ModelKind kind = ModelKind::decision_tree;
  ModelParams params;
  std::uint64_t seed = 0;
  std::string vocabulary_digest;
  std::size_t dim = 0;

  // Set when training saw a single class; every prediction is this value.
  std::optional<double> constant;
  std::vector<std::string> warnings;

  // Tree families: DT (1 tree), forests, AdaBoost stumps, boosting trees.
  std::vector<Tree> trees;
  // AdaBoost stage weights / boosting per-tree multipliers.
  std::vector<double> tree_weights;
  // Boosting: initial log-odds; training logistic loss after each stage
  // (index 0 is the initial loss).
  double base_score = 0.0;
  std::vector<double> training_loss;

  // Logistic regression.
  std::vector<double> weights;
  double bias = 0.0;
  std::size_t iterations = 0;
  bool converged = false;

  // Naive Bayes: per class (0 = NT, 1 = T) log prior and per-feature log
  // likelihoods of the feature being present / absent.
  std::array<double, 2> log_prior{};
  std::array<std::vector<double>, 2> log_present;
  std::array<std::vector<double>, 2> log_absent;

  bool operator==(const TrainedClassifier&) const = default;

  bool tree_based() const;
  double predict_row(std::span<const std::uint32_t> row) const;
};

// Fits one of the families on a binary matrix with the given seed. Single
// class training data yields a constant predictor and a warning.
TrainedClassifier train_classifier(ModelKind kind, const BinaryFeatureMatrix& mat,
                                   const ModelParams& params, std::uint64_t seed);

// Checks the vocabulary digest, then scores every row (values in [0,1]).
std::vector<double> predict_proba(const TrainedClassifier& model, const BinaryFeatureMatrix& mat);

// Mean L2-regularised logistic loss and its gradient (weights then bias).
struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> grad_w;
  double grad_b = 0.0;
};
LossAndGradient logistic_objective(const BinaryFeatureMatrix& mat, std::span<const double> w,
                                   double b, double l2);

// Mean logistic loss with clipping; used for boosting diagnostics.
double mean_log_loss(std::span<const std::uint8_t> labels, std::span<const double> probs);

nlohmann::json to_json(const TrainedClassifier& m);
TrainedClassifier classifier_from_json(const nlohmann::json& j);

}  // namespace trackhdr
