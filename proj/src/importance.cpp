#include "trackhdr/importance.hpp"

#include <algorithm>

#include "trackhdr/error.hpp"
#include "trackhdr/features.hpp"
#include "trackhdr/parallel.hpp"
#include "trackhdr/rng.hpp"

namespace trackhdr {

namespace {

std::vector<double> impurity_importance(const TrainedClassifier& m) {
  if (!m.tree_based()) {
    throw MethodModelMismatch("impurity importance needs a tree-based model, got " +
                              std::string(to_string(m.kind)));
  }
  std::vector<double> total(m.dim, 0.0);
  double weight_sum = 0.0;
  std::vector<double> per_tree(m.dim);
  for (std::size_t t = 0; t < m.trees.size(); ++t) {
    std::fill(per_tree.begin(), per_tree.end(), 0.0);
    double tree_sum = 0.0;
    for (const auto& node : m.trees[t].nodes) {
      if (node.feature < 0) continue;
      per_tree[static_cast<std::size_t>(node.feature)] += node.gain;
      tree_sum += node.gain;
    }
    if (tree_sum <= 0.0) continue;
    const double w = m.kind == ModelKind::adaboost ? m.tree_weights[t] : 1.0;
    for (std::size_t f = 0; f < m.dim; ++f) total[f] += w * per_tree[f] / tree_sum;
    weight_sum += w;
  }
  if (weight_sum > 0.0) {
    for (auto& v : total) v /= weight_sum;
  }
  return total;
}

std::vector<double> permutation_importance(const ModelFile& model, const BinaryFeatureMatrix& mat,
                                           Metric metric, std::uint64_t seed, std::size_t repeats) {
  const auto base = model.predict(mat);
  const double reference = compute_metric(metric, mat.labels, base);
  const double sign = higher_is_better(metric) ? 1.0 : -1.0;
  std::vector<double> out(mat.dim, 0.0);
  parallel_for(mat.dim, [&](std::size_t f) {
    const auto col = static_cast<std::uint32_t>(f);
    std::vector<std::uint8_t> column(mat.n_rows);
    for (std::size_t i = 0; i < mat.n_rows; ++i) column[i] = mat.has(i, col);
    double sum = 0.0;
    for (std::size_t r = 0; r < repeats; ++r) {
      std::vector<std::uint8_t> shuffled = column;
      Rng rng(derive_seed(seed, f * repeats + r));
      rng.shuffle(std::span<std::uint8_t>(shuffled));
      std::vector<double> probs = base;
      std::vector<std::uint32_t> row;
      for (std::size_t i = 0; i < mat.n_rows; ++i) {
        if (shuffled[i] == column[i]) continue;
        row = mat.rows[i];
        if (shuffled[i]) {
          row.insert(std::lower_bound(row.begin(), row.end(), col), col);
        } else {
          row.erase(std::lower_bound(row.begin(), row.end(), col));
        }
        double p = model.base.predict_row(row);
        if (model.mapping) p = (*model.mapping)(p);
        probs[i] = p;
      }
      sum += sign * (reference - compute_metric(metric, mat.labels, probs));
    }
    out[f] = sum / static_cast<double>(repeats);
  });
  return out;
}

}  // namespace

std::string_view to_string(ImportanceMethod m) {
  return m == ImportanceMethod::impurity ? "impurity" : "permutation";
}

ImportanceMethod parse_importance_method(std::string_view s) {
  if (s == "impurity") return ImportanceMethod::impurity;
  if (s == "permutation") return ImportanceMethod::permutation;
  throw InvalidArgument("unknown importance method '" + std::string(s) + "'");
}

ImportanceReport compute_feature_importance(const ModelFile& model, const BinaryFeatureMatrix& mat,
                                            const std::vector<std::string>& columns, Metric metric,
                                            ImportanceMethod method, std::uint64_t seed,
                                            std::size_t repeats) {
  expect_vocabulary(model.vocabulary_digest(), mat.vocabulary_digest, "importance");
  if (columns.size() != mat.dim) throw LengthMismatch("importance: column names do not match matrix");
  if (repeats == 0) throw InvalidArgument("importance: repeats must be positive");
  ImportanceReport r;
  r.method = method;
  r.metric = metric;
  r.columns = columns;
  r.seed = seed;
  if (method == ImportanceMethod::impurity) {
    r.raw = impurity_importance(model.base);
  } else {
    if (mat.n_rows == 0) throw EmptyMatrix("permutation importance needs rows");
    r.repeats = repeats;
    r.raw = permutation_importance(model, mat, metric, seed, repeats);
  }
  r.scores.resize(r.raw.size());
  double top = 0.0;
  for (std::size_t f = 0; f < r.raw.size(); ++f) {
    r.scores[f] = std::max(0.0, r.raw[f]);
    top = std::max(top, r.scores[f]);
  }
  if (top > 0.0) {
    for (auto& s : r.scores) s /= top;
  }
  return r;
}

nlohmann::json to_json(const ImportanceReport& r) {
  std::vector<std::size_t> order(r.columns.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return r.scores[a] > r.scores[b]; });
  nlohmann::json rows = nlohmann::json::array();
  for (const auto f : order) {
    rows.push_back({{"header", r.columns[f]}, {"score", r.scores[f]}, {"raw", r.raw[f]}});
  }
  nlohmann::json j = {{"method", std::string(to_string(r.method))}, {"seed", r.seed}, {"features", rows}};
  if (r.method == ImportanceMethod::permutation) {
    j["metric"] = std::string(to_string(r.metric));
    j["repeats"] = r.repeats;
  }
  return j;
}

}  // namespace trackhdr
