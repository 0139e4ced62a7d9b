#include "tree_builder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace trackhdr::detail {
namespace {

double gini(double weight, double pos) {
  if (weight <= 0.0) return 0.0;
  const double p = pos / weight;
  return 2.0 * p * (1.0 - p);
}

double newton_score(double g, double h, double l2) { return g * g / (h + l2); }

struct PendingNode {
  std::uint32_t index;
  std::vector<std::uint32_t> samples;
  int depth;
};

}  // namespace

Tree grow_tree(const BinaryFeatureMatrix& mat, std::span<const std::uint32_t> samples,
               const SampleStats& stats, const TreeOptions& options, Rng& rng) {
  const std::size_t d = mat.dim;
  std::vector<double> acc_a(d, 0.0);
  std::vector<double> acc_b(d, 0.0);
  std::vector<std::uint32_t> acc_n(d, 0);
  std::vector<std::uint32_t> touched;
  std::vector<std::uint32_t> candidates;
  std::vector<std::uint32_t> ties;

  Tree tree;
  tree.nodes.emplace_back();
  std::vector<PendingNode> stack;
  stack.push_back({0, std::vector<std::uint32_t>(samples.begin(), samples.end()), 0});

  while (!stack.empty()) {
    PendingNode node = std::move(stack.back());
    stack.pop_back();

    double total_a = 0.0;
    double total_b = 0.0;
    for (const auto s : node.samples) {
      total_a += stats.a[s];
      total_b += stats.b[s];
    }
    const auto count = static_cast<std::uint32_t>(node.samples.size());
    {
      TreeNode& out = tree.nodes[node.index];
      if (options.criterion == Criterion::gini) {
        out.w_neg = total_a - total_b;
        out.w_pos = total_b;
      } else {
        out.value = -total_a / (total_b + options.leaf_l2);
        out.w_neg = count;
      }
    }

    bool leaf = count < 2 * std::max<std::size_t>(1, options.min_samples_leaf);
    if (options.max_depth > 0 && node.depth >= options.max_depth) leaf = true;
    if (options.criterion == Criterion::gini) {
      const double tol = 1e-12 * std::max(1.0, total_a);
      if (total_b <= tol || total_a - total_b <= tol) leaf = true;
    }
    if (leaf) continue;

    touched.clear();
    for (const auto s : node.samples) {
      for (const auto f : mat.rows[s]) {
        if (acc_n[f] == 0) touched.push_back(f);
        acc_a[f] += stats.a[s];
        acc_b[f] += stats.b[s];
        ++acc_n[f];
      }
    }
    std::sort(touched.begin(), touched.end());
    candidates.clear();
    for (const auto f : touched) {
      if (acc_n[f] >= options.min_samples_leaf && count - acc_n[f] >= options.min_samples_leaf &&
          acc_n[f] < count) {
        candidates.push_back(f);
      }
    }
    if (options.max_features > 0 && candidates.size() > options.max_features) {
      for (std::size_t i = 0; i < options.max_features; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(candidates.size() - i));
        std::swap(candidates[i], candidates[j]);
      }
      candidates.resize(options.max_features);
      std::sort(candidates.begin(), candidates.end());
    }

    double best = -std::numeric_limits<double>::infinity();
    std::int32_t best_feature = -1;
    ties.clear();
    const double parent_score = options.criterion == Criterion::gini
                                    ? total_a * gini(total_a, total_b)
                                    : newton_score(total_a, total_b, options.leaf_l2);
    for (const auto f : candidates) {
      const double pa = acc_a[f];
      const double pb = acc_b[f];
      double decrease = 0.0;
      if (options.criterion == Criterion::gini) {
        decrease = parent_score - pa * gini(pa, pb) - (total_a - pa) * gini(total_a - pa, total_b - pb);
      } else {
        decrease = newton_score(pa, pb, options.leaf_l2) +
                   newton_score(total_a - pa, total_b - pb, options.leaf_l2) - parent_score;
      }
      if (options.tie_break == TieBreak::random) {
        const double tol = 1e-12 * std::max(1.0, std::abs(decrease));
        if (decrease > best + tol) {
          best = decrease;
          ties.assign(1, f);
        } else if (std::abs(decrease - best) <= tol) {
          ties.push_back(f);
        }
      } else if (decrease > best) {
        best = decrease;
        best_feature = static_cast<std::int32_t>(f);
      }
    }
    if (options.tie_break == TieBreak::random && !ties.empty()) {
      best_feature = static_cast<std::int32_t>(ties[rng.below(ties.size())]);
    }
    for (const auto f : touched) {
      acc_a[f] = 0.0;
      acc_b[f] = 0.0;
      acc_n[f] = 0;
    }
    if (best_feature < 0) continue;
    if (options.criterion == Criterion::newton && !(best > 1e-12)) continue;

    std::vector<std::uint32_t> absent;
    std::vector<std::uint32_t> present;
    const auto feature = static_cast<std::uint32_t>(best_feature);
    for (const auto s : node.samples) {
      (mat.has(s, feature) ? present : absent).push_back(s);
    }
    const auto absent_index = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    const auto present_index = static_cast<std::uint32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    TreeNode& out = tree.nodes[node.index];
    out.feature = best_feature;
    out.absent = absent_index;
    out.present = present_index;
    out.gain = std::max(0.0, best);
    // Present child is pushed first so the absent subtree is expanded first.
    stack.push_back({present_index, std::move(present), node.depth + 1});
    stack.push_back({absent_index, std::move(absent), node.depth + 1});
  }
  return tree;
}

}  // namespace trackhdr::detail
