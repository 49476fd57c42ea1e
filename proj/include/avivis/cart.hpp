#pragma once
// Gini CART classification trees and bagged random forests.

#include <cmath>
#include <span>
#include <vector>

#include "avivis/blob.hpp"
#include "avivis/featstore.hpp"

namespace avivis {

struct TreeParams {
  int max_depth = 15;
  std::size_t min_samples_leaf = 5;
  // Features examined per split; 0 means all.
  std::size_t max_features = 0;
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::size_t samples = 0;
  std::vector<double> distribution;  // class frequencies of training samples, sums to 1
};

struct TreeModel {
  std::size_t n_features = 0;
  std::size_t n_classes = 0;
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::vector<double> importance;  // weighted impurity decrease per feature (unnormalized)

  const TreeNode& leaf_for(std::span<const double> row) const {
    const TreeNode* n = &nodes[0];
    while (n->feature >= 0) n = &nodes[static_cast<std::size_t>(row[static_cast<std::size_t>(n->feature)] <= n->threshold ? n->left : n->right)];
    return *n;
  }
  const std::vector<double>& predict_proba(std::span<const double> row) const { return leaf_for(row).distribution; }
  int predict(std::span<const double> row) const {
    const auto& d = predict_proba(row);
    return static_cast<int>(std::max_element(d.begin(), d.end()) - d.begin());
  }
  int depth() const {
    std::vector<int> depth(nodes.size(), 0);
    int mx = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i].feature < 0) continue;
      depth[static_cast<std::size_t>(nodes[i].left)] = depth[static_cast<std::size_t>(nodes[i].right)] = depth[i] + 1;
      mx = std::max(mx, depth[i] + 1);
    }
    return mx;
  }
};

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double child_impurity = 0.0;  // sample-weighted mean Gini of the children
};

inline double gini(std::span<const double> counts, double n) {
  if (n <= 0) return 0.0;
  double sq = 0.0;
  for (double c : counts) sq += c * c;
  return 1.0 - sq / (n * n);
}

/// Best Gini split of `samples` over the candidate features (scanned in the
/// given order, which callers keep ascending). Thresholds are midpoints
/// between consecutive distinct values; ties keep the earlier feature, then
/// the lower threshold.
inline SplitChoice best_gini_split(const FeatureMatrix& x, std::span<const std::size_t> samples,
                                   std::span<const std::size_t> features, std::size_t n_classes,
                                   std::size_t min_leaf) {
  SplitChoice best;
  best.child_impurity = std::numeric_limits<double>::infinity();
  const std::size_t n = samples.size();
  std::vector<std::pair<double, int>> col(n);
  std::vector<double> left(n_classes), right(n_classes);
  for (std::size_t f : features) {
    for (std::size_t i = 0; i < n; ++i) col[i] = {x.at(samples[i], f), x.labels[samples[i]]};
    std::sort(col.begin(), col.end());
    std::fill(left.begin(), left.end(), 0.0);
    std::fill(right.begin(), right.end(), 0.0);
    double left_sq = 0.0, right_sq = 0.0;
    for (const auto& [v, y] : col) right[static_cast<std::size_t>(y)] += 1.0;
    for (double c : right) right_sq += c * c;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto y = static_cast<std::size_t>(col[i].second);
      left_sq += 2.0 * left[y] + 1.0;
      left[y] += 1.0;
      right_sq -= 2.0 * right[y] - 1.0;
      right[y] -= 1.0;
      const std::size_t nl = i + 1, nr = n - nl;
      if (col[i].first >= col[i + 1].first || nl < min_leaf || nr < min_leaf) continue;
      const double dl = static_cast<double>(nl), dr = static_cast<double>(nr);
      const double imp = ((dl - left_sq / dl) + (dr - right_sq / dr)) / static_cast<double>(n);
      if (imp < best.child_impurity - 1e-12) {
        best.child_impurity = imp;
        best.feature = static_cast<int>(f);
        best.threshold = 0.5 * (col[i].first + col[i + 1].first);
      }
    }
  }
  return best;
}

/// Grows a tree on the given sample multiset (duplicates allowed for
/// bootstrap). `rng` is only consumed when max_features subsamples.
inline TreeModel grow_tree(const FeatureMatrix& x, std::vector<std::size_t> samples, std::size_t n_classes,
                           const TreeParams& params, Rng& rng) {
  TreeModel t;
  t.n_features = x.cols;
  t.n_classes = n_classes;
  t.importance.assign(x.cols, 0.0);
  const std::size_t m_try = params.max_features == 0 ? x.cols : std::min(params.max_features, x.cols);
  std::vector<std::size_t> all_features(x.cols);
  for (std::size_t i = 0; i < x.cols; ++i) all_features[i] = i;

  struct Task {
    std::size_t node, begin, end;
    int depth;
  };
  std::vector<Task> stack;
  t.nodes.emplace_back();
  stack.push_back({0, 0, samples.size(), 0});
  std::vector<std::size_t> feats;
  while (!stack.empty()) {
    const Task task = stack.back();
    stack.pop_back();
    std::span<std::size_t> s(samples.data() + task.begin, task.end - task.begin);
    std::vector<double> counts(n_classes, 0.0);
    for (std::size_t i : s) counts[static_cast<std::size_t>(x.labels[i])] += 1.0;
    const double n = static_cast<double>(s.size());
    TreeNode& node = t.nodes[task.node];
    node.samples = s.size();
    node.distribution = counts;
    for (auto& c : node.distribution) c /= n;
    const double parent_gini = gini(counts, n);
    if (task.depth >= params.max_depth || parent_gini <= 1e-12 || s.size() < 2 * params.min_samples_leaf ||
        s.size() < 2) {
      continue;
    }
    if (m_try == x.cols) {
      feats = all_features;
    } else {
      feats = all_features;
      for (std::size_t i = 0; i < m_try; ++i) std::swap(feats[i], feats[i + static_cast<std::size_t>(rng.below(feats.size() - i))]);
      feats.resize(m_try);
      std::sort(feats.begin(), feats.end());
    }
    const SplitChoice sc = best_gini_split(x, s, feats, n_classes, std::max<std::size_t>(params.min_samples_leaf, 1));
    if (sc.feature < 0 || parent_gini - sc.child_impurity <= 1e-12) continue;
    t.importance[static_cast<std::size_t>(sc.feature)] += n * (parent_gini - sc.child_impurity);
    auto mid = std::stable_partition(s.begin(), s.end(), [&](std::size_t i) {
      return x.at(i, static_cast<std::size_t>(sc.feature)) <= sc.threshold;
    });
    const std::size_t split_at = task.begin + static_cast<std::size_t>(mid - s.begin());
    const int left = static_cast<int>(t.nodes.size());
    const std::size_t node_index = task.node;
    t.nodes.emplace_back();
    t.nodes.emplace_back();
    TreeNode& parent = t.nodes[node_index];
    parent.feature = sc.feature;
    parent.threshold = sc.threshold;
    parent.left = left;
    parent.right = left + 1;
    stack.push_back({static_cast<std::size_t>(left + 1), split_at, task.end, task.depth + 1});
    stack.push_back({static_cast<std::size_t>(left), task.begin, split_at, task.depth + 1});
  }
  return t;
}

inline TreeModel train_tree(const FeatureMatrix& x, std::span<const std::size_t> train, const TreeParams& params,
                            std::uint64_t seed) {
  if (train.empty()) throw UsageError("tree training needs samples");
  Rng rng(derive_seed(seed, "tree"));
  return grow_tree(x, {train.begin(), train.end()}, std::max<std::size_t>(x.num_classes(), count_classes(x.labels)),
                   params, rng);
}

struct ForestParams {
  std::size_t n_trees = 100;
  bool bootstrap = true;
  // Features per split; 0 means floor(sqrt(D)).
  std::size_t max_features = 0;
  TreeParams tree{1000, 1, 0};
  std::size_t jobs = 1;
};

struct ForestModel {
  std::size_t n_classes = 0;
  std::vector<TreeModel> trees;

  std::vector<double> votes(std::span<const double> row) const {
    std::vector<double> v(n_classes, 0.0);
    for (const auto& t : trees) v[static_cast<std::size_t>(t.predict(row))] += 1.0;
    return v;
  }
  // Vote fractions.
  std::vector<double> predict_proba(std::span<const double> row) const {
    auto v = votes(row);
    for (auto& x : v) x /= static_cast<double>(trees.size());
    return v;
  }
  // Majority vote; ties go to the lowest class index.
  int predict(std::span<const double> row) const {
    const auto v = votes(row);
    return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
  }

  /// Mean decrease in impurity: per-tree importances normalized to sum 1,
  /// averaged, renormalized. Uniform when no tree ever split.
  std::vector<double> feature_importance() const {
    const std::size_t d = trees.empty() ? 0 : trees[0].n_features;
    std::vector<double> imp(d, 0.0);
    for (const auto& t : trees) {
      double total = 0.0;
      for (double v : t.importance) total += v;
      if (total <= 0.0) continue;
      for (std::size_t i = 0; i < d; ++i) imp[i] += t.importance[i] / total;
    }
    double total = 0.0;
    for (double v : imp) total += v;
    for (auto& v : imp) v = total > 0.0 ? v / total : 1.0 / static_cast<double>(d);
    return imp;
  }
};

/// Tree t draws its bootstrap sample and split features from
/// derive_seed(seed, t), so the result is independent of `jobs`.
inline ForestModel train_forest(const FeatureMatrix& x, std::span<const std::size_t> train, const ForestParams& params,
                                std::uint64_t seed) {
  if (train.empty()) throw UsageError("forest training needs samples");
  if (params.n_trees == 0) throw UsageError("forest needs at least one tree");
  ForestModel f;
  f.n_classes = std::max<std::size_t>(x.num_classes(), count_classes(x.labels));
  f.trees.resize(params.n_trees);
  TreeParams tp = params.tree;
  tp.max_features = params.max_features != 0
                        ? params.max_features
                        : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(x.cols)))));
  const std::uint64_t base = derive_seed(seed, "forest");
  parallel_for(params.n_trees, params.jobs, [&](std::size_t t) {
    Rng rng(derive_seed(base, t));
    std::vector<std::size_t> sample;
    if (params.bootstrap) {
      sample.resize(train.size());
      for (auto& s : sample) s = train[static_cast<std::size_t>(rng.below(train.size()))];
    } else {
      sample.assign(train.begin(), train.end());
    }
    f.trees[t] = grow_tree(x, std::move(sample), f.n_classes, tp, rng);
  });
  return f;
}

// ---- serialization

inline void append_tree(const TreeModel& t, const std::string& prefix, Blob& b) {
  auto& feat = b.arrays[prefix + "feature"];
  auto& thr = b.arrays[prefix + "threshold"];
  auto& kids = b.arrays[prefix + "children"];
  auto& dist = b.arrays[prefix + "distribution"];
  for (const auto& n : t.nodes) {
    feat.push_back(n.feature);
    thr.push_back(n.threshold);
    kids.push_back(n.left);
    kids.push_back(n.right);
    dist.insert(dist.end(), n.distribution.begin(), n.distribution.end());
  }
}

inline TreeModel read_tree(const Blob& b, const std::string& prefix, std::size_t n_features, std::size_t n_classes) {
  TreeModel t;
  t.n_features = n_features;
  t.n_classes = n_classes;
  const auto& feat = b.array(prefix + "feature");
  const auto& thr = b.array(prefix + "threshold");
  const auto& kids = b.array(prefix + "children");
  const auto& dist = b.array(prefix + "distribution");
  if (thr.size() != feat.size() || kids.size() != 2 * feat.size() || dist.size() != feat.size() * n_classes) {
    throw DataError("corrupt tree arrays");
  }
  t.nodes.resize(feat.size());
  for (std::size_t i = 0; i < feat.size(); ++i) {
    auto& n = t.nodes[i];
    n.feature = static_cast<int>(feat[i]);
    n.threshold = thr[i];
    n.left = static_cast<int>(kids[2 * i]);
    n.right = static_cast<int>(kids[2 * i + 1]);
    n.distribution.assign(dist.begin() + static_cast<std::ptrdiff_t>(i * n_classes),
                          dist.begin() + static_cast<std::ptrdiff_t>((i + 1) * n_classes));
    if (n.feature >= static_cast<int>(n_features) ||
        (n.feature >= 0 && (n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i) ||
                            n.right >= static_cast<int>(feat.size())))) {
      throw DataError("corrupt tree structure");
    }
  }
  return t;
}

}  // namespace avivis
