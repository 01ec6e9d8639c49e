#include "iwek/forest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "iwek/error.hpp"
#include "iwek/metrics.hpp"

namespace iwek {

std::string_view to_string(FeatureSubsample s) {
  return s == FeatureSubsample::kSqrt ? "sqrt" : "all";
}

FeatureSubsample feature_subsample_from_string(std::string_view s) {
  if (s == "sqrt") return FeatureSubsample::kSqrt;
  if (s == "all") return FeatureSubsample::kAll;
  throw ValidationError("unknown feature subsample mode '" + std::string(s) + "'");
}

RegressionTree::RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw ValidationError("tree without nodes");
  const int n = static_cast<int>(nodes_.size());
  for (const auto& node : nodes_) {
    if (node.is_leaf()) continue;
    if (node.left <= 0 || node.left >= n || node.right <= 0 || node.right >= n)
      throw ValidationError("tree node has dangling child index");
    if (!std::isfinite(node.threshold)) throw ValidationError("tree split threshold is not finite");
  }
}

int RegressionTree::leaf_index(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  int i = 0;
  while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
    const auto& node = nodes_[static_cast<std::size_t>(i)];
    i = x[node.feature] <= node.threshold ? node.left : node.right;
  }
  return i;
}

int RegressionTree::depth() const {
  std::vector<int> d(nodes_.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& node = nodes_[i];
    best = std::max(best, d[i]);
    if (!node.is_leaf()) {
      d[static_cast<std::size_t>(node.left)] = d[i] + 1;
      d[static_cast<std::size_t>(node.right)] = d[i] + 1;
    }
  }
  return best;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

namespace {

struct PendingNode {
  int index;
  int depth;
  std::vector<Eigen::Index> rows;
};

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
  std::size_t left_count = 0;
};

Split best_split(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                 std::vector<Eigen::Index>& rows, std::span<const int> features, int min_leaf,
                 double parent_score) {
  Split best;
  best.gain = parent_score;
  const std::size_t n = rows.size();
  const double tol = 1e-12 * std::max(1.0, std::abs(parent_score));
  for (int f : features) {
    std::stable_sort(rows.begin(), rows.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return X(a, f) < X(b, f); });
    double total = 0.0;
    for (auto r : rows) total += y[r];
    double left_sum = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
      left_sum += y[rows[k - 1]];
      const double a = X(rows[k - 1], f);
      const double b = X(rows[k], f);
      if (k < static_cast<std::size_t>(min_leaf) || n - k < static_cast<std::size_t>(min_leaf)) continue;
      if (!(a < b)) continue;
      const double right_sum = total - left_sum;
      const double score = left_sum * left_sum / static_cast<double>(k) +
                           right_sum * right_sum / static_cast<double>(n - k);
      if (score > best.gain + tol) {
        double thr = 0.5 * (a + b);
        if (!(thr < b)) thr = a;
        best = {f, thr, score, k};
      }
    }
  }
  return best;
}

}  // namespace

RegressionTree fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        std::span<const Eigen::Index> rows, const TreeParams& params, Rng& rng) {
  if (rows.empty()) throw DataError("fit_tree: no rows");
  if (params.min_leaf < 1 || params.max_depth < 0) throw DataError("fit_tree: invalid parameters");
  const int p = static_cast<int>(X.cols());
  const int n_features =
      params.subsample == FeatureSubsample::kSqrt
          ? std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p)))))
          : p;

  std::vector<TreeNode> nodes(1);
  std::vector<PendingNode> stack;
  stack.push_back({0, 0, std::vector<Eigen::Index>(rows.begin(), rows.end())});
  std::vector<int> all_features(static_cast<std::size_t>(p));
  std::iota(all_features.begin(), all_features.end(), 0);

  while (!stack.empty()) {
    PendingNode pending = std::move(stack.back());
    stack.pop_back();
    auto& rws = pending.rows;
    const double n = static_cast<double>(rws.size());
    double sum = 0.0, sumsq = 0.0;
    for (auto r : rws) {
      sum += y[r];
      sumsq += y[r] * y[r];
    }
    TreeNode leaf;
    leaf.value = sum / n;
    leaf.count = static_cast<int>(rws.size());
    const double sse = sumsq - sum * sum / n;

    bool can_split = pending.depth < params.max_depth &&
                     rws.size() >= 2 * static_cast<std::size_t>(params.min_leaf) &&
                     sse > 1e-14 * std::max(1.0, sumsq);
    Split split;
    if (can_split) {
      std::vector<int> features = all_features;
      if (n_features < p) {
        auto perm = random_permutation(static_cast<std::size_t>(p), rng);
        features.clear();
        for (int i = 0; i < n_features; ++i) features.push_back(static_cast<int>(perm[static_cast<std::size_t>(i)]));
        std::sort(features.begin(), features.end());
      }
      split = best_split(X, y, rws, features, params.min_leaf, sum * sum / n);
    }
    if (split.feature < 0) {
      nodes[static_cast<std::size_t>(pending.index)] = leaf;
      continue;
    }

    std::vector<Eigen::Index> left, right;
    for (auto r : rws) (X(r, split.feature) <= split.threshold ? left : right).push_back(r);
    TreeNode inner = leaf;
    inner.feature = split.feature;
    inner.threshold = split.threshold;
    inner.left = static_cast<int>(nodes.size());
    inner.right = inner.left + 1;
    nodes[static_cast<std::size_t>(pending.index)] = inner;
    nodes.emplace_back();
    nodes.emplace_back();
    // Right pushed first so the left subtree is expanded first.
    stack.push_back({inner.right, pending.depth + 1, std::move(right)});
    stack.push_back({inner.left, pending.depth + 1, std::move(left)});
  }
  return RegressionTree(std::move(nodes));
}

double Forest::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  double s = 0.0;
  for (const auto& t : trees) s += t.predict(x);
  return s / static_cast<double>(trees.size());
}

Eigen::VectorXd Forest::predict_rows(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = predict(X.row(i).transpose());
  return out;
}

Forest train_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    std::vector<std::string> knobs, const ForestParams& params,
                    std::uint64_t seed) {
  if (params.n_trees < 1) throw DataError("train_forest: need at least one tree");
  if (X.rows() != y.size() || X.rows() == 0) throw DataError("train_forest: shape mismatch");
  if (static_cast<Eigen::Index>(knobs.size()) != X.cols())
    throw DataError("train_forest: knob names do not match feature columns");

  Forest forest;
  forest.knobs = std::move(knobs);
  forest.params = params;
  const Eigen::Index n = X.rows();
  Eigen::VectorXd oob_sum = Eigen::VectorXd::Zero(n);
  Eigen::VectorXi oob_count = Eigen::VectorXi::Zero(n);
  TreeParams tp{params.max_depth, params.min_leaf, params.subsample};

  for (int t = 0; t < params.n_trees; ++t) {
    Rng rng(derive_seed(seed, "tree", static_cast<std::uint64_t>(t)));
    std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
    std::vector<char> in_bag(static_cast<std::size_t>(n), 0);
    for (auto& r : rows) {
      r = static_cast<Eigen::Index>(uniform_index(static_cast<std::size_t>(n), rng));
      in_bag[static_cast<std::size_t>(r)] = 1;
    }
    std::sort(rows.begin(), rows.end());
    forest.trees.push_back(fit_tree(X, y, rows, tp, rng));
    const auto& tree = forest.trees.back();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (in_bag[static_cast<std::size_t>(i)]) continue;
      oob_sum[i] += tree.predict(Eigen::VectorXd(X.row(i).transpose()));
      ++oob_count[i];
    }
  }

  std::vector<double> yt, yp;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (oob_count[i] == 0) continue;
    yt.push_back(y[i]);
    yp.push_back(oob_sum[i] / oob_count[i]);
  }
  forest.oob_r2 = -std::numeric_limits<double>::infinity();
  if (yt.size() >= 2) {
    Eigen::Map<const Eigen::VectorXd> a(yt.data(), static_cast<Eigen::Index>(yt.size()));
    Eigen::Map<const Eigen::VectorXd> b(yp.data(), static_cast<Eigen::Index>(yp.size()));
    if ((a.array() - a.mean()).square().sum() > 0.0) forest.oob_r2 = r_squared(a, b);
  }
  return forest;
}

}  // namespace iwek
