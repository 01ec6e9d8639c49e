#ifndef IWEK_FOREST_HPP
#define IWEK_FOREST_HPP

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "iwek/random.hpp"

namespace iwek {

enum class FeatureSubsample { kSqrt, kAll };

std::string_view to_string(FeatureSubsample s);
FeatureSubsample feature_subsample_from_string(std::string_view s);

// Flat node array; feature < 0 marks a leaf. Samples with
// x[feature] <= threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  int count = 0;

  bool is_leaf() const { return feature < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct TreeParams {
  int max_depth = 6;
  int min_leaf = 1;
  FeatureSubsample subsample = FeatureSubsample::kAll;
  bool operator==(const TreeParams&) const = default;
};

class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  int leaf_index(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return nodes_[static_cast<std::size_t>(leaf_index(x))].value;
  }
  int depth() const;
  std::size_t leaf_count() const;
  bool operator==(const RegressionTree&) const = default;

 private:
  std::vector<TreeNode> nodes_;
};

// Greedy variance-reduction CART on the given rows (repeats allowed, as in a
// bootstrap sample).
RegressionTree fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                        std::span<const Eigen::Index> rows, const TreeParams& params, Rng& rng);

struct ForestParams {
  int n_trees = 100;
  int max_depth = 6;
  int min_leaf = 1;
  FeatureSubsample subsample = FeatureSubsample::kSqrt;
  bool operator==(const ForestParams&) const = default;
};

struct Forest {
  std::vector<std::string> knobs;  // feature names, column order of X
  std::vector<RegressionTree> trees;
  ForestParams params;
  double oob_r2 = 0.0;

  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd predict_rows(const Eigen::MatrixXd& X) const;
  bool operator==(const Forest&) const = default;
};

// Bagged trees with out-of-bag R^2. oob_r2 is -inf when fewer than two rows
// were ever out of bag or their labels are constant.
Forest train_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                    std::vector<std::string> knobs, const ForestParams& params,
                    std::uint64_t seed);

}  // namespace iwek

#endif  // IWEK_FOREST_HPP
