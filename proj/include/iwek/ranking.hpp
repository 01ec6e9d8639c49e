#ifndef IWEK_RANKING_HPP
#define IWEK_RANKING_HPP

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "iwek/core.hpp"
#include "iwek/forest.hpp"

namespace iwek {

enum class RegressorKind { kRidge, kDecisionTree, kRandomForest };

std::string_view to_string(RegressorKind kind);

// Ridge on standardized features.
struct RidgeModel {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;
  Eigen::VectorXd coef;
  double intercept = 0.0;
  double alpha = 1.0;
};

// One member of the ranking ensemble. Prediction is deterministic after fit;
// `seed` also keys the model's permutation streams inside rank_knobs.
class RegressorHandle {
 public:
  explicit RegressorHandle(RegressorKind kind, std::uint64_t seed = 0);

  RegressorKind kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }
  bool fitted() const { return !std::holds_alternative<std::monostate>(state_); }

  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;

  // R^2 on the data passed to the last rank_knobs call.
  double score() const { return score_; }
  void set_score(double s) { score_ = s; }

 private:
  RegressorKind kind_;
  std::uint64_t seed_;
  std::variant<std::monostate, RidgeModel, RegressionTree, Forest> state_;
  double score_ = 0.0;
};

// ridge-linear, depth-5 decision tree, 100-tree random forest.
std::vector<RegressorHandle> default_ensemble(std::uint64_t seed);

struct RankOptions {
  int repeats = 5;
};

// Ensemble permutation importance. For every model m with train-time R^2 s
// and every knob k, W[k] += (s - mean_r s'_r) * max(s, 0), where s'_r is the
// R^2 after permuting column k. Unfitted models are fitted on D first.
KnobRanking rank_knobs(std::vector<RegressorHandle>& models, const KPDataset& D,
                       std::span<const std::string> knobs, std::uint64_t seed,
                       const RankOptions& options = {});

// First k knob names by descending score, ties lexicographic.
std::vector<std::string> top_k(const KnobRanking& W, std::size_t k);

}  // namespace iwek

#endif  // IWEK_RANKING_HPP
