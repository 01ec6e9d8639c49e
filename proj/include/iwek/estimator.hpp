#ifndef IWEK_ESTIMATOR_HPP
#define IWEK_ESTIMATOR_HPP

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iwek/core.hpp"
#include "iwek/forest.hpp"

namespace iwek {

// Half-open interval (lo, hi]; infinite bounds mean unconstrained.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double v) const { return v > lo && v <= hi; }
  bool empty() const { return !(lo < hi); }
  bool operator==(const Interval&) const = default;
};

struct RuleSource {
  int tree = 0;
  int leaf = 0;  // node index of the leaf within its tree
  auto operator<=>(const RuleSource&) const = default;
};

// Conjunction of per-knob interval constraints from one root-to-leaf path.
struct Rule {
  std::map<std::string, Interval> conjuncts;
  RuleSource source;

  std::string to_string() const;
  bool operator==(const Rule&) const = default;
};

using RuleSet = std::vector<Rule>;

// One rule per root-to-leaf path; constraints on the same knob intersected;
// rules with identical conjunct sets merged (the earliest source is kept).
RuleSet extract_rules(const Forest& forest);

// Binary activation matrix: V(i, j) = 1 iff config i satisfies rule j.
// Missing knobs in a config take the universe default.
Eigen::SparseMatrix<double> encode(const RuleSet& rules, std::span<const KnobConfig> X,
                                   const KnobUniverse& universe);
Eigen::SparseMatrix<double> encode(const RuleSet& rules, const Eigen::MatrixXd& X,
                                   const KnobUniverse& universe);

struct RuleContribution {
  std::size_t index = 0;  // position in the estimator's rule set
  Rule rule;
  double weight = 0.0;
};

struct ProfilePoint {
  double value = 0.0;
  double prediction = 0.0;
};

// Rule-weighted performance estimator: prediction = b + sum_j w_j v_j(x).
// Immutable after construction; safe for concurrent prediction.
class InterpretableEstimator {
 public:
  InterpretableEstimator() = default;
  // Validates invariants (|w| = |rules|, finite weights, rule knobs inside the
  // universe, non-empty intervals) and throws ValidationError otherwise.
  InterpretableEstimator(std::vector<KnobSpec> knobs, RuleSet rules, Eigen::VectorXd weights,
                         double intercept, double lambda, std::optional<Forest> forest = std::nullopt);

  const KnobUniverse& universe() const { return universe_; }
  const RuleSet& rules() const { return rules_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  double intercept() const { return intercept_; }
  double lambda() const { return lambda_; }
  const std::optional<Forest>& forest() const { return forest_; }
  std::size_t nonzero_count() const;

  double predict_row(const Eigen::Ref<const Eigen::VectorXd>& row) const;
  Eigen::VectorXd predict_rows(const Eigen::MatrixXd& X) const;
  bool rule_active(std::size_t j, const Eigen::Ref<const Eigen::VectorXd>& row) const;

  bool operator==(const InterpretableEstimator& other) const;

 private:
  struct Conjunct {
    Eigen::Index feature;
    double lo;
    double hi;
  };
  KnobUniverse universe_;
  RuleSet rules_;
  Eigen::VectorXd weights_;
  double intercept_ = 0.0;
  double lambda_ = 0.0;
  std::optional<Forest> forest_;
  std::vector<std::vector<Conjunct>> compiled_;
  std::vector<std::size_t> nonzero_;
};

struct ForestSearchSpace {
  int min_trees = 10, max_trees = 200;
  int min_depth = 2, max_depth = 10;
  int min_leaf_lo = 1, min_leaf_hi = 10;
  int initial_random_trials = 10;
};

struct ForestTrial {
  ForestParams params;
  double oob_r2 = 0.0;
};

// Sequential model-based forest search: the first trials are sampled at
// random, later ones perturb the incumbent. Maximizes out-of-bag R^2.
// Requires at least 20 rows and non-constant labels.
Forest fit_forest(const KPDataset& D, int budget, std::uint64_t seed,
                  const ForestSearchSpace& space = {}, std::vector<ForestTrial>* trials = nullptr);

struct IkeOptions {
  int budget = 30;
  int folds = 5;
  std::vector<double> lambdas;  // empty: 20 log-spaced points in [1e-4, 1e1]
};

InterpretableEstimator fit_ike(const KPDataset& D, std::uint64_t seed, const IkeOptions& options = {});

double predict(const InterpretableEstimator& m, const KnobConfig& x);

// Active rules with non-zero weight, by descending |weight|, ties by rule
// source.
std::vector<RuleContribution> explain(const InterpretableEstimator& m, const KnobConfig& x);

std::vector<ProfilePoint> knob_weight_profile(const InterpretableEstimator& m, std::string_view knob,
                                              std::span<const double> grid, const KnobConfig& base);

std::vector<double> linear_grid(const KnobSpec& spec, int points);

}  // namespace iwek

#endif  // IWEK_ESTIMATOR_HPP
