#include <gtest/gtest.h>

#include <set>

#include "iwek/estimator.hpp"
#include "support.hpp"

using namespace iwek;
using test::continuous;
using test::integer;

namespace {

TreeNode split(int feature, double threshold, int left, int right) {
  TreeNode n;
  n.feature = feature;
  n.threshold = threshold;
  n.left = left;
  n.right = right;
  return n;
}

TreeNode leaf(double value) {
  TreeNode n;
  n.value = value;
  n.count = 1;
  return n;
}

Forest forest_of(std::vector<std::string> knobs, std::vector<std::vector<TreeNode>> trees) {
  Forest f;
  f.knobs = std::move(knobs);
  for (auto& t : trees) f.trees.emplace_back(std::move(t));
  return f;
}

bool has_rule(const RuleSet& rules, const std::map<std::string, Interval>& conjuncts) {
  return std::any_of(rules.begin(), rules.end(), [&](const Rule& r) { return r.conjuncts == conjuncts; });
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST(ExtractRules, TwoLevelTreeYieldsTheBufferRule) {
  // shared_buffers <= 400 ? (work_mem <= 400 ? 3 : 2) : 1
  const Forest f = forest_of({"shared_buffers", "work_mem"},
                             {{split(0, 400, 1, 2), split(1, 400, 3, 4), leaf(1), leaf(3), leaf(2)}});
  const RuleSet rules = extract_rules(f);
  ASSERT_EQ(rules.size(), 3u);
  EXPECT_TRUE(has_rule(rules, {{"shared_buffers", {-kInf, 400}}, {"work_mem", {-kInf, 400}}}));
  EXPECT_TRUE(has_rule(rules, {{"shared_buffers", {-kInf, 400}}, {"work_mem", {400, kInf}}}));
  EXPECT_TRUE(has_rule(rules, {{"shared_buffers", {400, kInf}}}));
  EXPECT_NE(std::find_if(rules.begin(), rules.end(),
                         [](const Rule& r) { return r.to_string() == "shared_buffers <= 400 & work_mem <= 400"; }),
            rules.end());
}

TEST(ExtractRules, DepthOneTreeHasTwoRules) {
  const Forest f = forest_of({"x"}, {{split(0, 5, 1, 2), leaf(0), leaf(1)}});
  EXPECT_EQ(extract_rules(f).size(), 2u);
}

TEST(ExtractRules, NestedConstraintsIntersect) {
  const Forest f = forest_of({"x"}, {{split(0, 10, 1, 4), split(0, 5, 2, 3), leaf(0), leaf(1), leaf(2)}});
  const RuleSet rules = extract_rules(f);
  EXPECT_TRUE(has_rule(rules, {{"x", {-kInf, 5}}}));
  EXPECT_TRUE(has_rule(rules, {{"x", {5, 10}}}));
  EXPECT_TRUE(has_rule(rules, {{"x", {10, kInf}}}));
}

TEST(ExtractRules, IdenticalPathsAcrossTreesMerge) {
  const Forest f = forest_of({"x"}, {{split(0, 5, 1, 2), leaf(0), leaf(1)}, {split(0, 5, 1, 2), leaf(7), leaf(8)}});
  const RuleSet rules = extract_rules(f);
  ASSERT_EQ(rules.size(), 2u);
  for (const auto& r : rules) EXPECT_EQ(r.source.tree, 0);
}

TEST(Interval, HalfOpen) {
  const Interval iv{1, 2};
  EXPECT_FALSE(iv.contains(1));
  EXPECT_TRUE(iv.contains(2));
  EXPECT_TRUE(Interval{}.contains(-1e300));
}

TEST(Encode, HandCase) {
  const KnobUniverse u({continuous("a", 0, 10, 0), continuous("b", 0, 10, 0)});
  Rule r1, r2, r3;
  r1.conjuncts = {{"a", {-kInf, 5}}};
  r2.conjuncts = {{"a", {2, kInf}}, {"b", {-kInf, 3}}};
  const std::vector<KnobConfig> X = {{{"a", 1}, {"b", 4}}, {{"a", 5}, {"b", 3}}};
  const Eigen::MatrixXd V(encode({r1, r2, r3}, X, u));
  Eigen::MatrixXd expected(2, 3);
  expected << 1, 0, 1,  //
      1, 1, 1;
  EXPECT_EQ(V, expected);
}

TEST(Predict, SumsActiveWeights) {
  const std::vector<KnobSpec> knobs = {continuous("a", 0, 10, 0)};
  Rule r;
  r.conjuncts = {{"a", {5, kInf}}};
  const InterpretableEstimator m(knobs, {r}, Eigen::VectorXd::Constant(1, 2.0), 0.0, 0.1);
  EXPECT_EQ(predict(m, {{"a", 1}}), 0.0);
  EXPECT_EQ(predict(m, {{"a", 6}}), 2.0);
  EXPECT_THROW(predict(m, {{"b", 1}}), ValidationError);
  EXPECT_THROW(predict(m, {{"a", 11}}), ValidationError);
}

TEST(InterpretableEstimator, RejectsInconsistentState) {
  const std::vector<KnobSpec> knobs = {continuous("a", 0, 10, 0)};
  Rule r;
  r.conjuncts = {{"zz", {5, kInf}}};
  EXPECT_THROW(InterpretableEstimator(knobs, {r}, Eigen::VectorXd::Ones(1), 0, 0), ValidationError);
  EXPECT_THROW(InterpretableEstimator(knobs, {Rule{}}, Eigen::VectorXd::Ones(2), 0, 0), ValidationError);
  EXPECT_THROW(InterpretableEstimator(knobs, {Rule{}}, Eigen::VectorXd::Constant(1, NAN), 0, 0), ValidationError);
}

TEST(Explain, ActiveNonZeroRulesByMagnitude) {
  const std::vector<KnobSpec> knobs = {continuous("a", 0, 10, 0)};
  RuleSet rules(4);
  rules[0].conjuncts = {{"a", {-kInf, 5}}};
  rules[0].source = {0, 1};
  rules[1].conjuncts = {{"a", {-kInf, 8}}};
  rules[1].source = {1, 1};
  rules[2].conjuncts = {{"a", {8, kInf}}};
  rules[2].source = {2, 1};
  rules[3].conjuncts = {{"a", {-kInf, 9}}};
  rules[3].source = {3, 1};
  Eigen::VectorXd w(4);
  w << 1.0, -1.0, 5.0, 0.0;
  const InterpretableEstimator m(knobs, rules, w, 3.0, 0.1);
  const auto xs = explain(m, {{"a", 1}});
  ASSERT_EQ(xs.size(), 2u);  // rule 2 inactive, rule 3 zero weight
  EXPECT_EQ(xs[0].index, 0u);
  EXPECT_EQ(xs[1].index, 1u);

  const InterpretableEstimator zero(knobs, rules, Eigen::VectorXd::Zero(4), 3.0, 0.1);
  EXPECT_TRUE(explain(zero, {{"a", 1}}).empty());
}

TEST(KnobWeightProfile, HandCaseWithTwoRules) {
  const std::vector<KnobSpec> knobs = {continuous("a", 0, 10, 0), continuous("b", 0, 10, 0)};
  Rule r1, r2;
  r1.conjuncts = {{"a", {-kInf, 3}}};
  r2.conjuncts = {{"a", {6, kInf}}};
  const InterpretableEstimator m(knobs, {r1, r2}, Eigen::Vector2d(1.0, -2.0), 5.0, 0.1);
  const std::vector<double> grid = {0, 2, 3, 4, 6, 7, 10};
  const auto p = knob_weight_profile(m, "a", grid, KnobConfig{});
  const std::vector<double> expected = {6, 6, 6, 5, 5, 3, 3};
  ASSERT_EQ(p.size(), grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_EQ(p[i].value, grid[i]);
    EXPECT_EQ(p[i].prediction, expected[i]);
  }
  for (const auto& q : knob_weight_profile(m, "b", grid, KnobConfig{})) EXPECT_EQ(q.prediction, 6.0);
}

TEST(FitForest, BudgetOneAndDeterminism) {
  const KPDataset D = test::sample_kp(test::suite()[0], 40, 4);
  std::vector<ForestTrial> trials;
  const Forest f = fit_forest(D, 1, 3, {}, &trials);
  EXPECT_EQ(trials.size(), 1u);
  EXPECT_EQ(f.params, trials[0].params);
  EXPECT_EQ(fit_forest(D, 6, 3), fit_forest(D, 6, 3));
}

TEST(FitForest, StepFunctionIsLearnt) {
  KPDataset D;
  D.knobs = {continuous("x", 0, 1, 0.5), continuous("noise", 0, 1, 0.5)};
  Rng rng(1);
  for (int i = 0; i < 60; ++i) {
    const double x = uniform01(rng);
    D.X.push_back({{"x", x}, {"noise", uniform01(rng)}});
    D.y.push_back(x > 0.4 ? 1.0 : 0.0);
  }
  EXPECT_GE(fit_forest(D, 30, 2).oob_r2, 0.9);
}

TEST(FitForest, Guards) {
  KPDataset D = test::sample_kp(test::suite()[0], 40, 4);
  std::fill(D.y.begin(), D.y.end(), 1.0);
  EXPECT_THROW(fit_forest(D, 5, 0), DataError);
  EXPECT_THROW(fit_ike(D, 0), DataError);
  EXPECT_THROW(fit_forest(test::sample_kp(test::suite()[0], 10, 4), 5, 0), DataError);
}

class FittedIke : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    data_ = new KPDataset(test::sample_kp(test::suite()[1], 70, 9));
    IkeOptions o;
    o.budget = 8;
    model_ = new InterpretableEstimator(fit_ike(*data_, 5, o));
  }
  static void TearDownTestSuite() {
    delete model_;
    delete data_;
  }
  static KPDataset* data_;
  static InterpretableEstimator* model_;
};
KPDataset* FittedIke::data_ = nullptr;
InterpretableEstimator* FittedIke::model_ = nullptr;

TEST_F(FittedIke, Deterministic) {
  IkeOptions o;
  o.budget = 8;
  EXPECT_EQ(fit_ike(*data_, 5, o), *model_);
}

TEST_F(FittedIke, PredictionIsInterceptPlusActiveWeights) {
  const auto& m = *model_;
  const Eigen::SparseMatrix<double> V = encode(m.rules(), data_->X, m.universe());
  const Eigen::VectorXd manual = (V * m.weights()).array() + m.intercept();
  for (std::size_t i = 0; i < data_->size(); ++i)
    EXPECT_NEAR(predict(m, data_->X[i]), manual[static_cast<Eigen::Index>(i)], 1e-12);
  EXPECT_LT(m.nonzero_count(), m.rules().size());
}

TEST_F(FittedIke, BreakpointsAreForestThresholds) {
  const auto& m = *model_;
  const Forest& f = *m.forest();
  for (std::size_t k = 0; k < f.knobs.size(); ++k) {
    std::set<double> thresholds;
    for (const auto& t : f.trees)
      for (const auto& n : t.nodes())
        if (n.feature == static_cast<int>(k)) thresholds.insert(n.threshold);
    const auto& spec = m.universe().spec(f.knobs[k]);
    const auto grid = linear_grid(spec, 1001);
    const auto p = knob_weight_profile(m, spec.name, grid, m.universe().default_config());
    for (std::size_t i = 1; i < p.size(); ++i) {
      if (p[i].prediction == p[i - 1].prediction) continue;
      auto it = thresholds.lower_bound(p[i - 1].value);
      EXPECT_TRUE(it != thresholds.end() && *it < p[i].value)
          << spec.name << " changes between " << p[i - 1].value << " and " << p[i].value;
    }
  }
}

TEST_F(FittedIke, ExplanationsSumToPrediction) {
  const auto& m = *model_;
  for (std::size_t i = 0; i < 10; ++i) {
    double s = m.intercept();
    for (const auto& c : explain(m, data_->X[i])) s += c.weight;
    EXPECT_NEAR(s, predict(m, data_->X[i]), 1e-12);
  }
}
