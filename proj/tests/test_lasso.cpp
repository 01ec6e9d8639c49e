#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "iwek/lasso.hpp"
#include "iwek/random.hpp"

using namespace iwek;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Sparse = Eigen::SparseMatrix<double>;

namespace {

Sparse random_binary(Eigen::Index n, Eigen::Index p, double density, Rng& rng) {
  MatrixXd D(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) D(i, j) = uniform01(rng) < density ? 1.0 : 0.0;
  return D.sparseView();
}

VectorXd noise_labels(const Sparse& V, Rng& rng) {
  VectorXd w(V.cols());
  for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = standard_normal(rng);
  VectorXd y = V * w;
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += 3.0 + 0.1 * standard_normal(rng);
  return y;
}

LassoOptions tight() {
  LassoOptions o;
  o.tolerance = 1e-13;
  o.max_sweeps = 200000;
  return o;
}

}  // namespace

TEST(Lasso, ZeroPenaltyMatchesNormalEquations) {
  Rng rng(5);
  for (int t = 0; t < 5; ++t) {
    const Sparse V = random_binary(60, 6, 0.5, rng);
    const VectorXd y = noise_labels(V, rng);
    const MatrixXd D(V);
    const VectorXd mean = D.colwise().mean();
    const MatrixXd C = D.rowwise() - mean.transpose();
    const VectorXd yc = y.array() - y.mean();
    const VectorXd w = (C.transpose() * C).ldlt().solve(C.transpose() * yc);
    const auto sol = lasso_fixed<double>(V, y, 0.0, tight());
    EXPECT_TRUE(sol.converged);
    EXPECT_LT((sol.weights - w).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_NEAR(sol.intercept, y.mean() - mean.dot(w), 1e-6);
  }
}

TEST(Lasso, LargePenaltyGivesZeroWeights) {
  Rng rng(6);
  const Sparse V = random_binary(30, 8, 0.4, rng);
  const VectorXd y = noise_labels(V, rng);
  const auto sol = lasso_fixed<double>(V, y, 1e9);
  EXPECT_TRUE(sol.weights.isZero(0.0));
  EXPECT_DOUBLE_EQ(sol.intercept, y.mean());
}

TEST(Lasso, ObjectiveNeverIncreases) {
  Rng rng(7);
  for (int t = 0; t < 10; ++t) {
    const Sparse V = random_binary(40, 25, 0.3, rng);
    const VectorXd y = noise_labels(V, rng);
    LassoOptions o;
    o.record_objective = true;
    const auto sol = lasso_fixed<double>(V, y, 0.01 * (t + 1), o);
    ASSERT_GE(sol.objective.size(), 2u);
    for (std::size_t k = 1; k < sol.objective.size(); ++k)
      EXPECT_LE(sol.objective[k], sol.objective[k - 1] + 1e-12 * std::abs(sol.objective[k - 1]));
  }
}

TEST(Lasso, DuplicatedColumnLeavesFitUnchanged) {
  Rng rng(8);
  const Sparse V = random_binary(50, 5, 0.5, rng);
  const VectorXd y = noise_labels(V, rng);
  MatrixXd D(V);
  MatrixXd D2(D.rows(), D.cols() + 1);
  D2 << D, D.col(2);
  const Sparse V2 = D2.sparseView();
  for (double lambda : {0.001, 0.05, 0.3}) {
    const auto a = lasso_fixed<double>(V, y, lambda, tight());
    const auto b = lasso_fixed<double>(V2, y, lambda, tight());
    const VectorXd fa = (V * a.weights).array() + a.intercept;
    const VectorXd fb = (V2 * b.weights).array() + b.intercept;
    EXPECT_LT((fa - fb).cwiseAbs().maxCoeff(), 1e-6) << "lambda " << lambda;
    EXPECT_NEAR(b.weights[2] + b.weights[5], a.weights[2], 1e-6);
  }
}

TEST(Lasso, SparsityMostlyMonotoneInPenalty) {
  Rng rng(9);
  int ok = 0;
  const int trials = 40;
  for (int t = 0; t < trials; ++t) {
    const Sparse V = random_binary(40, 30, 0.3, rng);
    const VectorXd y = noise_labels(V, rng);
    const double l1 = 0.005 + 0.1 * uniform01(rng);
    const double l2 = l1 * (1.5 + 3 * uniform01(rng));
    const auto a = lasso_fixed<double>(V, y, l1);
    const auto b = lasso_fixed<double>(V, y, l2);
    if ((b.weights.array() != 0).count() <= (a.weights.array() != 0).count()) ++ok;
  }
  EXPECT_GE(ok, 38);  // 95%
}

TEST(Lasso, WarmStartReachesSameSolution) {
  Rng rng(10);
  const Sparse V = random_binary(40, 10, 0.4, rng);
  const VectorXd y = noise_labels(V, rng);
  const auto cold = lasso_fixed<double>(V, y, 0.02, tight());
  const VectorXd start = VectorXd::Constant(10, 0.5);
  const auto warm = lasso_fixed<double>(V, y, 0.02, tight(), &start);
  EXPECT_LT((cold.weights - warm.weights).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Lasso, RejectsBadInput) {
  Rng rng(11);
  const Sparse V = random_binary(10, 3, 0.5, rng);
  VectorXd y = VectorXd::Ones(10);
  EXPECT_THROW(lasso_fixed<double>(V, y, -1.0), DataError);
  EXPECT_THROW(lasso_fixed<double>(V, VectorXd::Ones(9), 0.1), DataError);
  y[3] = std::numeric_limits<double>::infinity();
  EXPECT_THROW(lasso_fixed<double>(V, y, 0.1), DataError);
  EXPECT_THROW(fit_lasso<double>(V, VectorXd::Ones(10), {}, 5, 0), DataError);
  EXPECT_THROW(fit_lasso<double>(V, VectorXd::Ones(10), {0.1}, 1, 0), DataError);
}

TEST(FitLasso, DefaultGrid) {
  const auto g = default_lambda_grid();
  ASSERT_EQ(g.size(), 20u);
  EXPECT_DOUBLE_EQ(g.front(), 10.0);
  EXPECT_NEAR(g.back(), 1e-4, 1e-18);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_LT(g[i], g[i - 1]);
}

TEST(FitLasso, EquivariantToLabelAffineMaps) {
  Rng rng(12);
  const Sparse V = random_binary(60, 20, 0.3, rng);
  const VectorXd y = noise_labels(V, rng);
  const VectorXd y2 = 250.0 * y.array() + 40.0;
  const auto a = fit_lasso<double>(V, y, default_lambda_grid(), 5, 3);
  const auto b = fit_lasso<double>(V, y2, default_lambda_grid(), 5, 3);
  EXPECT_EQ(a.lambda, b.lambda);
  const VectorXd pa = (V * a.weights).array() + a.intercept;
  const VectorXd pb = (V * b.weights).array() + b.intercept;
  EXPECT_LT((250.0 * pa.array() + 40.0 - pb.array()).abs().maxCoeff(), 1e-6);
}

TEST(FitLasso, RecoversSparseSignal) {
  Rng rng(13);
  const Sparse V = random_binary(120, 40, 0.4, rng);
  VectorXd y = 2.0 * VectorXd(V.col(3)) - 1.5 * VectorXd(V.col(17));
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += 0.05 * standard_normal(rng);
  const auto fit = fit_lasso<double>(V, y, default_lambda_grid(), 5, 1);
  EXPECT_NEAR(fit.weights[3], 2.0, 0.1);
  EXPECT_NEAR(fit.weights[17], -1.5, 0.1);
  EXPECT_EQ(fit.cv_mse.size(), 20u);
  const auto again = fit_lasso<double>(V, y, default_lambda_grid(), 5, 1);
  EXPECT_EQ(fit.weights, again.weights);
  EXPECT_EQ(fit.lambda, again.lambda);
}

TEST(FitLasso, FloatInstantiation) {
  Rng rng(14);
  const Sparse Vd = random_binary(30, 5, 0.5, rng);
  const Eigen::SparseMatrix<float> V = Vd.cast<float>();
  const Eigen::VectorXf y = noise_labels(Vd, rng).cast<float>();
  const auto sol = lasso_fixed<float>(V, y, 0.0f);
  EXPECT_EQ(sol.weights.size(), 5);
  EXPECT_TRUE(sol.weights.allFinite());
}
