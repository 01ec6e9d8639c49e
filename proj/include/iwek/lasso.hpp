#ifndef IWEK_LASSO_HPP
#define IWEK_LASSO_HPP

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "iwek/error.hpp"
#include "iwek/random.hpp"

namespace iwek {

struct LassoOptions {
  double tolerance = 1e-8;  // max absolute coordinate change per sweep
  int max_sweeps = 10000;
  bool record_objective = false;
};

template <typename Scalar>
struct LassoSolution {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vector weights;
  Scalar intercept = 0;
  Scalar lambda = 0;
  int sweeps = 0;
  bool converged = false;
  std::vector<Scalar> objective;  // one entry per sweep, plus the starting point
};

// Coordinate descent for
//   (1/n) || y - b - V w ||^2 + lambda ||w||_1
// with the intercept b profiled out by centering y and the columns of V.
// Column centering is implicit so sparse columns stay sparse.
template <typename Scalar>
LassoSolution<Scalar> lasso_fixed(const Eigen::SparseMatrix<Scalar, Eigen::ColMajor>& V,
                                  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y, Scalar lambda,
                                  const LassoOptions& options = {},
                                  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>* warm_start = nullptr) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = V.rows();
  const Eigen::Index p = V.cols();
  if (y.size() != n || n == 0) throw DataError("lasso: row count mismatch");
  if (!(lambda >= Scalar(0)) || !std::isfinite(static_cast<double>(lambda)))
    throw DataError("lasso: lambda must be finite and non-negative");
  if (!y.allFinite()) throw DataError("lasso: non-finite labels");

  const Scalar nn = static_cast<Scalar>(n);
  const Scalar y_mean = y.mean();
  Vector mean(p), sqnorm(p), colsum(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    Scalar s = 0, ss = 0;
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(V, j); it; ++it) {
      if (!std::isfinite(static_cast<double>(it.value()))) throw DataError("lasso: non-finite design entry");
      s += it.value();
      ss += it.value() * it.value();
    }
    colsum[j] = s;
    mean[j] = s / nn;
    sqnorm[j] = std::max(Scalar(0), ss - nn * mean[j] * mean[j]);
  }

  LassoSolution<Scalar> sol;
  sol.lambda = lambda;
  sol.weights = warm_start ? *warm_start : Vector::Zero(p);
  if (sol.weights.size() != p) throw DataError("lasso: warm start has wrong length");

  // residual r = (y - y_mean) - (V - 1 mean^T) w = rt + shift, rt = y - y_mean - V w
  Vector rt = y.array() - y_mean;
  rt.noalias() -= V * sol.weights;
  Scalar shift = mean.dot(sol.weights);
  Scalar rt_sum = rt.sum();

  auto objective = [&]() {
    Scalar rss = (rt.array() + shift).square().sum();
    return rss / nn + lambda * sol.weights.template lpNorm<1>();
  };
  if (options.record_objective) sol.objective.push_back(objective());

  const Scalar threshold = nn * lambda / Scalar(2);
  for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
    Scalar max_delta = 0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!(sqnorm[j] > Scalar(1e-12))) {
        if (sol.weights[j] != Scalar(0)) {
          // Degenerate column: any weight is equivalent up to the intercept,
          // so drop it.
          const Scalar delta = -sol.weights[j];
          for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(V, j); it; ++it)
            rt[it.index()] -= it.value() * delta;
          rt_sum -= colsum[j] * delta;
          shift += mean[j] * delta;
          sol.weights[j] = 0;
          max_delta = std::max(max_delta, std::abs(delta));
        }
        continue;
      }
      Scalar dot = 0;
      for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(V, j); it; ++it)
        dot += it.value() * (rt[it.index()] + shift);
      const Scalar r_sum = rt_sum + nn * shift;
      const Scalar z = dot - mean[j] * r_sum + sqnorm[j] * sol.weights[j];
      Scalar w_new = 0;
      if (z > threshold) w_new = (z - threshold) / sqnorm[j];
      else if (z < -threshold) w_new = (z + threshold) / sqnorm[j];
      const Scalar delta = w_new - sol.weights[j];
      if (delta == Scalar(0)) continue;
      for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(V, j); it; ++it)
        rt[it.index()] -= it.value() * delta;
      rt_sum -= colsum[j] * delta;
      shift += mean[j] * delta;
      sol.weights[j] = w_new;
      max_delta = std::max(max_delta, std::abs(delta));
    }
    sol.sweeps = sweep + 1;
    if (options.record_objective) sol.objective.push_back(objective());
    if (max_delta < static_cast<Scalar>(options.tolerance)) {
      sol.converged = true;
      break;
    }
  }
  sol.intercept = y_mean - mean.dot(sol.weights);
  return sol;
}

// 20 log-spaced points in [1e-4, 1e1], descending.
inline std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int i = 0; i < 20; ++i) grid.push_back(std::pow(10.0, 1.0 - 5.0 * i / 19.0));
  return grid;
}

template <typename Scalar>
struct LassoFit {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vector weights;
  Scalar intercept = 0;
  Scalar lambda = 0;          // selected, on the unit-scaled label axis
  std::vector<Scalar> lambdas;  // grid, descending
  std::vector<Scalar> cv_mse;   // per grid point, unit-scaled labels
};

namespace detail {

template <typename Scalar>
Eigen::SparseMatrix<Scalar> select_rows(const Eigen::SparseMatrix<Scalar>& V,
                                        const std::vector<Eigen::Index>& rows) {
  std::vector<Eigen::Index> map(static_cast<std::size_t>(V.rows()), -1);
  for (std::size_t i = 0; i < rows.size(); ++i) map[static_cast<std::size_t>(rows[i])] = static_cast<Eigen::Index>(i);
  std::vector<Eigen::Triplet<Scalar>> trips;
  for (Eigen::Index j = 0; j < V.outerSize(); ++j)
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(V, j); it; ++it)
      if (auto r = map[static_cast<std::size_t>(it.index())]; r >= 0) trips.emplace_back(r, j, it.value());
  Eigen::SparseMatrix<Scalar> out(static_cast<Eigen::Index>(rows.size()), V.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

}  // namespace detail

// Lasso with lambda chosen by k-fold cross-validated MSE. Labels are min-max
// scaled to [0, 1] for fitting, so the grid is scale-free; returned weights and
// intercept are on the original label scale. Ties in CV error prefer the
// larger lambda.
template <typename Scalar>
LassoFit<Scalar> fit_lasso(const Eigen::SparseMatrix<Scalar>& V,
                           const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y,
                           std::vector<Scalar> lambdas, int folds, std::uint64_t seed,
                           const LassoOptions& options = {}) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = V.rows();
  if (y.size() != n) throw DataError("fit_lasso: row count mismatch");
  if (folds < 2 || n < folds) throw DataError("fit_lasso: need rows >= folds >= 2");
  if (lambdas.empty()) throw DataError("fit_lasso: empty lambda grid");
  if (!y.allFinite()) throw DataError("fit_lasso: non-finite labels");
  for (auto l : lambdas)
    if (!(l >= 0) || !std::isfinite(static_cast<double>(l))) throw DataError("fit_lasso: invalid lambda");
  std::sort(lambdas.begin(), lambdas.end(), std::greater<Scalar>());

  LassoFit<Scalar> fit;
  fit.lambdas = lambdas;
  const Scalar lo = y.minCoeff();
  const Scalar range = y.maxCoeff() - lo;
  if (!(range > Scalar(0))) {
    fit.weights = Vector::Zero(V.cols());
    fit.intercept = y.mean();
    fit.lambda = lambdas.front();
    fit.cv_mse.assign(lambdas.size(), Scalar(0));
    return fit;
  }
  const Vector yu = (y.array() - lo) / range;

  Rng rng(derive_seed(seed, "lasso_folds"));
  const auto perm = random_permutation(static_cast<std::size_t>(n), rng);
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < perm.size(); ++i) fold_of[perm[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));

  fit.cv_mse.assign(lambdas.size(), Scalar(0));
  for (int k = 0; k < folds; ++k) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < n; ++i) (fold_of[static_cast<std::size_t>(i)] == k ? test : train).push_back(i);
    const auto Vtr = detail::select_rows(V, train);
    const auto Vte = detail::select_rows(V, test);
    Vector ytr(static_cast<Eigen::Index>(train.size())), yte(static_cast<Eigen::Index>(test.size()));
    for (std::size_t i = 0; i < train.size(); ++i) ytr[static_cast<Eigen::Index>(i)] = yu[train[i]];
    for (std::size_t i = 0; i < test.size(); ++i) yte[static_cast<Eigen::Index>(i)] = yu[test[i]];
    Vector warm = Vector::Zero(V.cols());
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
      auto sol = lasso_fixed<Scalar>(Vtr, ytr, lambdas[l], options, &warm);
      warm = sol.weights;
      Vector pred = (Vte * sol.weights).array() + sol.intercept;
      fit.cv_mse[l] += (pred - yte).squaredNorm();
    }
  }
  std::size_t best = 0;
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    fit.cv_mse[l] /= static_cast<Scalar>(n);
    if (fit.cv_mse[l] < fit.cv_mse[best]) best = l;
  }

  Vector warm = Vector::Zero(V.cols());
  LassoSolution<Scalar> sol;
  for (std::size_t l = 0; l <= best; ++l) {
    sol = lasso_fixed<Scalar>(V, yu, lambdas[l], options, &warm);
    warm = sol.weights;
  }
  fit.lambda = lambdas[best];
  fit.weights = sol.weights * range;
  fit.intercept = lo + range * sol.intercept;
  return fit;
}

}  // namespace iwek

#endif  // IWEK_LASSO_HPP
