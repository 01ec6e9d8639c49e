#ifndef IWEK_METRICS_HPP
#define IWEK_METRICS_HPP

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "iwek/error.hpp"
#include "iwek/random.hpp"

namespace iwek {

namespace detail {

template <typename A, typename B>
void require_same_length(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b,
                         Eigen::Index min_len, const char* what) {
  if (a.size() != b.size())
    throw DataError(std::string(what) + ": length mismatch");
  if (a.size() < min_len)
    throw DataError(std::string(what) + ": needs at least " + std::to_string(min_len) + " values");
  if (!a.allFinite() || !b.allFinite()) throw DataError(std::string(what) + ": non-finite input");
}

}  // namespace detail

// Coefficient of determination 1 - SS_res / SS_tot. Throws when y_true has
// zero variance.
template <typename A, typename B>
typename A::Scalar r_squared(const Eigen::MatrixBase<A>& y_true, const Eigen::MatrixBase<B>& y_pred) {
  using Scalar = typename A::Scalar;
  detail::require_same_length(y_true, y_pred, 2, "r_squared");
  const Scalar mean = y_true.mean();
  const Scalar ss_tot = (y_true.array() - mean).square().sum();
  if (!(ss_tot > Scalar(0))) throw DataError("r_squared: y_true has zero variance");
  const Scalar ss_res = (y_true - y_pred).squaredNorm();
  return Scalar(1) - ss_res / ss_tot;
}

// Mean squared error after min-max normalizing both vectors by the range of
// y_true.
template <typename A, typename B>
typename A::Scalar mean_prediction_error(const Eigen::MatrixBase<A>& y_true,
                                         const Eigen::MatrixBase<B>& y_pred) {
  using Scalar = typename A::Scalar;
  detail::require_same_length(y_true, y_pred, 1, "mean_prediction_error");
  const Scalar lo = y_true.minCoeff();
  const Scalar range = y_true.maxCoeff() - lo;
  if (!(range > Scalar(0))) throw DataError("mean_prediction_error: y_true has zero range");
  return ((y_true - y_pred).array() / range).square().mean();
}

template <typename A, typename B>
typename A::Scalar pearson(const Eigen::MatrixBase<A>& y_true, const Eigen::MatrixBase<B>& y_pred) {
  using Scalar = typename A::Scalar;
  detail::require_same_length(y_true, y_pred, 2, "pearson");
  const auto a = (y_true.array() - y_true.mean()).eval();
  const auto b = (y_pred.array() - y_pred.mean()).eval();
  const Scalar va = a.square().sum();
  const Scalar vb = b.square().sum();
  if (!(va > Scalar(0)) || !(vb > Scalar(0))) throw DataError("pearson: zero variance input");
  const Scalar r = (a * b).sum() / std::sqrt(va * vb);
  return std::clamp(r, Scalar(-1), Scalar(1));
}

template <typename A, typename B>
typename A::Scalar pearson_error(const Eigen::MatrixBase<A>& y_true, const Eigen::MatrixBase<B>& y_pred) {
  return typename A::Scalar(1) - pearson(y_true, y_pred);
}

// All index pairs (i < j) whose true labels differ.
template <typename A>
std::vector<std::pair<Eigen::Index, Eigen::Index>> comparable_pairs(const Eigen::MatrixBase<A>& y_true) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> out;
  for (Eigen::Index i = 0; i < y_true.size(); ++i)
    for (Eigen::Index j = i + 1; j < y_true.size(); ++j)
      if (y_true[i] != y_true[j]) out.emplace_back(i, j);
  return out;
}

// Fraction of configuration pairs whose predicted order matches the true
// order. Pairs with equal true labels are never drawn; prediction ties count
// as incorrect. When n_pairs covers every comparable pair, all pairs are
// scored; otherwise n_pairs distinct pairs are drawn without replacement.
template <typename A, typename B>
double pair_accuracy(const Eigen::MatrixBase<A>& y_true, const Eigen::MatrixBase<B>& y_pred,
                     std::size_t n_pairs, std::uint64_t seed) {
  detail::require_same_length(y_true, y_pred, 2, "pair_accuracy");
  auto pairs = comparable_pairs(y_true);
  if (pairs.empty()) throw DataError("pair_accuracy: no pair with distinct true labels");
  if (n_pairs == 0) throw DataError("pair_accuracy: n_pairs must be positive");
  std::size_t take = pairs.size();
  if (n_pairs < pairs.size()) {
    Rng rng(derive_seed(seed, "pair_accuracy"));
    for (std::size_t i = 0; i < n_pairs; ++i) {
      std::size_t j = i + uniform_index(pairs.size() - i, rng);
      std::swap(pairs[i], pairs[j]);
    }
    take = n_pairs;
  }
  std::size_t correct = 0;
  for (std::size_t k = 0; k < take; ++k) {
    const auto [i, j] = pairs[k];
    const auto dt = y_true[i] - y_true[j];
    const auto dp = y_pred[i] - y_pred[j];
    if ((dt > 0 && dp > 0) || (dt < 0 && dp < 0)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(take);
}

}  // namespace iwek

#endif  // IWEK_METRICS_HPP
