#ifndef IWEK_SPLINE_HPP
#define IWEK_SPLINE_HPP

#include <Eigen/Core>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <vector>

#include "iwek/error.hpp"

namespace iwek {

// Natural cubic spline basis for knots xi_1 < ... < xi_K (K >= 2):
//   N_1 = 1, N_2 = t, N_{k+2} = d_k(t) - d_{K-1}(t),  k = 1..K-2,
//   d_k(t) = ((t - xi_k)^3_+ - (t - xi_K)^3_+) / (xi_K - xi_k).
// The function is linear beyond the boundary knots. Columns 3..K carry all
// of the curvature.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> natural_spline_basis(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& t, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& knots) {
  const Eigen::Index K = knots.size();
  if (K < 2) throw DataError("natural_spline_basis: need at least two knots");
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> B(t.size(), K);
  auto cube_plus = [](Scalar v) { return v > Scalar(0) ? v * v * v : Scalar(0); };
  const Scalar last = knots[K - 1];
  auto d = [&](Eigen::Index k, Scalar x) {
    return (cube_plus(x - knots[k]) - cube_plus(x - last)) / (last - knots[k]);
  };
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    B(i, 0) = Scalar(1);
    B(i, 1) = t[i];
    for (Eigen::Index k = 0; k + 2 < K; ++k) B(i, k + 2) = d(k, t[i]) - d(K - 2, t[i]);
  }
  return B;
}

struct DistributionFeature {
  Eigen::VectorXd coefficients;
  double y_min = 0.0;  // normalization record
  double y_max = 0.0;
};

// Spline trend feature of a label sequence already in canonical design
// order. Labels are min-max scaled to [0,1] (constant input becomes 0.5),
// positioned at t_i = i / (N-1), and fitted by least squares with a natural
// cubic spline whose knots sit at the boundaries and at `interior_knots`
// evenly spaced quantiles of the index axis. Minimum-norm solution when
// N is smaller than the basis dimension. Requires N >= 4.
inline DistributionFeature spline_features(const Eigen::Ref<const Eigen::VectorXd>& y, int interior_knots = 3) {
  const Eigen::Index n = y.size();
  if (n < 4) throw DataError("spline_features: need at least 4 points");
  if (interior_knots < 0) throw DataError("spline_features: negative knot count");
  if (!y.allFinite()) throw DataError("spline_features: non-finite labels");
  DistributionFeature f;
  f.y_min = y.minCoeff();
  f.y_max = y.maxCoeff();
  Eigen::VectorXd yn(n);
  if (f.y_max > f.y_min) yn = (y.array() - f.y_min) / (f.y_max - f.y_min);
  else yn.setConstant(0.5);

  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(n, 0.0, 1.0);
  const Eigen::VectorXd knots = Eigen::VectorXd::LinSpaced(interior_knots + 2, 0.0, 1.0);
  const Eigen::MatrixXd B = natural_spline_basis<double>(t, knots);
  f.coefficients = B.completeOrthogonalDecomposition().solve(yn);
  return f;
}

// Cosine similarity; defined as 0 when either vector is zero.
template <typename A, typename B>
typename A::Scalar dis_estimator(const Eigen::MatrixBase<A>& d1, const Eigen::MatrixBase<B>& d2) {
  using Scalar = typename A::Scalar;
  if (d1.size() != d2.size()) throw DataError("dis_estimator: length mismatch");
  const Scalar n1 = d1.norm();
  const Scalar n2 = d2.norm();
  if (n1 == Scalar(0) || n2 == Scalar(0)) return Scalar(0);
  const Scalar c = d1.dot(d2) / (n1 * n2);
  return std::max(Scalar(-1), std::min(Scalar(1), c));
}

}  // namespace iwek

#endif  // IWEK_SPLINE_HPP
