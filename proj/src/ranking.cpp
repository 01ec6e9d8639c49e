#include "iwek/ranking.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <numeric>

#include "iwek/error.hpp"
#include "iwek/metrics.hpp"

namespace iwek {

std::string_view to_string(RegressorKind kind) {
  switch (kind) {
    case RegressorKind::kRidge:
      return "ridge-linear";
    case RegressorKind::kDecisionTree:
      return "decision-tree";
    case RegressorKind::kRandomForest:
      return "random-forest";
  }
  return "ridge-linear";
}

RegressorHandle::RegressorHandle(RegressorKind kind, std::uint64_t seed) : kind_(kind), seed_(seed) {}

void RegressorHandle::fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size() || X.rows() == 0) throw DataError("regressor fit: shape mismatch");
  switch (kind_) {
    case RegressorKind::kRidge: {
      RidgeModel m;
      m.mean = X.colwise().mean().transpose();
      m.scale = ((X.rowwise() - m.mean.transpose()).array().square().colwise().mean()).sqrt().transpose();
      for (Eigen::Index j = 0; j < m.scale.size(); ++j)
        if (!(m.scale[j] > 0.0)) m.scale[j] = 1.0;
      const Eigen::MatrixXd Z =
          (X.rowwise() - m.mean.transpose()).array().rowwise() / m.scale.transpose().array();
      m.intercept = y.mean();
      const Eigen::VectorXd yc = y.array() - m.intercept;
      Eigen::MatrixXd G = Z.transpose() * Z;
      G.diagonal().array() += m.alpha;
      m.coef = G.ldlt().solve(Z.transpose() * yc);
      state_ = std::move(m);
      break;
    }
    case RegressorKind::kDecisionTree: {
      std::vector<Eigen::Index> rows(static_cast<std::size_t>(X.rows()));
      std::iota(rows.begin(), rows.end(), Eigen::Index{0});
      Rng rng(derive_seed(seed_, "decision_tree"));
      state_ = fit_tree(X, y, rows, TreeParams{5, 2, FeatureSubsample::kAll}, rng);
      break;
    }
    case RegressorKind::kRandomForest: {
      std::vector<std::string> names(static_cast<std::size_t>(X.cols()));
      for (std::size_t j = 0; j < names.size(); ++j) names[j] = "x" + std::to_string(j);
      state_ = train_forest(X, y, std::move(names), ForestParams{100, 8, 1, FeatureSubsample::kSqrt},
                            derive_seed(seed_, "random_forest"));
      break;
    }
  }
}

Eigen::VectorXd RegressorHandle::predict(const Eigen::MatrixXd& X) const {
  if (const auto* m = std::get_if<RidgeModel>(&state_)) {
    if (X.cols() != m->coef.size()) throw DataError("ridge predict: column mismatch");
    const Eigen::MatrixXd Z = (X.rowwise() - m->mean.transpose()).array().rowwise() / m->scale.transpose().array();
    return (Z * m->coef).array() + m->intercept;
  }
  if (const auto* t = std::get_if<RegressionTree>(&state_)) {
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = t->predict(X.row(i).transpose());
    return out;
  }
  if (const auto* f = std::get_if<Forest>(&state_)) return f->predict_rows(X);
  throw DataError("regressor used before fit");
}

std::vector<RegressorHandle> default_ensemble(std::uint64_t seed) {
  return {RegressorHandle(RegressorKind::kRidge, derive_seed(seed, "ridge")),
          RegressorHandle(RegressorKind::kDecisionTree, derive_seed(seed, "tree")),
          RegressorHandle(RegressorKind::kRandomForest, derive_seed(seed, "forest"))};
}

KnobRanking rank_knobs(std::vector<RegressorHandle>& models, const KPDataset& D,
                       std::span<const std::string> knobs, std::uint64_t seed, const RankOptions& options) {
  validate_dataset(D);
  if (D.size() < 10) throw DataError("rank_knobs: needs at least 10 rows, got " + std::to_string(D.size()));
  if (options.repeats < 1) throw DataError("rank_knobs: repeats must be positive");
  const KnobUniverse universe = universe_of(D);
  const Eigen::MatrixXd X = feature_matrix(D, universe);
  const Eigen::VectorXd y = label_vector(D);
  if ((y.array() == y[0]).all()) throw DataError("rank_knobs: labels are constant");

  std::vector<Eigen::Index> columns;
  for (const auto& k : knobs) {
    auto idx = universe.index_of(k);
    if (!idx) throw ValidationError("rank_knobs: knob '" + k + "' not in the dataset");
    columns.push_back(static_cast<Eigen::Index>(*idx));
  }

  std::map<std::string, double> W;
  for (const auto& k : knobs) W[k] = 0.0;
  for (auto& model : models) {
    if (!model.fitted()) model.fit(X, y);
    const double s = r_squared(y, model.predict(X));
    model.set_score(s);
    const double weight = std::max(s, 0.0);
    for (std::size_t j = 0; j < knobs.size(); ++j) {
      double s_shuffled = 0.0;
      for (int r = 0; r < options.repeats; ++r) {
        Rng rng(derive_seed(seed, to_string(model.kind()), model.seed(), knobs[j],
                            static_cast<std::uint64_t>(r)));
        const auto perm = random_permutation(static_cast<std::size_t>(X.rows()), rng);
        Eigen::MatrixXd Xp = X;
        for (Eigen::Index i = 0; i < X.rows(); ++i)
          Xp(i, columns[j]) = X(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]), columns[j]);
        s_shuffled += r_squared(y, model.predict(Xp));
      }
      s_shuffled /= options.repeats;
      W[knobs[j]] += (s - s_shuffled) * weight;
    }
  }
  return KnobRanking(std::move(W));
}

std::vector<std::string> top_k(const KnobRanking& W, std::size_t k) {
  if (k > W.size())
    throw DataError("top_k: requested " + std::to_string(k) + " of " + std::to_string(W.size()) + " knobs");
  auto ordered = W.ordered();
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(ordered[i].first);
  return out;
}

}  // namespace iwek
