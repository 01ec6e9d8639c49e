#include "iwek/estimator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <tuple>

#include "iwek/error.hpp"
#include "iwek/lasso.hpp"

namespace iwek {

namespace {

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string Rule::to_string() const {
  if (conjuncts.empty()) return "(always)";
  std::string out;
  for (const auto& [knob, iv] : conjuncts) {
    if (!out.empty()) out += " & ";
    const bool has_lo = std::isfinite(iv.lo);
    const bool has_hi = std::isfinite(iv.hi);
    if (has_lo && has_hi) out += format_number(iv.lo) + " < " + knob + " <= " + format_number(iv.hi);
    else if (has_hi) out += knob + " <= " + format_number(iv.hi);
    else if (has_lo) out += knob + " > " + format_number(iv.lo);
    else out += knob + " (any)";
  }
  return out;
}

RuleSet extract_rules(const Forest& forest) {
  RuleSet rules;
  std::set<std::vector<std::tuple<std::string, double, double>>> seen;
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    const auto& nodes = forest.trees[t].nodes();
    struct Frame {
      int node;
      std::map<std::string, Interval> constraints;
    };
    std::vector<Frame> stack{{0, {}}};
    while (!stack.empty()) {
      Frame f = std::move(stack.back());
      stack.pop_back();
      const auto& node = nodes[static_cast<std::size_t>(f.node)];
      if (node.is_leaf()) {
        std::vector<std::tuple<std::string, double, double>> key;
        for (const auto& [k, iv] : f.constraints) key.emplace_back(k, iv.lo, iv.hi);
        if (seen.insert(std::move(key)).second)
          rules.push_back({std::move(f.constraints), {static_cast<int>(t), f.node}});
        continue;
      }
      const auto& knob = forest.knobs.at(static_cast<std::size_t>(node.feature));
      Frame right{node.right, f.constraints};
      auto& r = right.constraints[knob];
      r.lo = std::max(r.lo, node.threshold);
      Frame left{node.left, std::move(f.constraints)};
      auto& l = left.constraints[knob];
      l.hi = std::min(l.hi, node.threshold);
      stack.push_back(std::move(right));
      stack.push_back(std::move(left));
    }
  }
  return rules;
}

Eigen::SparseMatrix<double> encode(const RuleSet& rules, const Eigen::MatrixXd& X,
                                   const KnobUniverse& universe) {
  if (X.cols() != static_cast<Eigen::Index>(universe.size()))
    throw DataError("encode: feature matrix does not match the knob universe");
  std::vector<Eigen::Triplet<double>> trips;
  for (std::size_t j = 0; j < rules.size(); ++j) {
    std::vector<std::tuple<Eigen::Index, double, double>> conj;
    for (const auto& [knob, iv] : rules[j].conjuncts) {
      auto idx = universe.index_of(knob);
      if (!idx) throw ValidationError("rule references unknown knob '" + knob + "'");
      conj.emplace_back(static_cast<Eigen::Index>(*idx), iv.lo, iv.hi);
    }
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      bool ok = true;
      for (const auto& [f, lo, hi] : conj) {
        const double v = X(i, f);
        if (!(v > lo && v <= hi)) {
          ok = false;
          break;
        }
      }
      if (ok) trips.emplace_back(i, static_cast<Eigen::Index>(j), 1.0);
    }
  }
  Eigen::SparseMatrix<double> V(X.rows(), static_cast<Eigen::Index>(rules.size()));
  V.setFromTriplets(trips.begin(), trips.end());
  return V;
}

Eigen::SparseMatrix<double> encode(const RuleSet& rules, std::span<const KnobConfig> X,
                                   const KnobUniverse& universe) {
  Eigen::MatrixXd M(static_cast<Eigen::Index>(X.size()), static_cast<Eigen::Index>(universe.size()));
  for (std::size_t i = 0; i < X.size(); ++i) M.row(static_cast<Eigen::Index>(i)) = universe.to_row(X[i]).transpose();
  return encode(rules, M, universe);
}

InterpretableEstimator::InterpretableEstimator(std::vector<KnobSpec> knobs, RuleSet rules,
                                               Eigen::VectorXd weights, double intercept,
                                               double lambda, std::optional<Forest> forest)
    : universe_(std::move(knobs)),
      rules_(std::move(rules)),
      weights_(std::move(weights)),
      intercept_(intercept),
      lambda_(lambda),
      forest_(std::move(forest)) {
  if (static_cast<std::size_t>(weights_.size()) != rules_.size())
    throw ValidationError("estimator has " + std::to_string(weights_.size()) + " weights for " +
                          std::to_string(rules_.size()) + " rules");
  if (!weights_.allFinite() || !std::isfinite(intercept_))
    throw ValidationError("estimator has non-finite weights or intercept");
  if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) throw ValidationError("estimator lambda invalid");
  compiled_.reserve(rules_.size());
  for (std::size_t j = 0; j < rules_.size(); ++j) {
    std::vector<Conjunct> conj;
    for (const auto& [knob, iv] : rules_[j].conjuncts) {
      auto idx = universe_.index_of(knob);
      if (!idx) throw ValidationError("rule " + std::to_string(j) + " uses knob '" + knob +
                                      "' outside the estimator's knob universe");
      if (iv.empty()) throw ValidationError("rule " + std::to_string(j) + " has an empty interval");
      conj.push_back({static_cast<Eigen::Index>(*idx), iv.lo, iv.hi});
    }
    compiled_.push_back(std::move(conj));
    if (weights_[static_cast<Eigen::Index>(j)] != 0.0) nonzero_.push_back(j);
  }
  if (forest_) {
    for (const auto& k : forest_->knobs)
      if (!universe_.index_of(k)) throw ValidationError("forest uses knob '" + k + "' outside the universe");
    for (const auto& tree : forest_->trees)
      for (const auto& node : tree.nodes())
        if (!node.is_leaf() &&
            (node.feature < 0 || static_cast<std::size_t>(node.feature) >= forest_->knobs.size()))
          throw ValidationError("forest node references a missing feature");
  }
}

std::size_t InterpretableEstimator::nonzero_count() const { return nonzero_.size(); }

bool InterpretableEstimator::rule_active(std::size_t j, const Eigen::Ref<const Eigen::VectorXd>& row) const {
  for (const auto& c : compiled_[j]) {
    const double v = row[c.feature];
    if (!(v > c.lo && v <= c.hi)) return false;
  }
  return true;
}

double InterpretableEstimator::predict_row(const Eigen::Ref<const Eigen::VectorXd>& row) const {
  double s = intercept_;
  for (auto j : nonzero_)
    if (rule_active(j, row)) s += weights_[static_cast<Eigen::Index>(j)];
  return s;
}

Eigen::VectorXd InterpretableEstimator::predict_rows(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = predict_row(X.row(i).transpose());
  return out;
}

bool InterpretableEstimator::operator==(const InterpretableEstimator& other) const {
  return universe_ == other.universe_ && rules_ == other.rules_ && weights_.size() == other.weights_.size() &&
         weights_ == other.weights_ && intercept_ == other.intercept_ && lambda_ == other.lambda_ &&
         forest_ == other.forest_;
}

namespace {

ForestParams sample_params(const ForestSearchSpace& s, Rng& rng) {
  auto pick = [&](int lo, int hi) { return lo + static_cast<int>(uniform_index(static_cast<std::size_t>(hi - lo + 1), rng)); };
  ForestParams p;
  p.n_trees = pick(s.min_trees, s.max_trees);
  p.max_depth = pick(s.min_depth, s.max_depth);
  p.min_leaf = pick(s.min_leaf_lo, s.min_leaf_hi);
  p.subsample = uniform01(rng) < 0.5 ? FeatureSubsample::kSqrt : FeatureSubsample::kAll;
  return p;
}

ForestParams perturb(const ForestParams& base, const ForestSearchSpace& s, Rng& rng) {
  ForestParams p = base;
  auto step = [&](int span) {
    int d = 1 + static_cast<int>(uniform_index(static_cast<std::size_t>(span), rng));
    return uniform01(rng) < 0.5 ? -d : d;
  };
  int moves = uniform01(rng) < 0.5 ? 1 : 2;
  for (int m = 0; m < moves; ++m) {
    switch (uniform_index(4, rng)) {
      case 0:
        p.n_trees = std::clamp(p.n_trees + 10 * step(4), s.min_trees, s.max_trees);
        break;
      case 1:
        p.max_depth = std::clamp(p.max_depth + step(2), s.min_depth, s.max_depth);
        break;
      case 2:
        p.min_leaf = std::clamp(p.min_leaf + step(2), s.min_leaf_lo, s.min_leaf_hi);
        break;
      default:
        p.subsample = p.subsample == FeatureSubsample::kSqrt ? FeatureSubsample::kAll : FeatureSubsample::kSqrt;
        break;
    }
  }
  return p;
}

void require_trainable(const KPDataset& D, std::size_t min_rows, const char* what) {
  validate_dataset(D);
  if (D.size() < min_rows)
    throw DataError(std::string(what) + ": needs at least " + std::to_string(min_rows) + " rows, got " +
                    std::to_string(D.size()));
  const auto [lo, hi] = std::minmax_element(D.y.begin(), D.y.end());
  if (*lo == *hi) throw DataError(std::string(what) + ": labels are constant");
}

}  // namespace

Forest fit_forest(const KPDataset& D, int budget, std::uint64_t seed, const ForestSearchSpace& space,
                  std::vector<ForestTrial>* trials) {
  require_trainable(D, 20, "fit_forest");
  if (budget < 1) throw DataError("fit_forest: budget must be positive");
  const KnobUniverse universe = universe_of(D);
  const Eigen::MatrixXd X = feature_matrix(D, universe);
  const Eigen::VectorXd y = label_vector(D);

  Rng rng(derive_seed(seed, "forest_search"));
  std::vector<ForestParams> tried;
  std::optional<Forest> best;
  for (int t = 0; t < budget; ++t) {
    ForestParams params;
    if (t < space.initial_random_trials || !best) {
      params = sample_params(space, rng);
    } else {
      params = perturb(best->params, space, rng);
      for (int retry = 0; retry < 10 && std::find(tried.begin(), tried.end(), params) != tried.end(); ++retry)
        params = perturb(best->params, space, rng);
    }
    tried.push_back(params);
    Forest f = train_forest(X, y, universe.names(), params, derive_seed(seed, "forest", static_cast<std::uint64_t>(t)));
    if (trials) trials->push_back({params, f.oob_r2});
    if (!best || f.oob_r2 > best->oob_r2) best = std::move(f);
  }
  return std::move(*best);
}

InterpretableEstimator fit_ike(const KPDataset& D, std::uint64_t seed, const IkeOptions& options) {
  require_trainable(D, 20, "fit_ike");
  const KnobUniverse universe = universe_of(D);
  Forest forest = fit_forest(D, options.budget, derive_seed(seed, "ike_forest"));
  RuleSet rules = extract_rules(forest);
  const Eigen::MatrixXd X = feature_matrix(D, universe);
  const Eigen::VectorXd y = label_vector(D);
  const auto V = encode(rules, X, universe);
  auto lambdas = options.lambdas.empty() ? default_lambda_grid() : options.lambdas;
  const auto fit = fit_lasso<double>(V, y, std::move(lambdas), options.folds, derive_seed(seed, "ike_lasso"));
  return InterpretableEstimator(universe.specs(), std::move(rules), fit.weights, fit.intercept, fit.lambda,
                                std::move(forest));
}

double predict(const InterpretableEstimator& m, const KnobConfig& x) {
  return m.predict_row(m.universe().to_row(x));
}

std::vector<RuleContribution> explain(const InterpretableEstimator& m, const KnobConfig& x) {
  const Eigen::VectorXd row = m.universe().to_row(x);
  std::vector<RuleContribution> out;
  for (std::size_t j = 0; j < m.rules().size(); ++j) {
    const double w = m.weights()[static_cast<Eigen::Index>(j)];
    if (w == 0.0 || !m.rule_active(j, row)) continue;
    out.push_back({j, m.rules()[j], w});
  }
  std::stable_sort(out.begin(), out.end(), [](const RuleContribution& a, const RuleContribution& b) {
    if (std::abs(a.weight) != std::abs(b.weight)) return std::abs(a.weight) > std::abs(b.weight);
    if (a.rule.source != b.rule.source) return a.rule.source < b.rule.source;
    return a.index < b.index;
  });
  return out;
}

std::vector<ProfilePoint> knob_weight_profile(const InterpretableEstimator& m, std::string_view knob,
                                              std::span<const double> grid, const KnobConfig& base) {
  const auto idx = m.universe().index_of(knob);
  if (!idx) throw ValidationError("unknown knob '" + std::string(knob) + "'");
  Eigen::VectorXd row = m.universe().to_row(base);
  const auto& spec = m.universe()[*idx];
  std::vector<ProfilePoint> out;
  out.reserve(grid.size());
  for (double v : grid) {
    if (!spec.contains(v)) throw ValidationError("profile grid value outside the range of '" + spec.name + "'");
    row[static_cast<Eigen::Index>(*idx)] = v;
    out.push_back({v, m.predict_row(row)});
  }
  return out;
}

std::vector<double> linear_grid(const KnobSpec& spec, int points) {
  if (points < 2) throw DataError("linear_grid: need at least two points");
  std::vector<double> g;
  for (int i = 0; i < points; ++i) g.push_back(spec.lo + spec.width() * i / (points - 1));
  g.back() = spec.hi;
  return g;
}

}  // namespace iwek
