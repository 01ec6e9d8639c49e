#include "iwek/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "iwek/lasso.hpp"
#include "iwek/lhs.hpp"
#include "iwek/metrics.hpp"
#include "iwek/random.hpp"
#include "iwek/ranking.hpp"

namespace iwek {

namespace {

Eigen::VectorXd labels_of(const KPDataset& d) { return label_vector(d); }

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

ScoreSet mean_of(const std::vector<ScoreSet>& xs) {
  ScoreSet m;
  if (xs.empty()) return m;
  for (const auto& x : xs) {
    m.pearson += x.pearson;
    m.pearson_error += x.pearson_error;
    m.accuracy += x.accuracy;
    m.error += x.error;
  }
  const double n = static_cast<double>(xs.size());
  m.pearson /= n;
  m.pearson_error /= n;
  m.accuracy /= n;
  m.error /= n;
  return m;
}

Json score_json(const ScoreSet& s) {
  return {{"pearson", s.pearson}, {"pearson_error", s.pearson_error}, {"accuracy", s.accuracy}, {"error", s.error}};
}

std::string join(const std::vector<std::string>& xs, char sep) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out.push_back(sep);
    out += xs[i];
  }
  return out;
}

double recall_at_3(const std::vector<std::string>& truth, const std::vector<std::string>& ranked) {
  int hits = 0;
  for (std::size_t i = 0; i < 3 && i < ranked.size(); ++i)
    if (std::find(truth.begin(), truth.begin() + 3, ranked[i]) != truth.begin() + 3) ++hits;
  return hits / 3.0;
}

}  // namespace

ScoreSet score(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred, std::size_t n_pairs,
               std::uint64_t seed) {
  ScoreSet s;
  // A constant prediction has no defined correlation; score it as uncorrelated.
  const bool flat = y_pred.size() > 0 && (y_pred.array() == y_pred[0]).all();
  s.pearson = flat ? 0.0 : pearson(y_true, y_pred);
  s.pearson_error = 1.0 - s.pearson;
  s.accuracy = pair_accuracy(y_true, y_pred, n_pairs, seed);
  s.error = mean_prediction_error(y_true, y_pred);
  return s;
}

ScenarioRun prepare_scenario(const SyntheticScenario& s, std::uint64_t seed, const EvalOptions& options) {
  if (options.n_train >= options.n_points) throw DataError("eval: training split leaves no test points");
  ScenarioRun run;
  run.id = s.id();
  const auto design = lhs_sample(options.n_points, s.knobs, derive_seed(seed, "design", s.id()));
  const KPDataset all = collect_kp(s, design.S, options.noisy);
  Rng rng(derive_seed(seed, "split", s.id()));
  const auto perm = random_permutation(all.size(), rng);
  std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(options.n_train));
  std::vector<std::size_t> test(perm.begin() + static_cast<std::ptrdiff_t>(options.n_train), perm.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  run.train = subset(all, train);
  run.test = subset(all, test);
  run.log = gen_log(s, options.log_queries, derive_seed(seed, "log"));

  auto e = std::make_shared<Experience>();
  e->scenario_id = s.id();
  e->knob_universe = s.knobs;
  e->fingerprint = fingerprint_from_log(run.log);
  e->estimator = fit_ike(run.train, derive_seed(seed, "ike", s.id()), options.ike);
  auto models = default_ensemble(derive_seed(seed, "ensemble", s.id()));
  const auto names = KnobUniverse(s.knobs).names();
  e->ranking = rank_knobs(models, run.train, names, derive_seed(seed, "rank", s.id()));
  run.experience = std::move(e);
  return run;
}

std::vector<ScenarioRun> build_experience_bank(std::span<const SyntheticScenario> suite, std::uint64_t seed,
                                               const EvalOptions& options) {
  std::vector<ScenarioRun> bank;
  bank.reserve(suite.size());
  for (const auto& s : suite) bank.push_back(prepare_scenario(s, seed, options));
  return bank;
}

double LinearBaseline::predict(const KnobConfig& x) const {
  const Eigen::VectorXd row = universe.to_row(x);
  double y = intercept;
  for (std::size_t j = 0; j < universe.size(); ++j)
    y += weights[static_cast<Eigen::Index>(j)] * (row[static_cast<Eigen::Index>(j)] - universe[j].lo) / universe[j].width();
  return y;
}

LinearBaseline fit_linear_baseline(const KPDataset& D, std::uint64_t seed, int folds) {
  LinearBaseline b;
  b.universe = universe_of(D);
  const Eigen::MatrixXd X = feature_matrix(D, b.universe);
  Eigen::MatrixXd U(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const auto& s = b.universe[static_cast<std::size_t>(j)];
    U.col(j) = (X.col(j).array() - s.lo) / s.width();
  }
  const Eigen::SparseMatrix<double> V = U.sparseView();
  const auto fit = fit_lasso<double>(V, label_vector(D), default_lambda_grid(), folds, seed);
  b.weights = fit.weights;
  b.intercept = fit.intercept;
  return b;
}

OriginReport run_origin_eval(std::span<const ScenarioRun> bank, std::uint64_t seed, const EvalOptions& options) {
  OriginReport report;
  std::vector<ScoreSet> ike, base;
  for (const auto& run : bank) {
    const Eigen::VectorXd y = labels_of(run.test);
    Eigen::VectorXd p(y.size()), q(y.size());
    const auto baseline = fit_linear_baseline(run.train, derive_seed(seed, "baseline", run.id));
    for (std::size_t i = 0; i < run.test.size(); ++i) {
      p[static_cast<Eigen::Index>(i)] = predict(run.experience->estimator, run.test.X[i]);
      q[static_cast<Eigen::Index>(i)] = baseline.predict(run.test.X[i]);
    }
    OriginRow row;
    row.scenario = run.id;
    row.ike = score(y, p, options.n_pairs, derive_seed(seed, "pairs", run.id));
    row.baseline = score(y, q, options.n_pairs, derive_seed(seed, "pairs", run.id));
    row.rules = run.experience->estimator.rules().size();
    row.nonzero = run.experience->estimator.nonzero_count();
    ike.push_back(row.ike);
    base.push_back(row.baseline);
    report.rows.push_back(std::move(row));
  }
  report.ike_mean = mean_of(ike);
  report.baseline_mean = mean_of(base);
  return report;
}

TransferReport run_transfer_eval(std::span<const SyntheticScenario> suite, std::span<const ScenarioRun> bank,
                                 std::size_t K, std::size_t N, std::uint64_t seed, const EvalOptions& options) {
  if (suite.size() != bank.size()) throw DataError("transfer eval: suite and bank differ in size");
  TransferReport report;
  report.K = K;
  report.N = N;
  std::vector<ScoreSet> scores;
  double origin_sum = 0.0;
  for (std::size_t t = 0; t < suite.size(); ++t) {
    const auto& target = suite[t];
    const auto& run = bank[t];
    if (run.id != target.id()) throw DataError("transfer eval: bank is not in suite order");
    std::vector<std::shared_ptr<const Experience>> others;
    for (std::size_t i = 0; i < bank.size(); ++i)
      if (i != t) others.push_back(bank[i].experience);

    const LabelSource labels = [&](std::span<const KnobConfig> S) {
      std::vector<double> y;
      for (const auto& x : S) y.push_back(oracle_perf(target, x, options.noisy));
      return y;
    };
    TransferOptions topt;
    topt.K = K;
    topt.N = N;
    const auto M = transfer_estimator(others, fingerprint_from_log(run.log), KnobUniverse(target.knobs), labels,
                                      derive_seed(seed, "transfer", target.id()), topt);

    const Eigen::VectorXd y = labels_of(run.test);
    Eigen::VectorXd p(y.size()), o(y.size());
    for (std::size_t i = 0; i < run.test.size(); ++i) {
      p[static_cast<Eigen::Index>(i)] = predict_transferred(M, run.test.X[i]);
      o[static_cast<Eigen::Index>(i)] = predict(run.experience->estimator, run.test.X[i]);
    }
    TransferRow row;
    row.scenario = target.id();
    row.transfer = score(y, p, options.n_pairs, derive_seed(seed, "pairs", target.id()));
    row.origin_pearson = score(y, o, options.n_pairs, derive_seed(seed, "pairs", target.id())).pearson;
    for (const auto& m : M.members) {
      row.members.push_back(m.experience->scenario_id);
      row.weights.push_back(m.weight);
    }
    scores.push_back(row.transfer);
    origin_sum += row.origin_pearson;
    report.rows.push_back(std::move(row));
  }
  report.mean = mean_of(scores);
  report.origin_pearson_mean = suite.empty() ? 0.0 : origin_sum / static_cast<double>(suite.size());
  return report;
}

RobustnessReport run_robustness_sweep(std::span<const SyntheticScenario> suite, std::span<const ScenarioRun> bank,
                                      std::size_t max_k, std::uint64_t seed, const EvalOptions& options) {
  RobustnessReport r;
  for (std::size_t K = 1; K <= max_k; ++K) r.per_k.push_back(run_transfer_eval(suite, bank, K, options.N, seed, options));
  return r;
}

RecallReport ranking_recall(std::span<const SyntheticScenario> suite, std::uint64_t seed, const EvalOptions& options) {
  RecallReport report;
  std::vector<KnobRanking> rankings;
  std::vector<Fingerprint> fps;
  for (const auto& s : suite) {
    const auto design = lhs_sample(options.n_train, s.knobs, derive_seed(seed, "recall_design", s.id()));
    const KPDataset D = collect_kp(s, design.S, false);
    auto models = default_ensemble(derive_seed(seed, "ensemble", s.id()));
    const auto names = KnobUniverse(s.knobs).names();
    rankings.push_back(rank_knobs(models, D, names, derive_seed(seed, "rank", s.id())));
    fps.push_back(fingerprint_from_log(gen_log(s, options.log_queries, derive_seed(seed, "log"))));
  }
  double sum = 0.0, tsum = 0.0;
  for (std::size_t t = 0; t < suite.size(); ++t) {
    RecallRow row;
    row.scenario = suite[t].id();
    row.truth = ground_truth_ranking(suite[t]);
    row.truth.resize(3);
    row.ranked = top_k(rankings[t], 3);
    row.recall = recall_at_3(row.truth, row.ranked);

    std::vector<std::pair<double, std::size_t>> d;
    for (std::size_t i = 0; i < suite.size(); ++i)
      if (i != t) d.emplace_back(dis_ranking(fps[t], fps[i]), i);
    std::stable_sort(d.begin(), d.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    d.resize(std::min(options.K, d.size()));
    std::vector<double> dist;
    std::vector<KnobRanking> members;
    for (const auto& [dd, i] : d) {
      dist.push_back(dd);
      members.push_back(rankings[i]);
    }
    row.transferred = top_k(transfer_ranking(members, similarity_weights(dist)), 3);
    row.transferred_recall = recall_at_3(row.truth, row.transferred);
    sum += row.recall;
    tsum += row.transferred_recall;
    report.rows.push_back(std::move(row));
  }
  if (!suite.empty()) {
    report.mean = sum / static_cast<double>(suite.size());
    report.transferred_mean = tsum / static_cast<double>(suite.size());
  }
  return report;
}

std::string to_csv(const OriginReport& r) {
  std::ostringstream out;
  out << "scenario,ike_pearson,ike_pearson_error,ike_accuracy,ike_error,baseline_pearson,baseline_accuracy,"
         "baseline_error,rules,nonzero\n";
  for (const auto& x : r.rows)
    out << x.scenario << ',' << fixed(x.ike.pearson) << ',' << fixed(x.ike.pearson_error) << ','
        << fixed(x.ike.accuracy) << ',' << fixed(x.ike.error) << ',' << fixed(x.baseline.pearson) << ','
        << fixed(x.baseline.accuracy) << ',' << fixed(x.baseline.error) << ',' << x.rules << ',' << x.nonzero
        << '\n';
  return out.str();
}

std::string to_csv(const TransferReport& r) {
  std::ostringstream out;
  out << "scenario,K,N,pearson,pearson_error,accuracy,error,origin_pearson,members,weights\n";
  for (const auto& x : r.rows) {
    std::vector<std::string> w;
    for (double v : x.weights) w.push_back(fixed(v));
    out << x.scenario << ',' << r.K << ',' << r.N << ',' << fixed(x.transfer.pearson) << ','
        << fixed(x.transfer.pearson_error) << ',' << fixed(x.transfer.accuracy) << ',' << fixed(x.transfer.error)
        << ',' << fixed(x.origin_pearson) << ',' << join(x.members, ';') << ',' << join(w, ';') << '\n';
  }
  return out.str();
}

std::string to_csv(const RobustnessReport& r) {
  std::ostringstream out;
  out << "K,pearson,accuracy,error\n";
  for (const auto& k : r.per_k)
    out << k.K << ',' << fixed(k.mean.pearson) << ',' << fixed(k.mean.accuracy) << ',' << fixed(k.mean.error) << '\n';
  return out.str();
}

std::string to_csv(const RecallReport& r) {
  std::ostringstream out;
  out << "scenario,truth,ranked,recall,transferred,transferred_recall\n";
  for (const auto& x : r.rows)
    out << x.scenario << ',' << join(x.truth, ';') << ',' << join(x.ranked, ';') << ',' << fixed(x.recall) << ','
        << join(x.transferred, ';') << ',' << fixed(x.transferred_recall) << '\n';
  return out.str();
}

Json summary(const OriginReport& r) {
  return {{"experiment", "origin"}, {"scenarios", r.rows.size()}, {"ike", score_json(r.ike_mean)},
          {"baseline", score_json(r.baseline_mean)}};
}

Json summary(const TransferReport& r) {
  return {{"experiment", "transfer"}, {"K", r.K}, {"N", r.N}, {"scenarios", r.rows.size()},
          {"transfer", score_json(r.mean)}, {"origin_pearson", r.origin_pearson_mean}};
}

Json summary(const RobustnessReport& r) {
  Json per = Json::array();
  double lo = 1.0, hi = 0.0;
  for (const auto& k : r.per_k) {
    per.push_back({{"K", k.K}, {"pearson", k.mean.pearson}, {"accuracy", k.mean.accuracy}});
    lo = std::min(lo, k.mean.accuracy);
    hi = std::max(hi, k.mean.accuracy);
  }
  return {{"experiment", "robustness"}, {"per_k", per}, {"accuracy_spread", r.per_k.empty() ? 0.0 : hi - lo}};
}

Json summary(const RecallReport& r) {
  return {{"experiment", "recall"}, {"scenarios", r.rows.size()}, {"recall", r.mean},
          {"transferred_recall", r.transferred_mean}};
}

}  // namespace iwek
