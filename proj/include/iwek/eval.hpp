#ifndef IWEK_EVAL_HPP
#define IWEK_EVAL_HPP

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "iwek/estimator.hpp"
#include "iwek/experience.hpp"
#include "iwek/serialize.hpp"
#include "iwek/sim.hpp"
#include "iwek/transfer.hpp"

namespace iwek {

struct EvalOptions {
  std::size_t n_points = 100;
  std::size_t n_train = 70;
  std::size_t n_pairs = 100;
  bool noisy = true;
  std::uint64_t log_queries = 20000;
  IkeOptions ike;
  std::size_t K = 3;
  std::size_t N = 10;
};

struct ScoreSet {
  double pearson = 0.0;
  double pearson_error = 0.0;
  double accuracy = 0.0;
  double error = 0.0;
};

ScoreSet score(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred, std::size_t n_pairs,
               std::uint64_t seed);

// Per-scenario train/test split and the experience trained on it.
struct ScenarioRun {
  std::string id;
  KPDataset train;
  KPDataset test;
  QueryLog log;
  std::shared_ptr<const Experience> experience;
};

// Seeds are derived per scenario id, so every entry is reproducible alone.
ScenarioRun prepare_scenario(const SyntheticScenario& s, std::uint64_t seed, const EvalOptions& options = {});
std::vector<ScenarioRun> build_experience_bank(std::span<const SyntheticScenario> suite, std::uint64_t seed,
                                               const EvalOptions& options = {});

// Lasso on min-max scaled raw knob values.
struct LinearBaseline {
  KnobUniverse universe;
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double predict(const KnobConfig& x) const;
};
LinearBaseline fit_linear_baseline(const KPDataset& D, std::uint64_t seed, int folds = 5);

struct OriginRow {
  std::string scenario;
  ScoreSet ike;
  ScoreSet baseline;
  std::size_t rules = 0;
  std::size_t nonzero = 0;
};
struct OriginReport {
  std::vector<OriginRow> rows;
  ScoreSet ike_mean;
  ScoreSet baseline_mean;
};
OriginReport run_origin_eval(std::span<const ScenarioRun> bank, std::uint64_t seed, const EvalOptions& options = {});

struct TransferRow {
  std::string scenario;
  ScoreSet transfer;
  double origin_pearson = 0.0;
  std::vector<std::string> members;
  std::vector<double> weights;
};
struct TransferReport {
  std::size_t K = 0;
  std::size_t N = 0;
  std::vector<TransferRow> rows;
  ScoreSet mean;
  double origin_pearson_mean = 0.0;
};
// Leave-one-scenario-out: each target transfers from every other experience.
TransferReport run_transfer_eval(std::span<const SyntheticScenario> suite, std::span<const ScenarioRun> bank,
                                 std::size_t K, std::size_t N, std::uint64_t seed,
                                 const EvalOptions& options = {});

struct RobustnessReport {
  std::vector<TransferReport> per_k;  // K = 1..max_k
};
RobustnessReport run_robustness_sweep(std::span<const SyntheticScenario> suite, std::span<const ScenarioRun> bank,
                                      std::size_t max_k, std::uint64_t seed, const EvalOptions& options = {});

struct RecallRow {
  std::string scenario;
  std::vector<std::string> truth;
  std::vector<std::string> ranked;       // direct ranking on the scenario's own samples
  std::vector<std::string> transferred;  // ranking transferred from the other scenarios
  double recall = 0.0;
  double transferred_recall = 0.0;
};
struct RecallReport {
  std::vector<RecallRow> rows;
  double mean = 0.0;
  double transferred_mean = 0.0;
};
// Top-3 recall against the simulator's ground truth, 70 noiseless LHS points.
RecallReport ranking_recall(std::span<const SyntheticScenario> suite, std::uint64_t seed,
                            const EvalOptions& options = {});

std::string to_csv(const OriginReport& r);
std::string to_csv(const TransferReport& r);
std::string to_csv(const RobustnessReport& r);
std::string to_csv(const RecallReport& r);
Json summary(const OriginReport& r);
Json summary(const TransferReport& r);
Json summary(const RobustnessReport& r);
Json summary(const RecallReport& r);

}  // namespace iwek

#endif  // IWEK_EVAL_HPP
