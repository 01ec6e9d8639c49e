#include <gtest/gtest.h>

#include "iwek/eval.hpp"
#include "support.hpp"

using namespace iwek;

namespace {

EvalOptions small_options() {
  EvalOptions o;
  o.n_points = 40;
  o.n_train = 28;
  o.log_queries = 3000;
  o.ike.budget = 3;
  return o;
}

std::vector<SyntheticScenario> mini_suite() {
  std::vector<SyntheticScenario> out;
  for (const char* id : {"tpcc-1", "tpcc-2", "tpcc-4", "ycsb-1"}) out.push_back(find_scenario(test::suite(), id));
  return out;
}

}  // namespace

TEST(Score, PerfectAndFlatPredictions) {
  Eigen::VectorXd y(4);
  y << 1, 3, 2, 5;
  const ScoreSet s = score(y, y, 100, 0);
  EXPECT_EQ(s.pearson, 1.0);
  EXPECT_EQ(s.pearson_error, 0.0);
  EXPECT_EQ(s.accuracy, 1.0);
  EXPECT_EQ(s.error, 0.0);
  const ScoreSet flat = score(y, Eigen::VectorXd::Constant(4, 2.0), 100, 0);
  EXPECT_EQ(flat.pearson, 0.0);
  EXPECT_EQ(flat.accuracy, 0.0);
}

TEST(LinearBaseline, RecoversALinearResponse) {
  KPDataset D;
  D.knobs = {test::continuous("a", 0, 10, 0), test::continuous("b", 0, 1, 0)};
  Rng rng(2);
  for (int i = 0; i < 80; ++i) {
    const double a = 10 * uniform01(rng), b = uniform01(rng);
    D.X.push_back({{"a", a}, {"b", b}});
    D.y.push_back(3 * a - 2 * b + 1);
  }
  const LinearBaseline m = fit_linear_baseline(D, 1);
  EXPECT_NEAR(m.predict({{"a", 5}, {"b", 0.5}}), 15.0, 0.05);
}

TEST(PrepareScenario, SplitAndExperience) {
  const auto& s = test::suite()[0];
  const ScenarioRun run = prepare_scenario(s, 3, small_options());
  EXPECT_EQ(run.train.size(), 28u);
  EXPECT_EQ(run.test.size(), 12u);
  ASSERT_TRUE(run.experience);
  EXPECT_EQ(run.experience->scenario_id, s.id());
  EXPECT_NO_THROW(validate_experience(*run.experience));
}

TEST(Harness, DeterministicReports) {
  const auto suite = mini_suite();
  const auto options = small_options();
  const auto bank = build_experience_bank(suite, 5, options);
  const auto bank2 = build_experience_bank(suite, 5, options);
  ASSERT_EQ(bank.size(), 4u);
  for (std::size_t i = 0; i < bank.size(); ++i) EXPECT_EQ(*bank[i].experience, *bank2[i].experience);

  const auto origin = run_origin_eval(bank, 5, options);
  EXPECT_EQ(to_csv(origin), to_csv(run_origin_eval(bank2, 5, options)));
  EXPECT_EQ(origin.rows.size(), 4u);
  EXPECT_EQ(summary(origin).dump(), summary(run_origin_eval(bank, 5, options)).dump());

  const auto transfer = run_transfer_eval(suite, bank, 2, 10, 5, options);
  EXPECT_EQ(to_csv(transfer), to_csv(run_transfer_eval(suite, bank2, 2, 10, 5, options)));
  ASSERT_EQ(transfer.rows.size(), 4u);
  for (const auto& row : transfer.rows) {
    EXPECT_EQ(std::count(row.members.begin(), row.members.end(), row.scenario), 0) << "leave-one-out";
    double sum = 0;
    for (double w : row.weights) sum += w;
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }

  const auto sweep = run_robustness_sweep(suite, bank, 2, 5, options);
  ASSERT_EQ(sweep.per_k.size(), 2u);
  EXPECT_EQ(to_csv(sweep.per_k[1]), to_csv(transfer));
}

TEST(Harness, CsvHasHeaderAndRowPerScenario) {
  const auto suite = mini_suite();
  const auto bank = build_experience_bank(suite, 1, small_options());
  const std::string csv = to_csv(run_origin_eval(bank, 1, small_options()));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_EQ(csv.rfind("scenario,", 0), 0u);
}
