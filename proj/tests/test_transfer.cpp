#include <gtest/gtest.h>

#include "iwek/eval.hpp"
#include "iwek/metrics.hpp"
#include "iwek/spline.hpp"
#include "iwek/transfer.hpp"
#include "support.hpp"

using namespace iwek;
using test::continuous;

namespace {

Fingerprint fp(std::array<double, 4> suid, std::array<double, 8> ops = {1, 0, 0, 0, 0, 0, 0, 0}) {
  Fingerprint f;
  f.suid = suid;
  f.ops = ops;
  return f;
}

std::shared_ptr<const Experience> with_fingerprint(const Fingerprint& f, std::string id) {
  auto e = std::make_shared<Experience>(*test::small_experience("tpcc-1"));
  e->fingerprint = f;
  e->scenario_id = std::move(id);
  return e;
}

LabelSource oracle_labels(const SyntheticScenario& s) {
  return [&s](std::span<const KnobConfig> S) {
    std::vector<double> y;
    for (const auto& x : S) y.push_back(oracle_perf(s, x, true));
    return y;
  };
}

std::vector<std::shared_ptr<const Experience>> bank(std::initializer_list<const char*> ids) {
  std::vector<std::shared_ptr<const Experience>> out;
  for (const char* id : ids) out.push_back(test::small_experience(id));
  return out;
}

}  // namespace

TEST(FingerprintFromLog, Ratios) {
  QueryLog log;
  log.suid = {50, 50, 0, 0};
  log.ops = {0, 3, 0, 0, 0, 0, 0, 1};
  const Fingerprint f = fingerprint_from_log(log);
  EXPECT_EQ(f.suid, (std::array<double, 4>{0.5, 0.5, 0, 0}));
  EXPECT_EQ(f.ops[1], 0.75);
  EXPECT_EQ(fingerprint_from_log(QueryLog{}), Fingerprint{});
}

TEST(DisRanking, Examples) {
  const Fingerprint a = fp({1, 0, 0, 0}), b = fp({0, 1, 0, 0});
  EXPECT_EQ(dis_ranking(a, a), 0.0);
  EXPECT_DOUBLE_EQ(dis_ranking(a, b), std::sqrt(2.0));
  const Fingerprint c = fp({0.5, 0.5, 0, 0}, {0.2, 0.8, 0, 0, 0, 0, 0, 0});
  const Fingerprint d = fp({0.25, 0.25, 0.5, 0}, {0.5, 0.5, 0, 0, 0, 0, 0, 0});
  // 0.0625 + 0.0625 + 0.25 + 0.09 + 0.09
  EXPECT_DOUBLE_EQ(dis_ranking(c, d), std::sqrt(0.555));
}

TEST(MatchExperiences, Examples) {
  const Fingerprint target = fp({1, 0, 0, 0});
  const std::vector<std::shared_ptr<const Experience>> repo = {
      with_fingerprint(fp({0.1, 0.9, 0, 0}), "far"), with_fingerprint(fp({1, 0, 0, 0}), "same"),
      with_fingerprint(fp({0.9, 0.1, 0, 0}), "near")};
  const auto all = match_experiences(repo, target, 3);
  EXPECT_EQ(all.indices, (std::vector<std::size_t>{1, 2, 0}));
  EXPECT_FALSE(all.truncated);
  EXPECT_EQ(all.distances[0], 0.0);
  const auto two = match_experiences(repo, target, 2);
  EXPECT_EQ(two.indices, (std::vector<std::size_t>{1, 2}));
  EXPECT_TRUE(match_experiences(repo, target, 5).truncated);
  EXPECT_EQ(match_experiences(repo, target, 5).indices.size(), 3u);
}

TEST(SimilarityWeights, Examples) {
  EXPECT_EQ(similarity_weights(std::vector<double>{0.4}), std::vector<double>{1.0});
  const auto eq = similarity_weights(std::vector<double>{0.2, 0.2, 0.2, 0.2});
  for (double w : eq) EXPECT_DOUBLE_EQ(w, 0.25);
  const auto w = similarity_weights(std::vector<double>{0.1, 0.3});
  EXPECT_NEAR(w[0], 0.75, 1e-5);
  EXPECT_NEAR(w[1], 0.25, 1e-5);
  const auto exact = similarity_weights(std::vector<double>{0.0, 1.0});
  EXPECT_GT(exact[0], 0.999);
}

TEST(TransferRanking, Examples) {
  const KnobRanking a({{"x", 2}, {"y", 1}, {"z", 0}});
  const KnobRanking b({{"x", 0}, {"y", 10}, {"z", 5}});
  const std::vector<KnobRanking> one = {a};
  EXPECT_EQ(transfer_ranking(one, std::vector<double>{1.0}).ordered().front().first, "x");
  const std::vector<KnobRanking> same = {a, a};
  EXPECT_EQ(top_k(transfer_ranking(same, std::vector<double>{0.3, 0.7}), 3), top_k(a, 3));
  // Normalized: a -> x 1, y 0.5, z 0; b -> x 0, y 1, z 0.5.
  const std::vector<KnobRanking> two = {a, b};
  const KnobRanking t = transfer_ranking(two, std::vector<double>{0.75, 0.25});
  EXPECT_DOUBLE_EQ(t.score("x"), 0.75);
  EXPECT_DOUBLE_EQ(t.score("y"), 0.625);
  EXPECT_DOUBLE_EQ(t.score("z"), 0.125);
}

TEST(TransferRanking, OrderInvariantUnderPositiveRescaling) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<KnobRanking> members, scaled;
    for (int m = 0; m < 3; ++m) {
      std::map<std::string, double> w, ws;
      const double alpha = 0.01 + 100 * uniform01(rng);
      for (const auto& k : {"a", "b", "c", "d", "e"}) {
        const double v = standard_normal(rng);
        w[k] = v;
        ws[k] = alpha * v;
      }
      members.emplace_back(w);
      scaled.emplace_back(ws);
    }
    const std::vector<double> weights = {0.5, 0.3, 0.2};
    EXPECT_EQ(top_k(transfer_ranking(members, weights), 5), top_k(transfer_ranking(scaled, weights), 5));
  }
}

TEST(ReshapeConfig, Cases) {
  const KnobConfig x{{"k1", 1}, {"k2", 2}, {"k3", 3}};
  const KnobConfig defaults{{"k1", 10}, {"k2", 20}, {"k4", 40}};
  const std::vector<std::string> partial = {"k1", "k2", "k4"};
  const Reshaped p = reshape_config(x, partial, defaults);
  EXPECT_EQ(p.kind, Containment::kPartial);
  EXPECT_EQ(p.config, (KnobConfig{{"k1", 1}, {"k2", 2}, {"k4", 40}}));
  const std::vector<std::string> same = {"k1", "k2", "k3"};
  EXPECT_EQ(reshape_config(x, same, defaults).config, x);
  EXPECT_EQ(reshape_config(x, same, defaults).kind, Containment::kFull);
  const std::vector<std::string> sub = {"k2"};
  EXPECT_EQ(reshape_config(x, sub, defaults).config, (KnobConfig{{"k2", 2}}));
  const std::vector<std::string> disjoint = {"k9"};
  const Reshaped n = reshape_config(x, disjoint, defaults);
  EXPECT_EQ(n.kind, Containment::kNone);
  EXPECT_TRUE(n.config.empty());
}

TEST(CanonicalOrder, Lexicographic) {
  const std::vector<KnobConfig> S = {{{"a", 2}, {"b", 0}}, {{"a", 1}, {"b", 5}}, {{"a", 1}, {"b", 3}}};
  EXPECT_EQ(canonical_order(S), (std::vector<std::size_t>{2, 1, 0}));
}

TEST(SplineFeatures, ConstantAndLinearInputs) {
  const auto c = spline_features(Eigen::VectorXd::Constant(10, 3.0));
  EXPECT_EQ(c.coefficients.size(), 5);
  EXPECT_NEAR(c.coefficients[0], 0.5, 1e-12);
  EXPECT_LT(c.coefficients.tail(4).cwiseAbs().maxCoeff(), 1e-12);

  const auto l = spline_features(Eigen::VectorXd::LinSpaced(10, 4.0, 22.0));
  EXPECT_NEAR(l.coefficients[0], 0.0, 1e-12);
  EXPECT_NEAR(l.coefficients[1], 1.0, 1e-12);
  EXPECT_LT(l.coefficients.tail(3).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(l.y_min, 4.0);
  EXPECT_EQ(l.y_max, 22.0);
  EXPECT_THROW(spline_features(Eigen::VectorXd::Ones(3)), DataError);
}

TEST(SplineFeatures, NaturalBasisIsLinearOutsideBoundaryKnots) {
  const Eigen::VectorXd knots = Eigen::VectorXd::LinSpaced(5, 0.0, 1.0);
  Eigen::VectorXd t(3);
  t << 1.0, 1.5, 2.0;
  const Eigen::MatrixXd B = natural_spline_basis<double>(t, knots);
  for (Eigen::Index j = 0; j < B.cols(); ++j) EXPECT_NEAR(B(2, j) - B(1, j), B(1, j) - B(0, j), 1e-12);
}

TEST(SplineFeatures, DatasetUsesCanonicalOrder) {
  KPDataset a;
  a.X = {{{"a", 3}}, {{"a", 1}}, {{"a", 2}}, {{"a", 0}}};
  a.y = {4, 2, 3, 1};
  KPDataset b;
  b.X = {{{"a", 0}}, {{"a", 1}}, {{"a", 2}}, {{"a", 3}}};
  b.y = {1, 2, 3, 4};
  EXPECT_EQ(spline_features(a).coefficients, spline_features(b).coefficients);
}

TEST(DisEstimator, Examples) {
  const Eigen::Vector2d a(1, 1), b(1, 0), c(0, 1);
  EXPECT_DOUBLE_EQ(dis_estimator(a, a), 1.0);
  EXPECT_DOUBLE_EQ(dis_estimator(b, c), 0.0);
  EXPECT_NEAR(dis_estimator(a, b), 1 / std::sqrt(2.0), 1e-15);
  EXPECT_EQ(dis_estimator(Eigen::Vector2d::Zero(), a), 0.0);
  EXPECT_THROW(dis_estimator(Eigen::VectorXd(a), Eigen::VectorXd::Ones(3)), DataError);
}

TEST(DisEstimator, ScaleInvariant) {
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd d1(5), d2(5);
    for (int i = 0; i < 5; ++i) d1[i] = standard_normal(rng), d2[i] = standard_normal(rng);
    const double alpha = std::exp(4 * standard_normal(rng));
    EXPECT_NEAR(dis_estimator(Eigen::VectorXd(alpha * d1), d2), dis_estimator(d1, d2), 1e-12);
  }
}

TEST(TransferEstimator, InvariantsOnSimulatedBank) {
  const auto repo = bank({"tpcc-2", "tpcc-5", "ycsb-1", "ycsb-4"});
  const auto& target = find_scenario(test::suite(), "tpcc-1");
  const Fingerprint f = fingerprint_from_log(gen_log(target, 4000, 3));
  const auto M = transfer_estimator(repo, f, KnobUniverse(target.knobs), oracle_labels(target), 11);
  EXPECT_NO_THROW(validate_transferred(M));
  EXPECT_EQ(M.members.size(), 3u);
  double sum = 0;
  for (const auto& m : M.members) sum += m.weight;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_EQ(M.design.S.size(), 10u);
  EXPECT_EQ(M.design.knobs.size(), 3u);
  EXPECT_EQ(M.design_labels.size(), 10u);

  Rng rng(1);
  const KnobUniverse u(target.knobs);
  for (int t = 0; t < 50; ++t) {
    KnobConfig x;
    for (const auto& k : u.specs()) x.set(k.name, std::round(k.lo + uniform01(rng) * k.width()));
    x.set("checkpoint_completion_target", 0.5);
    x.set("random_page_cost", 2.0);
    double lo = 1e300, hi = -1e300;
    for (const auto& m : M.members) {
      const double p = predict(m.experience->estimator, reshape_config(x, m.knobs, m.fill_defaults).config);
      lo = std::min(lo, p), hi = std::max(hi, p);
    }
    const double y = predict_transferred(M, x);
    EXPECT_GE(y, lo - 1e-12);
    EXPECT_LE(y, hi + 1e-12);
  }
  EXPECT_EQ(M, transfer_estimator(repo, f, KnobUniverse(target.knobs), oracle_labels(target), 11));
}

TEST(TransferEstimator, SingleMemberIsThatMember) {
  const auto repo = bank({"tpcc-3"});
  const auto& target = find_scenario(test::suite(), "tpcc-6");
  TransferOptions o;
  o.K = 1;
  const auto M = transfer_estimator(repo, expected_fingerprint(target), KnobUniverse(target.knobs),
                                    oracle_labels(target), 2, o);
  ASSERT_EQ(M.members.size(), 1u);
  EXPECT_EQ(M.members[0].weight, 1.0);
  const KnobConfig x{{"shared_buffers", 4000}, {"work_mem", 64}};
  EXPECT_EQ(predict_transferred(M, x), predict(repo[0]->estimator, x));
}

TEST(TransferEstimator, EqualMemberPredictionsBlendToTheSameValue) {
  auto e = test::small_experience("ycsb-2");
  auto twin = std::make_shared<Experience>(*e);
  twin->scenario_id = "ycsb-2-copy";
  const std::vector<std::shared_ptr<const Experience>> repo = {e, twin};
  const auto& target = find_scenario(test::suite(), "ycsb-8");
  TransferOptions o;
  o.K = 2;
  const auto M = transfer_estimator(repo, expected_fingerprint(target), KnobUniverse(target.knobs),
                                    oracle_labels(target), 2, o);
  const KnobConfig x{{"commit_delay", 40000}};
  EXPECT_NEAR(predict_transferred(M, x), predict(e->estimator, x), 1e-12);
}

TEST(TransferEstimator, HandBlendOfTwoMembers) {
  const std::vector<KnobSpec> knobs = {continuous("a", 0, 10, 0)};
  Rule r;
  r.conjuncts = {{"a", {5, std::numeric_limits<double>::infinity()}}};
  auto e1 = std::make_shared<Experience>();
  e1->knob_universe = knobs;
  e1->scenario_id = "one";
  e1->estimator = InterpretableEstimator(knobs, {r}, Eigen::VectorXd::Constant(1, 2.0), 1.0, 0.1);
  auto e2 = std::make_shared<Experience>(*e1);
  e2->scenario_id = "two";
  e2->estimator = InterpretableEstimator(knobs, {r}, Eigen::VectorXd::Constant(1, -4.0), 3.0, 0.1);
  TransferredEstimator M;
  M.knobs = knobs;
  M.members = {{e1, 0.75, 0, 1, false, {"a"}, {{"a", 0}}}, {e2, 0.25, 0, 1, false, {"a"}, {{"a", 0}}}};
  EXPECT_NO_THROW(validate_transferred(M));
  EXPECT_DOUBLE_EQ(predict_transferred(M, {{"a", 1}}), 0.75 * 1 + 0.25 * 3);
  EXPECT_DOUBLE_EQ(predict_transferred(M, {{"a", 6}}), 0.75 * 3 + 0.25 * -1);
  M.members[1].weight = 0.5;
  EXPECT_THROW(validate_transferred(M), ValidationError);
}

TEST(TransferEstimator, DisjointMembersAreUnusable) {
  const std::vector<KnobSpec> other = {continuous("zz", 0, 1, 0.5)};
  auto e = std::make_shared<Experience>();
  e->knob_universe = other;
  e->scenario_id = "alien";
  e->estimator = InterpretableEstimator(other, {Rule{}}, Eigen::VectorXd::Zero(1), 1.0, 0.1);
  const std::vector<std::shared_ptr<const Experience>> only = {e};
  const auto& target = find_scenario(test::suite(), "tpcc-1");
  try {
    transfer_estimator(only, expected_fingerprint(target), KnobUniverse(target.knobs), oracle_labels(target), 1);
    FAIL() << "expected an error";
  } catch (const DataError& err) {
    EXPECT_NE(std::string(err.what()).find("no transferable experience"), std::string::npos);
  }

  auto repo = bank({"tpcc-2"});
  repo.push_back(e);
  TransferOptions o;
  o.K = 2;
  const Fingerprint f = expected_fingerprint(target);
  auto alien = std::make_shared<Experience>(*e);
  alien->fingerprint = f;  // nearest, but still unusable
  repo[1] = alien;
  const auto M = transfer_estimator(repo, f, KnobUniverse(target.knobs), oracle_labels(target), 1, o);
  ASSERT_EQ(M.members.size(), 2u);
  for (const auto& m : M.members) {
    if (m.experience->scenario_id == "alien") {
      EXPECT_TRUE(m.mismatch);
      EXPECT_EQ(m.weight, 0.0);
    } else {
      EXPECT_EQ(m.weight, 1.0);
    }
  }
}

// With ten noisy design points a single draw can favour a look-alike member,
// so the claim is checked over ten design seeds.
TEST(TransferEstimator, OwnExperienceDominatesAcrossSeeds) {
  std::vector<SyntheticScenario> sub;
  for (const char* id : {"tpcc-1", "tpcc-5", "ycsb-3"}) sub.push_back(find_scenario(test::suite(), id));
  const auto bank = build_experience_bank(sub, 1);
  std::vector<std::shared_ptr<const Experience>> repo;
  for (const auto& r : bank) repo.push_back(r.experience);
  const auto& target = sub[0];
  const KPDataset& held_out = bank[0].test;
  const Eigen::VectorXd y = label_vector(held_out);
  TransferOptions o;
  o.K = 3;
  int own_first = 0;
  double weighted = 0, uniform = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto M = transfer_estimator(repo, fingerprint_from_log(bank[0].log), KnobUniverse(target.knobs),
                                      oracle_labels(target), seed, o);
    auto U = M;
    for (auto& m : U.members) m.weight = 1.0 / 3.0;
    Eigen::VectorXd a(y.size()), b(y.size());
    for (std::size_t i = 0; i < held_out.size(); ++i) {
      a[static_cast<Eigen::Index>(i)] = predict_transferred(M, held_out.X[i]);
      b[static_cast<Eigen::Index>(i)] = predict_transferred(U, held_out.X[i]);
    }
    const auto best = std::max_element(M.members.begin(), M.members.end(),
                                       [](const auto& p, const auto& q) { return p.weight < q.weight; });
    own_first += best->experience->scenario_id == "tpcc-1";
    weighted += pearson(y, a);
    uniform += pearson(y, b);
  }
  EXPECT_GE(own_first, 5);
  EXPECT_GE(weighted, uniform);
}
