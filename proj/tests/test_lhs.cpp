#include <gtest/gtest.h>

#include <set>

#include "iwek/lhs.hpp"
#include "support.hpp"

using namespace iwek;

namespace {

// Stratum of a value for N equal-width strata over [lo, hi].
std::size_t stratum(double v, const KnobSpec& s, std::size_t N) {
  const double u = (v - s.lo) / s.width();
  return std::min(N - 1, static_cast<std::size_t>(u * static_cast<double>(N)));
}

// A discrete knob can only be stratified when every stratum holds a value.
bool stratifiable(const KnobSpec& s, std::size_t N) {
  if (s.kind == KnobKind::kContinuous) return true;
  for (std::size_t b = 0; b < N; ++b) {
    const double a = s.lo + s.width() * static_cast<double>(b) / static_cast<double>(N);
    const double c = s.lo + s.width() * static_cast<double>(b + 1) / static_cast<double>(N);
    if (std::ceil(a) > (b + 1 == N ? std::floor(c) : std::ceil(c) - 1.0)) return false;
  }
  return true;
}

}  // namespace

TEST(Lhs, UnitDesignIsStratified) {
  for (Eigen::Index n : {4, 10, 50}) {
    Rng rng(static_cast<std::uint64_t>(n));
    const Eigen::MatrixXd U = lhs_unit(n, 12, rng);
    for (Eigen::Index j = 0; j < 12; ++j) {
      std::vector<int> count(static_cast<std::size_t>(n), 0);
      for (Eigen::Index i = 0; i < n; ++i) ++count[static_cast<std::size_t>(U(i, j) * static_cast<double>(n))];
      for (int c : count) EXPECT_EQ(c, 1);
    }
  }
}

TEST(Lhs, OnePointPerStratumPerKnob) {
  const auto knobs = default_knob_universe();
  for (std::size_t N : {4u, 10u, 50u}) {
    for (std::uint64_t seed : {0u, 1u, 77u}) {
      const auto d = lhs_sample(N, knobs, seed);
      ASSERT_EQ(d.S.size(), N);
      for (const auto& k : knobs) {
        std::vector<int> count(N, 0);
        for (const auto& x : d.S) {
          const double v = x.at(k.name);
          ASSERT_TRUE(k.contains(v)) << k.name;
          if (k.kind != KnobKind::kContinuous) ASSERT_EQ(v, std::round(v));
          ++count[stratum(v, k, N)];
        }
        if (!stratifiable(k, N)) continue;
        for (std::size_t b = 0; b < N; ++b) EXPECT_EQ(count[b], 1) << k.name << " N=" << N << " stratum " << b;
      }
    }
  }
}

TEST(Lhs, QuartilesOfUnitKnob) {
  const std::vector<KnobSpec> one = {test::continuous("x", 0, 1, 0.5)};
  const auto d = lhs_sample(4, one, 3);
  std::set<int> q;
  for (const auto& x : d.S) q.insert(static_cast<int>(x.at("x") * 4));
  EXPECT_EQ(q, (std::set<int>{0, 1, 2, 3}));
}

TEST(Lhs, TwoKnobsTenPoints) {
  const std::vector<KnobSpec> two = {test::continuous("a", -5, 5, 0), test::integer("b", 0, 1000, 10)};
  const auto d = lhs_sample(10, two, 8);
  EXPECT_EQ(d.knobs, (std::vector<std::string>{"a", "b"}));
  for (const auto& k : two) {
    std::set<std::size_t> seen;
    for (const auto& x : d.S) seen.insert(stratum(x.at(k.name), k, 10));
    EXPECT_EQ(seen.size(), 10u);
  }
}

TEST(Lhs, DeterministicPerSeed) {
  const auto knobs = default_knob_universe();
  EXPECT_EQ(lhs_sample(10, knobs, 5), lhs_sample(10, knobs, 5));
  EXPECT_NE(lhs_sample(10, knobs, 5).S, lhs_sample(10, knobs, 6).S);
}

TEST(Lhs, RejectsDegenerateRequests) {
  EXPECT_THROW(lhs_sample(3, default_knob_universe(), 0), DataError);
  EXPECT_THROW(lhs_sample(10, std::vector<KnobSpec>{}, 0), DataError);
}
