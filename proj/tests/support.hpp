#ifndef IWEK_TESTS_SUPPORT_HPP
#define IWEK_TESTS_SUPPORT_HPP

#include <cmath>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>

#include "iwek/core.hpp"
#include "iwek/estimator.hpp"
#include "iwek/experience.hpp"
#include "iwek/random.hpp"
#include "iwek/ranking.hpp"
#include "iwek/sim.hpp"
#include "iwek/transfer.hpp"

namespace iwek::test {

inline KnobSpec continuous(std::string name, double lo, double hi, double def) {
  return {std::move(name), KnobKind::kContinuous, lo, hi, def, {}};
}

inline KnobSpec integer(std::string name, double lo, double hi, double def) {
  return {std::move(name), KnobKind::kInteger, lo, hi, def, {}};
}

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("iwek-test-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline const std::vector<SyntheticScenario>& suite() {
  static const auto s = make_scenario_suite(0);
  return s;
}

inline KPDataset sample_kp(const SyntheticScenario& s, std::size_t n, std::uint64_t seed, bool noisy = true) {
  Rng rng(derive_seed(seed, "test_sample", s.id()));
  const KnobUniverse u(s.knobs);
  std::vector<KnobConfig> X;
  for (std::size_t i = 0; i < n; ++i) {
    KnobConfig x;
    for (const auto& k : u.specs()) {
      double v = k.lo + uniform01(rng) * k.width();
      if (k.kind != KnobKind::kContinuous) v = std::round(v);
      x.set(k.name, v);
    }
    X.push_back(std::move(x));
  }
  return collect_kp(s, X, noisy);
}

// Small, cheap experience for tests that need a populated repository.
inline std::shared_ptr<const Experience> small_experience(std::string_view id, std::uint64_t seed = 1) {
  static std::map<std::string, std::shared_ptr<const Experience>> cache;
  const std::string key = std::string(id) + "/" + std::to_string(seed);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  const auto& s = find_scenario(suite(), id);
  const KPDataset D = sample_kp(s, 40, seed);
  IkeOptions options;
  options.budget = 4;
  auto e = std::make_shared<Experience>();
  e->scenario_id = s.id();
  e->knob_universe = s.knobs;
  e->estimator = fit_ike(D, seed, options);
  e->fingerprint = fingerprint_from_log(gen_log(s, 4000, seed));
  auto models = default_ensemble(seed);
  e->ranking = rank_knobs(models, D, KnobUniverse(s.knobs).names(), seed);
  return cache.emplace(key, std::move(e)).first->second;
}

}  // namespace iwek::test

#endif  // IWEK_TESTS_SUPPORT_HPP
