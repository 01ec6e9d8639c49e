#ifndef IWEK_SIM_HPP
#define IWEK_SIM_HPP

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iwek/core.hpp"

namespace iwek {

// Synthetic stand-in for a DBMS under a transaction mix. Each knob responds
// through a unit-range curve on its normalized value u in [0,1]:
//   saturating  (1 - exp(-u/c)) / (1 - exp(-1/c)), c = location
//   peaked      1 - ((u - c) / max(c, 1 - c))^2
//   step        u > c ? 1 : 0
//   flat        0
// and contributes amplitude * (g(u) - g(u_default)), so the default config
// scores exactly the baseline.
enum class ResponseShape { kSaturating, kPeaked, kStep, kFlat };

std::string_view to_string(ResponseShape s);
ResponseShape response_shape_from_string(std::string_view s);

struct KnobResponse {
  std::string knob;
  ResponseShape shape = ResponseShape::kFlat;
  double amplitude = 0.0;
  double location = 0.5;
  bool operator==(const KnobResponse&) const = default;
};

// amplitude * (g_a(u_a) - g_a(u_a0)) * (g_b(u_b) - g_b(u_b0)); zero whenever
// either knob sits at its default.
struct Interaction {
  std::string a;
  std::string b;
  double amplitude = 0.0;
  bool operator==(const Interaction&) const = default;
};

struct SimConfig {
  double noise_fraction = 0.02;    // sigma as a fraction of the summed amplitudes
  double importance_ratio = 5.0;   // min top-3 amplitude over max remaining amplitude
  double top_amplitude_sum = 0.6;
  double interaction_scale = 0.15;
};

struct SyntheticScenario {
  Scenario scenario;
  std::string family;  // "tpcc" or "ycsb"
  std::vector<KnobSpec> knobs;
  std::vector<KnobResponse> responses;  // one per knob, universe order
  std::vector<Interaction> interactions;
  double baseline = 1.0;
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;

  const std::string& id() const { return scenario.id; }
  bool operator==(const SyntheticScenario&) const = default;
};

// Twelve Postgres-named knobs (names are labels only).
std::vector<KnobSpec> default_knob_universe();

// Transaction classes of a family in canonical order.
std::vector<std::string> family_classes(std::string_view family);

// Builds the oracle of one scenario. Parameters depend on (family, mix, scale,
// seed); the noise stream additionally on the id.
SyntheticScenario make_scenario(const Scenario& scenario, std::string_view family, std::uint64_t seed,
                                const SimConfig& config = {});

// Sixteen scenarios, tpcc-1..8 then ycsb-1..8, with the benchmark's mixes.
std::vector<SyntheticScenario> make_scenario_suite(std::uint64_t seed, const SimConfig& config = {});

const SyntheticScenario& find_scenario(std::span<const SyntheticScenario> suite, std::string_view id);

double oracle_perf(const SyntheticScenario& s, const KnobConfig& x, bool noisy);

KPDataset collect_kp(const SyntheticScenario& s, std::span<const KnobConfig> configs, bool noisy);

QueryLog gen_log(const SyntheticScenario& s, std::uint64_t n_queries, std::uint64_t seed);

// Fingerprint gen_log converges to as n grows.
Fingerprint expected_fingerprint(const SyntheticScenario& s);
Fingerprint expected_fingerprint(std::span<const TxnRatio> mix, std::string_view family);

// Knobs by descending amplitude (ties lexicographic).
std::vector<std::string> ground_truth_ranking(const SyntheticScenario& s);

// Range of the noiseless oracle when one knob sweeps `points` evenly spaced
// values with every other knob at its default.
double sweep_range(const SyntheticScenario& s, std::string_view knob, int points = 201);

}  // namespace iwek

#endif  // IWEK_SIM_HPP
