#include "iwek/sim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>

#include "iwek/error.hpp"
#include "iwek/random.hpp"

namespace iwek {

namespace {

using Suid = std::array<double, 4>;
using Ops = std::array<double, 8>;

struct TxnClass {
  std::string_view name;
  Suid suid;  // select, update, insert, delete
  Ops ops;    // seq, index, bitmap, sort, hash_join, nested_loop, merge_join, aggregate
  std::vector<std::pair<std::string_view, double>> affinity;
};

struct KnobArchetype {
  std::string_view knob;
  ResponseShape shape;
  double location;
  double base;  // family-wide importance independent of the mix
};

struct Family {
  std::string_view name;
  std::vector<TxnClass> classes;
  std::vector<KnobArchetype> knobs;
};

const std::vector<Family>& families() {
  using S = ResponseShape;
  static const std::vector<Family> all = {
      {"tpcc",
       {
           {"new_order", {0.55, 0.20, 0.25, 0.0}, {0.02, 0.70, 0.03, 0.0, 0.0, 0.20, 0.0, 0.05},
            {{"commit_delay", 0.3}, {"synchronous_commit", 0.35}, {"wal_buffers", 0.2}, {"max_wal_size", 0.1}}},
           {"payment", {0.45, 0.40, 0.15, 0.0}, {0.05, 0.75, 0.0, 0.0, 0.0, 0.15, 0.0, 0.05},
            {{"synchronous_commit", 0.4}, {"checkpoint_completion_target", 0.2}, {"wal_buffers", 0.1}}},
           {"order_status", {1.0, 0.0, 0.0, 0.0}, {0.0, 0.60, 0.0, 0.25, 0.0, 0.10, 0.0, 0.05},
            {{"work_mem", 0.3}, {"random_page_cost", 0.2}, {"effective_cache_size", 0.2}}},
           {"delivery", {0.30, 0.40, 0.0, 0.30}, {0.05, 0.55, 0.0, 0.15, 0.0, 0.05, 0.0, 0.20},
            {{"max_wal_size", 0.45}, {"maintenance_work_mem", 0.2}, {"checkpoint_completion_target", 0.3}}},
           {"stock_level", {1.0, 0.0, 0.0, 0.0}, {0.05, 0.30, 0.20, 0.0, 0.15, 0.15, 0.0, 0.15},
            {{"work_mem", 0.5}, {"effective_cache_size", 0.3}, {"default_statistics_target", 0.2}}},
       },
       {
           {"checkpoint_completion_target", S::kPeaked, 0.70, 0.0},
           {"commit_delay", S::kPeaked, 0.30, 0.45},
           {"default_statistics_target", S::kPeaked, 0.50, 0.0},
           {"effective_cache_size", S::kSaturating, 0.30, 0.0},
           {"effective_io_concurrency", S::kFlat, 0.50, 0.0},
           {"maintenance_work_mem", S::kStep, 0.50, 0.0},
           {"max_wal_size", S::kSaturating, 0.25, 0.0},
           {"random_page_cost", S::kPeaked, 0.30, 0.0},
           {"shared_buffers", S::kSaturating, 0.15, 0.50},
           {"synchronous_commit", S::kStep, 0.30, 0.0},
           {"wal_buffers", S::kSaturating, 0.20, 0.0},
           {"work_mem", S::kPeaked, 0.40, 0.0},
       }},
      {"ycsb",
       {
           {"read", {1.0, 0.0, 0.0, 0.0}, {0.0, 0.95, 0.0, 0.0, 0.0, 0.0, 0.0, 0.05},
            {{"effective_cache_size", 0.2}, {"random_page_cost", 0.3}}},
           {"insert", {0.0, 0.0, 1.0, 0.0}, {0.0, 0.80, 0.0, 0.0, 0.0, 0.0, 0.0, 0.20},
            {{"wal_buffers", 0.3}, {"max_wal_size", 0.3}, {"commit_delay", 0.2}}},
           {"scan", {1.0, 0.0, 0.0, 0.0}, {0.25, 0.35, 0.20, 0.20, 0.0, 0.0, 0.0, 0.0},
            {{"work_mem", 0.4}, {"effective_io_concurrency", 0.3}, {"random_page_cost", 0.1}}},
           {"update", {0.0, 1.0, 0.0, 0.0}, {0.0, 0.95, 0.0, 0.0, 0.0, 0.0, 0.0, 0.05},
            {{"commit_delay", 0.3}, {"synchronous_commit", 0.3}, {"wal_buffers", 0.1}}},
           {"delete", {0.0, 0.0, 0.0, 1.0}, {0.0, 0.95, 0.0, 0.0, 0.0, 0.0, 0.0, 0.05},
            {{"max_wal_size", 0.3}, {"default_statistics_target", 0.1}}},
           {"read_modify_write", {0.5, 0.5, 0.0, 0.0}, {0.0, 0.90, 0.0, 0.0, 0.0, 0.0, 0.0, 0.10},
            {{"synchronous_commit", 0.3}, {"random_page_cost", 0.2}}},
       },
       {
           {"checkpoint_completion_target", S::kFlat, 0.50, 0.0},
           {"commit_delay", S::kPeaked, 0.20, 0.0},
           {"default_statistics_target", S::kPeaked, 0.40, 0.0},
           {"effective_cache_size", S::kPeaked, 0.60, 0.40},
           {"effective_io_concurrency", S::kSaturating, 0.20, 0.0},
           {"maintenance_work_mem", S::kFlat, 0.50, 0.0},
           {"max_wal_size", S::kSaturating, 0.30, 0.0},
           {"random_page_cost", S::kPeaked, 0.20, 0.0},
           {"shared_buffers", S::kSaturating, 0.20, 0.50},
           {"synchronous_commit", S::kStep, 0.50, 0.0},
           {"wal_buffers", S::kPeaked, 0.50, 0.0},
           {"work_mem", S::kStep, 0.40, 0.0},
       }},
  };
  return all;
}

const Family& family_by_name(std::string_view name) {
  for (const auto& f : families())
    if (f.name == name) return f;
  throw DataError("unknown workload family '" + std::string(name) + "'");
}

const TxnClass& class_by_name(const Family& f, std::string_view name) {
  for (const auto& c : f.classes)
    if (c.name == name) return c;
  throw DataError("family '" + std::string(f.name) + "' has no transaction class '" + std::string(name) + "'");
}

double shape_value(ResponseShape shape, double location, double u) {
  switch (shape) {
    case ResponseShape::kSaturating:
      return (1.0 - std::exp(-u / location)) / (1.0 - std::exp(-1.0 / location));
    case ResponseShape::kPeaked: {
      const double z = (u - location) / std::max(location, 1.0 - location);
      return 1.0 - z * z;
    }
    case ResponseShape::kStep:
      return u > location ? 1.0 : 0.0;
    case ResponseShape::kFlat:
      return 0.0;
  }
  return 0.0;
}

double unit(const KnobSpec& s, double v) { return (v - s.lo) / s.width(); }

std::size_t categorical(std::span<const double> p, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  // Rounding can leave u just above the last cumulative sum.
  for (std::size_t i = p.size(); i-- > 0;)
    if (p[i] > 0.0) return i;
  return 0;
}

const std::vector<std::pair<std::string_view, std::vector<double>>>& table_mixes(std::string_view family) {
  static const std::vector<std::pair<std::string_view, std::vector<double>>> tpcc = {
      {"tpcc-1", {0.45, 0.40, 0.05, 0.05, 0.05}}, {"tpcc-2", {0.05, 0.45, 0.05, 0.40, 0.05}},
      {"tpcc-3", {0.20, 0.10, 0.50, 0.15, 0.05}}, {"tpcc-4", {0.60, 0.20, 0.10, 0.05, 0.05}},
      {"tpcc-5", {0.10, 0.20, 0.10, 0.30, 0.30}}, {"tpcc-6", {0.20, 0.10, 0.50, 0.15, 0.05}},
      {"tpcc-7", {0.45, 0.40, 0.05, 0.05, 0.05}}, {"tpcc-8", {0.05, 0.45, 0.05, 0.40, 0.05}},
  };
  static const std::vector<std::pair<std::string_view, std::vector<double>>> ycsb = {
      {"ycsb-1", {0.50, 0.05, 0.15, 0.10, 0.10, 0.10}}, {"ycsb-2", {0.20, 0.05, 0.15, 0.25, 0.10, 0.25}},
      {"ycsb-3", {0.20, 0.50, 0.10, 0.10, 0.05, 0.05}}, {"ycsb-4", {0.20, 0.10, 0.15, 0.20, 0.10, 0.25}},
      {"ycsb-5", {0.10, 0.05, 0.15, 0.10, 0.30, 0.30}}, {"ycsb-6", {0.30, 0.10, 0.20, 0.20, 0.10, 0.10}},
      {"ycsb-7", {0.50, 0.05, 0.15, 0.10, 0.10, 0.10}}, {"ycsb-8", {0.20, 0.05, 0.15, 0.25, 0.10, 0.25}},
  };
  return family == "tpcc" ? tpcc : ycsb;
}

}  // namespace

std::string_view to_string(ResponseShape s) {
  switch (s) {
    case ResponseShape::kSaturating:
      return "saturating";
    case ResponseShape::kPeaked:
      return "peaked";
    case ResponseShape::kStep:
      return "step";
    case ResponseShape::kFlat:
      return "flat";
  }
  return "flat";
}

ResponseShape response_shape_from_string(std::string_view s) {
  if (s == "saturating") return ResponseShape::kSaturating;
  if (s == "peaked") return ResponseShape::kPeaked;
  if (s == "step") return ResponseShape::kStep;
  if (s == "flat") return ResponseShape::kFlat;
  throw DataError("unknown response shape '" + std::string(s) + "'");
}

std::vector<KnobSpec> default_knob_universe() {
  using K = KnobKind;
  return {
      {"checkpoint_completion_target", K::kContinuous, 0.1, 0.9, 0.5, {}},
      {"commit_delay", K::kInteger, 0, 100000, 0, {}},
      {"default_statistics_target", K::kInteger, 10, 1000, 100, {}},
      {"effective_cache_size", K::kInteger, 64, 16384, 4096, {}},
      {"effective_io_concurrency", K::kInteger, 0, 256, 1, {}},
      {"maintenance_work_mem", K::kInteger, 16, 2048, 64, {}},
      {"max_wal_size", K::kInteger, 256, 16384, 1024, {}},
      {"random_page_cost", K::kContinuous, 1.0, 8.0, 4.0, {}},
      {"shared_buffers", K::kInteger, 16, 8192, 128, {}},
      {"synchronous_commit", K::kOrdinal, 0, 4, 3, {"off", "local", "remote_write", "on", "remote_apply"}},
      {"wal_buffers", K::kInteger, 1, 256, 16, {}},
      {"work_mem", K::kInteger, 1, 1024, 4, {}},
  };
}

std::vector<std::string> family_classes(std::string_view family) {
  std::vector<std::string> out;
  for (const auto& c : family_by_name(family).classes) out.emplace_back(c.name);
  return out;
}

SyntheticScenario make_scenario(const Scenario& scenario, std::string_view family, std::uint64_t seed,
                                const SimConfig& config) {
  validate_scenario(scenario);
  const Family& fam = family_by_name(family);
  SyntheticScenario s;
  s.scenario = scenario;
  s.family = std::string(family);
  s.knobs = KnobUniverse(default_knob_universe()).specs();

  std::map<std::string, double, std::less<>> raw;
  for (const auto& a : fam.knobs) raw[std::string(a.knob)] = a.base;
  for (const auto& t : scenario.txn_mix) {
    const auto& c = class_by_name(fam, t.name);
    for (const auto& [knob, w] : c.affinity) raw[std::string(knob)] += t.ratio * w;
  }

  const double log_scale = std::log(scenario.data_scale_gb);
  for (const auto& a : fam.knobs) {
    KnobResponse r;
    r.knob = std::string(a.knob);
    r.shape = a.shape;
    Rng rng(derive_seed(seed, "archetype", fam.name, a.knob));
    double loc = a.location + 0.1 * (uniform01(rng) - 0.5) + 0.03 * log_scale;
    if (a.shape == ResponseShape::kSaturating) loc = std::clamp(loc, 0.05, 0.6);
    else loc = std::clamp(loc, 0.1, 0.9);
    r.location = loc;
    r.amplitude = a.shape == ResponseShape::kFlat ? 0.0 : raw[r.knob];
    s.responses.push_back(r);
  }
  std::sort(s.responses.begin(), s.responses.end(),
            [](const auto& a, const auto& b) { return a.knob < b.knob; });

  // Enforce a clear top-3: shrink the rest until the gap holds, then scale the
  // whole curve family so the top-3 amplitudes sum to the configured total.
  std::vector<std::size_t> order(s.responses.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return s.responses[a].amplitude > s.responses[b].amplitude;
  });
  const double third = s.responses[order[2]].amplitude;
  if (!(third > 0.0)) throw DataError("scenario '" + scenario.id + "' has fewer than 3 responsive knobs");
  double rest_max = 0.0;
  for (std::size_t i = 3; i < order.size(); ++i) rest_max = std::max(rest_max, s.responses[order[i]].amplitude);
  const double limit = third / config.importance_ratio;
  const double shrink = rest_max > limit ? limit / rest_max : 1.0;
  for (std::size_t i = 3; i < order.size(); ++i) s.responses[order[i]].amplitude *= shrink;
  double top = 0.0;
  for (std::size_t i = 0; i < 3; ++i) top += s.responses[order[i]].amplitude;
  double total = 0.0;
  for (auto& r : s.responses) {
    r.amplitude *= config.top_amplitude_sum / top;
    total += r.amplitude;
  }

  Rng sign_rng(derive_seed(seed, "interaction", fam.name));
  for (auto [i, j] : {std::pair{order[0], order[1]}, std::pair{order[1], order[2]}}) {
    const auto& a = s.responses[i];
    const auto& b = s.responses[j];
    const double sign = uniform01(sign_rng) < 0.5 ? -1.0 : 1.0;
    s.interactions.push_back({std::min(a.knob, b.knob), std::max(a.knob, b.knob),
                              sign * config.interaction_scale * std::sqrt(a.amplitude * b.amplitude)});
  }

  s.baseline = 1.0;
  s.noise_sigma = config.noise_fraction * total;
  s.noise_seed = derive_seed(seed, "noise", scenario.id);
  return s;
}

std::vector<SyntheticScenario> make_scenario_suite(std::uint64_t seed, const SimConfig& config) {
  std::vector<SyntheticScenario> suite;
  for (std::string_view family : {"tpcc", "ycsb"}) {
    const auto classes = family_classes(family);
    for (const auto& [id, ratios] : table_mixes(family)) {
      Scenario sc;
      sc.id = std::string(id);
      const int index = id.back() - '0';
      // Scales per row: 1GB, then 3GB, then 5GB blocks of the table.
      if (family == "tpcc") sc.data_scale_gb = index <= 3 ? 1.0 : (index <= 6 ? 3.0 : 5.0);
      else sc.data_scale_gb = index <= 4 ? 1.0 : (index <= 6 ? 3.0 : 5.0);
      for (std::size_t c = 0; c < classes.size(); ++c) sc.txn_mix.push_back({classes[c], ratios[c]});
      sc.env_tag = "sim";
      suite.push_back(make_scenario(sc, family, seed, config));
    }
  }
  return suite;
}

const SyntheticScenario& find_scenario(std::span<const SyntheticScenario> suite, std::string_view id) {
  for (const auto& s : suite)
    if (s.id() == id) return s;
  throw NotFoundError("unknown scenario '" + std::string(id) + "'");
}

double oracle_perf(const SyntheticScenario& s, const KnobConfig& x, bool noisy) {
  const KnobUniverse universe(s.knobs);
  const Eigen::VectorXd row = universe.to_row(x);
  std::map<std::string_view, double> delta;
  double y = s.baseline;
  for (const auto& r : s.responses) {
    const auto idx = universe.index_of(r.knob);
    if (!idx) throw DataError("scenario '" + s.id() + "' responds to unknown knob '" + r.knob + "'");
    const auto& spec = universe[*idx];
    const double d = shape_value(r.shape, r.location, unit(spec, row[static_cast<Eigen::Index>(*idx)])) -
                     shape_value(r.shape, r.location, unit(spec, spec.default_value));
    delta[r.knob] = d;
    y += r.amplitude * d;
  }
  for (const auto& it : s.interactions) y += it.amplitude * delta.at(it.a) * delta.at(it.b);
  if (noisy && s.noise_sigma > 0.0) {
    std::uint64_t h = s.noise_seed;
    for (Eigen::Index i = 0; i < row.size(); ++i) h = mix64(h ^ std::bit_cast<std::uint64_t>(row[i]));
    Rng rng(h);
    y += s.noise_sigma * standard_normal(rng);
  }
  return y;
}

KPDataset collect_kp(const SyntheticScenario& s, std::span<const KnobConfig> configs, bool noisy) {
  KPDataset d;
  d.scenario_id = s.id();
  d.knobs = s.knobs;
  d.X.assign(configs.begin(), configs.end());
  d.y.reserve(configs.size());
  for (const auto& x : configs) d.y.push_back(oracle_perf(s, x, noisy));
  return d;
}

QueryLog gen_log(const SyntheticScenario& s, std::uint64_t n_queries, std::uint64_t seed) {
  const Family& fam = family_by_name(s.family);
  std::vector<const TxnClass*> classes;
  std::vector<double> p;
  for (const auto& t : s.scenario.txn_mix) {
    classes.push_back(&class_by_name(fam, t.name));
    p.push_back(t.ratio);
  }
  QueryLog log;
  Rng rng(derive_seed(seed, "log", s.id()));
  for (std::uint64_t q = 0; q < n_queries; ++q) {
    const TxnClass& c = *classes[categorical(p, uniform01(rng))];
    ++log.suid[categorical(c.suid, uniform01(rng))];
    // Two plan operators per statement.
    ++log.ops[categorical(c.ops, uniform01(rng))];
    ++log.ops[categorical(c.ops, uniform01(rng))];
  }
  return log;
}

Fingerprint expected_fingerprint(std::span<const TxnRatio> mix, std::string_view family) {
  const Family& fam = family_by_name(family);
  Fingerprint f;
  for (const auto& t : mix) {
    const auto& c = class_by_name(fam, t.name);
    for (std::size_t i = 0; i < 4; ++i) f.suid[i] += t.ratio * c.suid[i];
    for (std::size_t i = 0; i < 8; ++i) f.ops[i] += t.ratio * c.ops[i];
  }
  return f;
}

Fingerprint expected_fingerprint(const SyntheticScenario& s) {
  return expected_fingerprint(s.scenario.txn_mix, s.family);
}

std::vector<std::string> ground_truth_ranking(const SyntheticScenario& s) {
  std::vector<KnobResponse> r = s.responses;
  std::stable_sort(r.begin(), r.end(), [](const auto& a, const auto& b) {
    if (a.amplitude != b.amplitude) return a.amplitude > b.amplitude;
    return a.knob < b.knob;
  });
  std::vector<std::string> out;
  for (const auto& x : r) out.push_back(x.knob);
  return out;
}

double sweep_range(const SyntheticScenario& s, std::string_view knob, int points) {
  if (points < 2) throw DataError("sweep_range: need at least two points");
  const KnobUniverse universe(s.knobs);
  const KnobSpec& spec = universe.spec(knob);
  KnobConfig x = universe.default_config();
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int i = 0; i < points; ++i) {
    x.set(spec.name, spec.lo + spec.width() * i / (points - 1));
    const double y = oracle_perf(s, x, false);
    lo = std::min(lo, y);
    hi = std::max(hi, y);
  }
  return hi - lo;
}

}  // namespace iwek
