#include "iwek/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "iwek/error.hpp"

namespace iwek {

namespace {

template <std::size_t N>
std::array<double, N> ratios(const std::array<std::uint64_t, N>& counts) {
  std::array<double, N> out{};
  const std::uint64_t total = std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
  if (total == 0) return out;
  for (std::size_t i = 0; i < N; ++i) out[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  return out;
}

}  // namespace

Fingerprint fingerprint_from_log(const QueryLog& log) {
  Fingerprint f;
  f.suid = ratios(log.suid);
  f.ops = ratios(log.ops);
  return f;
}

double dis_ranking(const Fingerprint& f1, const Fingerprint& f2) {
  return (f1.concat() - f2.concat()).norm();
}

ExperienceMatch match_experiences(std::span<const std::shared_ptr<const Experience>> repo,
                                  const Fingerprint& f, std::size_t K) {
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(repo.size());
  for (std::size_t i = 0; i < repo.size(); ++i) {
    if (!repo[i]) throw DataError("match_experiences: null experience");
    d.emplace_back(dis_ranking(f, repo[i]->fingerprint), i);
  }
  std::stable_sort(d.begin(), d.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  ExperienceMatch m;
  m.truncated = repo.size() < K;
  for (std::size_t i = 0; i < std::min(K, d.size()); ++i) {
    m.indices.push_back(d[i].second);
    m.distances.push_back(d[i].first);
  }
  return m;
}

std::vector<double> similarity_weights(std::span<const double> distances, double eps) {
  if (distances.empty()) throw DataError("similarity_weights: no distances");
  if (!(eps > 0.0)) throw DataError("similarity_weights: eps must be positive");
  std::vector<double> w;
  w.reserve(distances.size());
  double total = 0.0;
  for (double d : distances) {
    if (!(d >= 0.0) || !std::isfinite(d)) throw DataError("similarity_weights: invalid distance");
    w.push_back(1.0 / (d + eps));
    total += w.back();
  }
  for (auto& x : w) x /= total;
  return w;
}

KnobRanking transfer_ranking(std::span<const KnobRanking> rankings, std::span<const double> weights) {
  if (rankings.size() != weights.size()) throw DataError("transfer_ranking: size mismatch");
  std::map<std::string, double> out;
  for (const auto& r : rankings)
    for (const auto& [k, v] : r.weights()) out.emplace(k, 0.0);
  for (std::size_t m = 0; m < rankings.size(); ++m) {
    const auto& scores = rankings[m].weights();
    if (scores.empty()) continue;
    auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end(),
                                              [](const auto& a, const auto& b) { return a.second < b.second; });
    const double lo = lo_it->second;
    const double range = hi_it->second - lo;
    for (const auto& [k, v] : scores) {
      // A flat member ranking carries no order information.
      const double normalized = range > 0.0 ? (v - lo) / range : 0.0;
      out[k] += weights[m] * normalized;
    }
  }
  return KnobRanking(std::move(out));
}

std::string_view to_string(Containment c) {
  switch (c) {
    case Containment::kFull:
      return "full";
    case Containment::kPartial:
      return "partial";
    case Containment::kNone:
      return "none";
  }
  return "none";
}

Reshaped reshape_config(const KnobConfig& x, std::span<const std::string> target_knobs,
                        const KnobConfig& defaults) {
  Reshaped r;
  std::size_t shared = 0;
  for (const auto& k : target_knobs) shared += x.contains(k) ? 1 : 0;
  if (shared == 0) {
    r.kind = Containment::kNone;
    return r;
  }
  r.kind = shared == target_knobs.size() ? Containment::kFull : Containment::kPartial;
  for (const auto& k : target_knobs) {
    if (auto v = x.get(k)) {
      r.config.set(k, *v);
    } else if (auto d = defaults.get(k)) {
      r.config.set(k, *d);
    } else {
      throw ValidationError("reshape_config: no default for knob '" + k + "'");
    }
  }
  return r;
}

std::vector<std::size_t> canonical_order(std::span<const KnobConfig> S) {
  std::vector<std::size_t> idx(S.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return S[a] < S[b]; });
  return idx;
}

DistributionFeature spline_features(const KPDataset& kp, int interior_knots) {
  if (kp.X.size() != kp.y.size()) throw DataError("spline_features: dataset shape mismatch");
  const auto order = canonical_order(kp.X);
  Eigen::VectorXd y(static_cast<Eigen::Index>(order.size()));
  for (std::size_t i = 0; i < order.size(); ++i) y[static_cast<Eigen::Index>(i)] = kp.y[order[i]];
  return spline_features(y, interior_knots);
}

namespace {

// Target defaults where the target knows the knob, else the member's own.
KnobConfig member_defaults(const Experience& e, const KnobUniverse& target) {
  KnobConfig d;
  for (const auto& s : e.knob_universe) {
    if (auto idx = target.index_of(s.name)) d.set(s.name, target[*idx].default_value);
    else d.set(s.name, s.default_value);
  }
  return d;
}

double member_predict(const TransferMember& m, const KnobConfig& x, bool* mismatch = nullptr) {
  const auto r = reshape_config(x, m.knobs, m.fill_defaults);
  if (r.kind == Containment::kNone) {
    if (mismatch) *mismatch = true;
    return 0.0;
  }
  return predict(m.experience->estimator, r.config);
}

}  // namespace

TransferredEstimator transfer_estimator(std::span<const std::shared_ptr<const Experience>> repo,
                                        const Fingerprint& f, const KnobUniverse& target,
                                        const LabelSource& labels, std::uint64_t seed,
                                        const TransferOptions& options,
                                        const std::vector<KnobConfig>* fixed_design) {
  if (repo.empty()) throw DataError("transfer_estimator: experience repository is empty");
  if (options.K < 1) throw DataError("transfer_estimator: K must be positive");
  if (!labels) throw DataError("transfer_estimator: no label source");

  const auto match = match_experiences(repo, f, options.K);
  const auto fp_weights = similarity_weights(match.distances, options.eps);
  std::vector<KnobRanking> rankings;
  for (auto i : match.indices) rankings.push_back(repo[i]->ranking);

  TransferredEstimator M;
  M.knobs = target.specs();
  M.ranking = transfer_ranking(rankings, fp_weights);

  if (fixed_design) {
    if (fixed_design->size() < 4) throw DataError("transfer_estimator: design needs at least 4 points");
    std::set<std::string> knobs;
    for (const auto& x : *fixed_design) {
      auto v = validate_config(x, target.specs());
      if (!v.empty()) throw ValidationError("transfer design config invalid: " + describe(v));
      for (const auto& [k, val] : x) knobs.insert(k);
    }
    M.design.knobs.assign(knobs.begin(), knobs.end());
    M.design.S = *fixed_design;
    M.design.seed = seed;
  } else {
    std::vector<KnobSpec> specs;
    for (const auto& [knob, score] : M.ranking.ordered()) {
      if (specs.size() >= options.sample_knobs) break;
      if (auto idx = target.index_of(knob)) specs.push_back(target[*idx]);
    }
    if (specs.empty()) throw DataError("no transferable experience: no ranked knob exists on the target");
    M.design = lhs_sample(options.N, specs, derive_seed(seed, "transfer_design"));
  }

  M.design_labels = labels(M.design.S);
  if (M.design_labels.size() != M.design.S.size())
    throw DataError("transfer_estimator: label source returned the wrong number of labels");

  const auto order = canonical_order(M.design.S);
  Eigen::VectorXd target_y(static_cast<Eigen::Index>(order.size()));
  for (std::size_t i = 0; i < order.size(); ++i) target_y[static_cast<Eigen::Index>(i)] = M.design_labels[order[i]];
  const auto target_feature = spline_features(target_y, options.interior_knots);

  std::vector<double> distances;
  std::vector<std::size_t> usable;
  for (std::size_t m = 0; m < match.indices.size(); ++m) {
    TransferMember member;
    member.experience = repo[match.indices[m]];
    member.fingerprint_distance = match.distances[m];
    for (const auto& s : member.experience->knob_universe) member.knobs.push_back(s.name);
    std::sort(member.knobs.begin(), member.knobs.end());
    member.fill_defaults = member_defaults(*member.experience, target);

    Eigen::VectorXd member_y(target_y.size());
    for (std::size_t i = 0; i < order.size(); ++i)
      member_y[static_cast<Eigen::Index>(i)] = member_predict(member, M.design.S[order[i]], &member.mismatch);
    if (!member.mismatch) {
      member.similarity = dis_estimator(target_feature.coefficients,
                                        spline_features(member_y, options.interior_knots).coefficients);
      distances.push_back((1.0 - member.similarity) / 2.0);
      usable.push_back(m);
    }
    M.members.push_back(std::move(member));
  }
  if (usable.empty()) throw DataError("no transferable experience");
  const auto w = similarity_weights(distances, options.eps);
  for (std::size_t i = 0; i < usable.size(); ++i) M.members[usable[i]].weight = w[i];
  return M;
}

double predict_transferred(const TransferredEstimator& M, const KnobConfig& x) {
  double s = 0.0;
  for (const auto& m : M.members) {
    if (m.weight == 0.0) continue;
    s += m.weight * member_predict(m, x);
  }
  return s;
}

void validate_transferred(const TransferredEstimator& M) {
  if (M.members.empty()) throw ValidationError("transferred estimator has no members");
  double total = 0.0;
  for (const auto& m : M.members) {
    if (!m.experience) throw ValidationError("transferred estimator member without experience");
    if (!(m.weight >= 0.0) || !std::isfinite(m.weight))
      throw ValidationError("transferred estimator has an invalid member weight");
    total += m.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("transferred estimator weights do not sum to 1");
}

}  // namespace iwek
