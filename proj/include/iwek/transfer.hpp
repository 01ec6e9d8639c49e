#ifndef IWEK_TRANSFER_HPP
#define IWEK_TRANSFER_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "iwek/core.hpp"
#include "iwek/experience.hpp"
#include "iwek/lhs.hpp"
#include "iwek/spline.hpp"

namespace iwek {

Fingerprint fingerprint_from_log(const QueryLog& log);

// Euclidean distance over the concatenated 12-vector.
double dis_ranking(const Fingerprint& f1, const Fingerprint& f2);

struct ExperienceMatch {
  std::vector<std::size_t> indices;  // into the repository span, nearest first
  std::vector<double> distances;
  bool truncated = false;  // fewer than K experiences were available
};

ExperienceMatch match_experiences(std::span<const std::shared_ptr<const Experience>> repo,
                                  const Fingerprint& f, std::size_t K);

// Inverse-distance weights normalized to sum to 1.
std::vector<double> similarity_weights(std::span<const double> distances, double eps = 1e-6);

// Weighted average of per-member scores after min-max normalizing each member
// to [0,1]; knobs a member lacks contribute 0 for it.
KnobRanking transfer_ranking(std::span<const KnobRanking> rankings, std::span<const double> weights);

enum class Containment { kFull, kPartial, kNone };

std::string_view to_string(Containment c);

struct Reshaped {
  Containment kind = Containment::kFull;
  KnobConfig config;  // empty when kind == kNone
};

// Adapts a configuration to the knob list an estimator expects. Full: the
// target list is covered, so x is projected onto it. Partial: shared knobs
// kept, missing ones filled from `defaults`, extra ones dropped. None:
// disjoint knob sets, no configuration is produced.
Reshaped reshape_config(const KnobConfig& x, std::span<const std::string> target_knobs,
                        const KnobConfig& defaults);

// Canonical ordering of a design: ascending lexicographic config order.
std::vector<std::size_t> canonical_order(std::span<const KnobConfig> S);

// Spline feature of a K-P dataset after sorting its rows into canonical order.
DistributionFeature spline_features(const KPDataset& kp, int interior_knots = 3);

struct TransferMember {
  std::shared_ptr<const Experience> experience;
  double weight = 0.0;
  double fingerprint_distance = 0.0;
  double similarity = 0.0;  // cosine between spline features
  bool mismatch = false;
  std::vector<std::string> knobs;  // what the member estimator expects
  KnobConfig fill_defaults;        // target defaults for those knobs
  bool operator==(const TransferMember& o) const {
    return weight == o.weight && fingerprint_distance == o.fingerprint_distance &&
           similarity == o.similarity && mismatch == o.mismatch && knobs == o.knobs &&
           fill_defaults == o.fill_defaults &&
           (experience == o.experience || (experience && o.experience && *experience == *o.experience));
  }
};

struct TransferredEstimator {
  std::vector<KnobSpec> knobs;  // target knob universe
  std::vector<TransferMember> members;
  KnobRanking ranking;
  SampleDesign design;
  std::vector<double> design_labels;  // target labels, design order
  bool operator==(const TransferredEstimator&) const = default;
};

using LabelSource = std::function<std::vector<double>(std::span<const KnobConfig>)>;

struct TransferOptions {
  std::size_t K = 3;
  std::size_t N = 10;
  std::size_t sample_knobs = 3;  // top-ranked knobs the design varies
  int interior_knots = 3;
  double eps = 1e-6;
};

// Two-stage transfer: fingerprint-matched experiences give a ranking, an LHS
// design over its top knobs is labelled on the target, and members are
// weighted by the similarity of their predicted K-P trend to the target's.
// When `fixed_design` is given it replaces the LHS design.
TransferredEstimator transfer_estimator(std::span<const std::shared_ptr<const Experience>> repo,
                                        const Fingerprint& f, const KnobUniverse& target,
                                        const LabelSource& labels, std::uint64_t seed,
                                        const TransferOptions& options = {},
                                        const std::vector<KnobConfig>* fixed_design = nullptr);

double predict_transferred(const TransferredEstimator& M, const KnobConfig& x);

// Throws ValidationError unless weights are a probability vector and every
// member is present.
void validate_transferred(const TransferredEstimator& M);

}  // namespace iwek

#endif  // IWEK_TRANSFER_HPP
