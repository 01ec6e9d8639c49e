#ifndef IWEK_EXPERIENCE_HPP
#define IWEK_EXPERIENCE_HPP

#include <string>
#include <vector>

#include "iwek/core.hpp"
#include "iwek/estimator.hpp"

namespace iwek {

// A stored (fingerprint, ranking, estimator) triple from one past scenario.
struct Experience {
  Fingerprint fingerprint;
  KnobRanking ranking;
  InterpretableEstimator estimator;
  std::vector<KnobSpec> knob_universe;
  std::string scenario_id;

  bool operator==(const Experience&) const = default;
};

// Throws ValidationError if the fingerprint is malformed, the universe is
// invalid, or the estimator references knobs outside knob_universe.
void validate_experience(const Experience& e);

}  // namespace iwek

#endif  // IWEK_EXPERIENCE_HPP
