#include "iwek/experience.hpp"

#include "iwek/error.hpp"

namespace iwek {

void validate_experience(const Experience& e) {
  validate_fingerprint(e.fingerprint);
  const KnobUniverse universe(e.knob_universe);
  for (const auto& rule : e.estimator.rules())
    for (const auto& [knob, interval] : rule.conjuncts)
      if (!universe.index_of(knob))
        throw ValidationError("experience '" + e.scenario_id + "': rule uses knob '" + knob +
                              "' outside its universe");
  for (const auto& s : e.estimator.universe().specs())
    if (!universe.index_of(s.name))
      throw ValidationError("experience '" + e.scenario_id + "': estimator knob '" + s.name +
                            "' outside its universe");
}

}  // namespace iwek
