#include "iwek/model.hpp"

#include <algorithm>
#include <cmath>

#include "iwek/error.hpp"

namespace iwek {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void check_config(const KnobUniverse& u, const KnobConfig& x) {
  const auto v = validate_config(x, u.specs());
  if (!v.empty()) throw ValidationError("invalid configuration: " + describe(v));
}

}  // namespace

std::string_view model_kind(const Model& m) {
  return std::holds_alternative<InterpretableEstimator>(m) ? "ike" : "transferred";
}

KnobUniverse model_universe(const Model& m) {
  return std::visit(overloaded{[](const InterpretableEstimator& e) { return e.universe(); },
                               [](const TransferredEstimator& t) { return KnobUniverse(t.knobs); }},
                    m);
}

double predict_model(const Model& m, const KnobConfig& x) {
  check_config(model_universe(m), x);
  return std::visit(overloaded{[&](const InterpretableEstimator& e) { return predict(e, x); },
                               [&](const TransferredEstimator& t) { return predict_transferred(t, x); }},
                    m);
}

std::vector<Explanation> explain_model(const Model& m, const KnobConfig& x) {
  check_config(model_universe(m), x);
  std::vector<Explanation> out;
  if (const auto* e = std::get_if<InterpretableEstimator>(&m)) {
    for (const auto& c : explain(*e, x)) out.push_back({"", c.index, c.rule.to_string(), c.weight});
    return out;
  }
  const auto& t = std::get<TransferredEstimator>(m);
  for (const auto& member : t.members) {
    if (member.weight == 0.0) continue;
    const auto r = reshape_config(x, member.knobs, member.fill_defaults);
    if (r.kind == Containment::kNone) continue;
    for (const auto& c : explain(member.experience->estimator, r.config))
      out.push_back({member.experience->scenario_id, c.index, c.rule.to_string(), member.weight * c.weight});
  }
  std::stable_sort(out.begin(), out.end(), [](const Explanation& a, const Explanation& b) {
    return std::abs(a.weight) > std::abs(b.weight);
  });
  return out;
}

std::vector<ProfilePoint> model_profile(const Model& m, std::string_view knob, std::span<const double> grid,
                                        const KnobConfig& base) {
  if (const auto* e = std::get_if<InterpretableEstimator>(&m)) return knob_weight_profile(*e, knob, grid, base);
  const KnobUniverse u = model_universe(m);
  const auto idx = u.index_of(knob);
  if (!idx) throw ValidationError("unknown knob '" + std::string(knob) + "'");
  check_config(u, base);
  std::vector<ProfilePoint> out;
  KnobConfig x = base;
  for (double v : grid) {
    if (!u[*idx].contains(v)) throw ValidationError("profile grid value outside the range of '" + u[*idx].name + "'");
    x.set(std::string(knob), v);
    out.push_back({v, predict_transferred(std::get<TransferredEstimator>(m), x)});
  }
  return out;
}

}  // namespace iwek
