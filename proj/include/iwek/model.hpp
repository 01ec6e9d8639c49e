#ifndef IWEK_MODEL_HPP
#define IWEK_MODEL_HPP

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "iwek/estimator.hpp"
#include "iwek/transfer.hpp"

namespace iwek {

// What a model file holds: an origin estimator or a transferred blend.
using Model = std::variant<InterpretableEstimator, TransferredEstimator>;

std::string_view model_kind(const Model& m);  // "ike" | "transferred"
KnobUniverse model_universe(const Model& m);

// Validates x against the model's universe (ValidationError listing every
// violation) before predicting.
double predict_model(const Model& m, const KnobConfig& x);

struct Explanation {
  std::string member;  // scenario of the contributing experience; empty for an origin model
  std::size_t index = 0;
  std::string rule;
  double weight = 0.0;  // contribution to the prediction when active
};

// Active non-zero rules by descending |weight|; a transferred model scales
// each member's rules by the member's blend weight.
std::vector<Explanation> explain_model(const Model& m, const KnobConfig& x);

std::vector<ProfilePoint> model_profile(const Model& m, std::string_view knob, std::span<const double> grid,
                                        const KnobConfig& base);

}  // namespace iwek

#endif  // IWEK_MODEL_HPP
