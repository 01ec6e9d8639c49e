#ifndef IWEK_SERIALIZE_HPP
#define IWEK_SERIALIZE_HPP

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>

#include "iwek/core.hpp"
#include "iwek/error.hpp"
#include "iwek/estimator.hpp"
#include "iwek/experience.hpp"
#include "iwek/forest.hpp"
#include "iwek/lhs.hpp"
#include "iwek/model.hpp"
#include "iwek/sim.hpp"
#include "iwek/transfer.hpp"

// JSON mapping for every persisted type. Non-finite numbers are written as
// null (an interval's missing bound, an undefined OOB score). Doubles round
// trip exactly.
namespace iwek {

using Json = nlohmann::json;

void to_json(Json& j, const KnobSpec& v);
void from_json(const Json& j, KnobSpec& v);
void to_json(Json& j, const KnobConfig& v);
void from_json(const Json& j, KnobConfig& v);
void to_json(Json& j, const KPDataset& v);
void from_json(const Json& j, KPDataset& v);
void to_json(Json& j, const TxnRatio& v);
void from_json(const Json& j, TxnRatio& v);
void to_json(Json& j, const Scenario& v);
void from_json(const Json& j, Scenario& v);
void to_json(Json& j, const Fingerprint& v);
void from_json(const Json& j, Fingerprint& v);
void to_json(Json& j, const QueryLog& v);
void from_json(const Json& j, QueryLog& v);
void to_json(Json& j, const KnobRanking& v);
void from_json(const Json& j, KnobRanking& v);
void to_json(Json& j, const TreeNode& v);
void from_json(const Json& j, TreeNode& v);
void to_json(Json& j, const Forest& v);
void from_json(const Json& j, Forest& v);
void to_json(Json& j, const Interval& v);
void from_json(const Json& j, Interval& v);
void to_json(Json& j, const Rule& v);
void from_json(const Json& j, Rule& v);
void to_json(Json& j, const InterpretableEstimator& v);
void from_json(const Json& j, InterpretableEstimator& v);
void to_json(Json& j, const Experience& v);
void from_json(const Json& j, Experience& v);
void to_json(Json& j, const SampleDesign& v);
void from_json(const Json& j, SampleDesign& v);
void to_json(Json& j, const TransferredEstimator& v);
void from_json(const Json& j, TransferredEstimator& v);
void to_json(Json& j, const KnobResponse& v);
void from_json(const Json& j, KnobResponse& v);
void to_json(Json& j, const Interaction& v);
void from_json(const Json& j, Interaction& v);
void to_json(Json& j, const SyntheticScenario& v);
void from_json(const Json& j, SyntheticScenario& v);

Json model_to_json(const Model& m);
Model model_from_json(const Json& j);

// Top-level document: the value's fields plus "version".
template <typename T>
Json to_document(const T& value) {
  Json j = value;
  j["version"] = std::string(kFormatVersion);
  return j;
}

void check_version(const Json& j);

// Parse errors and schema mismatches surface as DataError.
template <typename T>
T from_document(const Json& j) {
  check_version(j);
  try {
    return j.get<T>();
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed document: ") + e.what());
  }
}

Json parse_json(const std::string& text);
Json read_json_file(const std::filesystem::path& path);
// Writes via a temporary sibling and rename.
void write_text_file(const std::filesystem::path& path, const std::string& text);
void write_json_file(const std::filesystem::path& path, const Json& j);

Model load_model(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path, const Model& m);

}  // namespace iwek

#endif  // IWEK_SERIALIZE_HPP
