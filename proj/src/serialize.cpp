#include "iwek/serialize.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unistd.h>

namespace iwek {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double number_or(const Json& j, double if_null) {
  if (j.is_null()) return if_null;
  if (!j.is_number()) throw DataError("expected a number, got " + j.dump());
  return j.get<double>();
}

Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vector_from(const Json& j) {
  if (!j.is_array()) throw DataError("expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

}  // namespace

void to_json(Json& j, const KnobSpec& v) {
  j = {{"name", v.name}, {"kind", std::string(to_string(v.kind))}, {"range", {v.lo, v.hi}},
       {"default", v.default_value}};
  if (!v.levels.empty()) j["levels"] = v.levels;
}

void from_json(const Json& j, KnobSpec& v) {
  v.name = j.at("name").get<std::string>();
  v.kind = knob_kind_from_string(j.value("kind", std::string("continuous")));
  const auto& r = j.at("range");
  if (!r.is_array() || r.size() != 2) throw DataError("knob '" + v.name + "' range must be [lo, hi]");
  v.lo = r[0].get<double>();
  v.hi = r[1].get<double>();
  v.default_value = j.at("default").get<double>();
  v.levels = j.value("levels", std::vector<std::string>{});
}

void to_json(Json& j, const KnobConfig& v) {
  j = Json::object();
  for (const auto& [k, x] : v) j[k] = x;
}

void from_json(const Json& j, KnobConfig& v) {
  if (!j.is_object()) throw DataError("a knob configuration must be an object of knob -> number");
  KnobConfig out;
  for (const auto& [k, x] : j.items()) {
    if (!x.is_number()) throw DataError("knob '" + k + "' must be numeric");
    out.set(k, x.get<double>());
  }
  v = std::move(out);
}

void to_json(Json& j, const KPDataset& v) {
  j = {{"X", v.X}, {"y", v.y}, {"scenario_id", v.scenario_id}};
  if (!v.knobs.empty()) j["knobs"] = v.knobs;
}

void from_json(const Json& j, KPDataset& v) {
  v.X = j.at("X").get<std::vector<KnobConfig>>();
  v.y = j.at("y").get<std::vector<double>>();
  v.scenario_id = j.value("scenario_id", std::string{});
  v.knobs = j.value("knobs", std::vector<KnobSpec>{});
}

void to_json(Json& j, const TxnRatio& v) { j = {{"name", v.name}, {"ratio", v.ratio}}; }
void from_json(const Json& j, TxnRatio& v) {
  v.name = j.at("name").get<std::string>();
  v.ratio = j.at("ratio").get<double>();
}

void to_json(Json& j, const Scenario& v) {
  j = {{"id", v.id}, {"data_scale", v.data_scale_gb}, {"txn_mix", v.txn_mix}, {"env_tag", v.env_tag}};
}
void from_json(const Json& j, Scenario& v) {
  v.id = j.at("id").get<std::string>();
  v.data_scale_gb = j.at("data_scale").get<double>();
  v.txn_mix = j.at("txn_mix").get<std::vector<TxnRatio>>();
  v.env_tag = j.value("env_tag", std::string{});
}

void to_json(Json& j, const Fingerprint& v) { j = {{"suid", v.suid}, {"ops", v.ops}}; }
void from_json(const Json& j, Fingerprint& v) {
  v.suid = j.at("suid").get<std::array<double, 4>>();
  v.ops = j.at("ops").get<std::array<double, 8>>();
}

void to_json(Json& j, const QueryLog& v) { j = {{"suid", v.suid}, {"ops", v.ops}}; }
void from_json(const Json& j, QueryLog& v) {
  v.suid = j.at("suid").get<std::array<std::uint64_t, 4>>();
  v.ops = j.at("ops").get<std::array<std::uint64_t, 8>>();
}

void to_json(Json& j, const KnobRanking& v) {
  j = {{"weights", v.weights()}};
}
void from_json(const Json& j, KnobRanking& v) {
  v = KnobRanking(j.at("weights").get<std::map<std::string, double>>());
}

// Nodes are stored as [feature, threshold, left, right, value, count].
void to_json(Json& j, const TreeNode& v) {
  j = Json::array({v.feature, v.threshold, v.left, v.right, v.value, v.count});
}
void from_json(const Json& j, TreeNode& v) {
  if (!j.is_array() || j.size() != 6) throw DataError("tree node must have 6 fields");
  v.feature = j[0].get<int>();
  v.threshold = j[1].get<double>();
  v.left = j[2].get<int>();
  v.right = j[3].get<int>();
  v.value = j[4].get<double>();
  v.count = j[5].get<int>();
}

void to_json(Json& j, const Forest& v) {
  Json trees = Json::array();
  for (const auto& t : v.trees) trees.push_back(t.nodes());
  j = {{"knobs", v.knobs},
       {"params",
        {{"n_trees", v.params.n_trees},
         {"max_depth", v.params.max_depth},
         {"min_leaf", v.params.min_leaf},
         {"subsample", std::string(to_string(v.params.subsample))}}},
       {"oob_r2", number(v.oob_r2)},
       {"trees", std::move(trees)}};
}
void from_json(const Json& j, Forest& v) {
  v.knobs = j.at("knobs").get<std::vector<std::string>>();
  const auto& p = j.at("params");
  v.params.n_trees = p.at("n_trees").get<int>();
  v.params.max_depth = p.at("max_depth").get<int>();
  v.params.min_leaf = p.at("min_leaf").get<int>();
  v.params.subsample = feature_subsample_from_string(p.at("subsample").get<std::string>());
  v.oob_r2 = number_or(j.at("oob_r2"), -kInf);
  v.trees.clear();
  for (const auto& t : j.at("trees")) v.trees.emplace_back(t.get<std::vector<TreeNode>>());
}

void to_json(Json& j, const Interval& v) { j = {{"lo", number(v.lo)}, {"hi", number(v.hi)}}; }
void from_json(const Json& j, Interval& v) {
  v.lo = number_or(j.at("lo"), -kInf);
  v.hi = number_or(j.at("hi"), kInf);
}

void to_json(Json& j, const Rule& v) {
  j = {{"conjuncts", v.conjuncts}, {"source", {{"tree", v.source.tree}, {"leaf", v.source.leaf}}}};
}
void from_json(const Json& j, Rule& v) {
  v.conjuncts = j.at("conjuncts").get<std::map<std::string, Interval>>();
  v.source.tree = j.at("source").at("tree").get<int>();
  v.source.leaf = j.at("source").at("leaf").get<int>();
}

void to_json(Json& j, const InterpretableEstimator& v) {
  j = {{"knobs", v.universe().specs()},
       {"rules", v.rules()},
       {"weights", vector_json(v.weights())},
       {"intercept", v.intercept()},
       {"lambda", v.lambda()},
       {"forest", v.forest() ? Json(*v.forest()) : Json(nullptr)}};
}
void from_json(const Json& j, InterpretableEstimator& v) {
  std::optional<Forest> forest;
  if (j.contains("forest") && !j.at("forest").is_null()) forest = j.at("forest").get<Forest>();
  v = InterpretableEstimator(j.at("knobs").get<std::vector<KnobSpec>>(), j.at("rules").get<RuleSet>(),
                             vector_from(j.at("weights")), j.at("intercept").get<double>(),
                             j.at("lambda").get<double>(), std::move(forest));
}

void to_json(Json& j, const Experience& v) {
  j = {{"fingerprint", v.fingerprint},
       {"ranking", v.ranking},
       {"estimator", v.estimator},
       {"knob_universe", v.knob_universe},
       {"scenario_id", v.scenario_id}};
}
void from_json(const Json& j, Experience& v) {
  v.fingerprint = j.at("fingerprint").get<Fingerprint>();
  v.ranking = j.at("ranking").get<KnobRanking>();
  v.estimator = j.at("estimator").get<InterpretableEstimator>();
  v.knob_universe = j.at("knob_universe").get<std::vector<KnobSpec>>();
  v.scenario_id = j.at("scenario_id").get<std::string>();
  validate_experience(v);
}

void to_json(Json& j, const SampleDesign& v) { j = {{"knobs", v.knobs}, {"S", v.S}, {"seed", v.seed}}; }
void from_json(const Json& j, SampleDesign& v) {
  v.knobs = j.at("knobs").get<std::vector<std::string>>();
  v.S = j.at("S").get<std::vector<KnobConfig>>();
  v.seed = j.at("seed").get<std::uint64_t>();
}

void to_json(Json& j, const TransferredEstimator& v) {
  Json members = Json::array();
  for (const auto& m : v.members) {
    members.push_back({{"experience", *m.experience},
                       {"weight", m.weight},
                       {"fingerprint_distance", m.fingerprint_distance},
                       {"similarity", m.similarity},
                       {"mismatch", m.mismatch},
                       {"knobs", m.knobs},
                       {"fill_defaults", m.fill_defaults}});
  }
  j = {{"knobs", v.knobs},
       {"members", std::move(members)},
       {"ranking", v.ranking},
       {"design", v.design},
       {"design_labels", v.design_labels}};
}
void from_json(const Json& j, TransferredEstimator& v) {
  v.knobs = j.at("knobs").get<std::vector<KnobSpec>>();
  v.members.clear();
  for (const auto& m : j.at("members")) {
    TransferMember t;
    t.experience = std::make_shared<const Experience>(m.at("experience").get<Experience>());
    t.weight = m.at("weight").get<double>();
    t.fingerprint_distance = m.at("fingerprint_distance").get<double>();
    t.similarity = m.at("similarity").get<double>();
    t.mismatch = m.at("mismatch").get<bool>();
    t.knobs = m.at("knobs").get<std::vector<std::string>>();
    t.fill_defaults = m.at("fill_defaults").get<KnobConfig>();
    v.members.push_back(std::move(t));
  }
  v.ranking = j.at("ranking").get<KnobRanking>();
  v.design = j.at("design").get<SampleDesign>();
  v.design_labels = j.at("design_labels").get<std::vector<double>>();
  validate_transferred(v);
}

void to_json(Json& j, const KnobResponse& v) {
  j = {{"knob", v.knob}, {"shape", std::string(to_string(v.shape))}, {"amplitude", v.amplitude},
       {"location", v.location}};
}
void from_json(const Json& j, KnobResponse& v) {
  v.knob = j.at("knob").get<std::string>();
  v.shape = response_shape_from_string(j.at("shape").get<std::string>());
  v.amplitude = j.at("amplitude").get<double>();
  v.location = j.at("location").get<double>();
}

void to_json(Json& j, const Interaction& v) { j = {{"a", v.a}, {"b", v.b}, {"amplitude", v.amplitude}}; }
void from_json(const Json& j, Interaction& v) {
  v.a = j.at("a").get<std::string>();
  v.b = j.at("b").get<std::string>();
  v.amplitude = j.at("amplitude").get<double>();
}

void to_json(Json& j, const SyntheticScenario& v) {
  j = v.scenario;
  j["family"] = v.family;
  j["knobs"] = v.knobs;
  j["responses"] = v.responses;
  j["interactions"] = v.interactions;
  j["baseline"] = v.baseline;
  j["noise_sigma"] = v.noise_sigma;
  j["noise_seed"] = v.noise_seed;
}
void from_json(const Json& j, SyntheticScenario& v) {
  v.scenario = j.get<Scenario>();
  v.family = j.at("family").get<std::string>();
  v.knobs = j.at("knobs").get<std::vector<KnobSpec>>();
  v.responses = j.at("responses").get<std::vector<KnobResponse>>();
  v.interactions = j.at("interactions").get<std::vector<Interaction>>();
  v.baseline = j.at("baseline").get<double>();
  v.noise_sigma = j.at("noise_sigma").get<double>();
  v.noise_seed = j.at("noise_seed").get<std::uint64_t>();
}

Json model_to_json(const Model& m) {
  Json j;
  j["kind"] = std::string(model_kind(m));
  if (const auto* e = std::get_if<InterpretableEstimator>(&m)) j["model"] = *e;
  else j["model"] = std::get<TransferredEstimator>(m);
  j["version"] = std::string(kFormatVersion);
  return j;
}

Model model_from_json(const Json& j) {
  check_version(j);
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "ike") return j.at("model").get<InterpretableEstimator>();
    if (kind == "transferred") return j.at("model").get<TransferredEstimator>();
    throw DataError("unknown model kind '" + kind + "'");
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed model: ") + e.what());
  }
}

void check_version(const Json& j) {
  if (!j.is_object()) throw DataError("document must be a JSON object");
  const auto it = j.find("version");
  if (it == j.end()) throw DataError("document has no version tag");
  if (!it->is_string() || it->get<std::string>() != kFormatVersion)
    throw DataError("unsupported document version " + it->dump() + ", expected \"" +
                    std::string(kFormatVersion) + "\"");
}

Json parse_json(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw DataError(std::string("invalid JSON: ") + e.what());
  }
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const Json::exception& e) {
    throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << text;
    out.flush();
    if (!out) throw DataError("failed writing '" + path.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot replace '" + path.string() + "': " + ec.message());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) { write_text_file(path, j.dump(1) + "\n"); }

Model load_model(const std::filesystem::path& path) {
  Json j = read_json_file(path);
  try {
    return model_from_json(j);
  } catch (const ValidationError&) {
    throw;
  } catch (const DataError& e) {
    throw DataError("'" + path.string() + "': " + e.what());
  }
}

void save_model(const std::filesystem::path& path, const Model& m) { write_json_file(path, model_to_json(m)); }

}  // namespace iwek
