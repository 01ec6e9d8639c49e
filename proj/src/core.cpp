#include "iwek/core.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "iwek/error.hpp"

namespace iwek {

std::string_view to_string(KnobKind kind) {
  switch (kind) {
    case KnobKind::kContinuous:
      return "continuous";
    case KnobKind::kInteger:
      return "integer";
    case KnobKind::kOrdinal:
      return "ordinal";
  }
  return "continuous";
}

KnobKind knob_kind_from_string(std::string_view s) {
  if (s == "continuous") return KnobKind::kContinuous;
  if (s == "integer") return KnobKind::kInteger;
  if (s == "ordinal") return KnobKind::kOrdinal;
  throw ValidationError("unknown knob kind '" + std::string(s) + "'");
}

std::optional<double> KnobConfig::get(std::string_view name) const {
  auto it = values_.find(name);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

double KnobConfig::at(std::string_view name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw NotFoundError("config has no knob '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> KnobConfig::names() const {
  std::vector<std::string> out;
  out.reserve(values_.size());
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

std::vector<Violation> validate_config(const KnobConfig& x, std::span<const KnobSpec> specs) {
  std::vector<Violation> out;
  for (const auto& [name, value] : x) {
    auto it = std::find_if(specs.begin(), specs.end(),
                           [&](const KnobSpec& s) { return s.name == name; });
    if (it == specs.end()) {
      out.push_back({name, value, "unknown knob"});
    } else if (!std::isfinite(value)) {
      out.push_back({name, value, "non-finite value"});
    } else if (!it->contains(value)) {
      std::ostringstream os;
      os << "outside range [" << it->lo << ", " << it->hi << "]";
      out.push_back({name, value, os.str()});
    }
  }
  return out;
}

std::string describe(std::span<const Violation> violations) {
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) os << "; ";
    os << violations[i].knob << "=" << violations[i].value << ": " << violations[i].reason;
  }
  return os.str();
}

KnobUniverse::KnobUniverse(std::vector<KnobSpec> specs) : specs_(std::move(specs)) {
  std::sort(specs_.begin(), specs_.end(),
            [](const KnobSpec& a, const KnobSpec& b) { return a.name < b.name; });
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    const auto& s = specs_[i];
    if (s.name.empty()) throw ValidationError("knob with empty name");
    if (i > 0 && specs_[i - 1].name == s.name)
      throw ValidationError("duplicate knob name '" + s.name + "'");
    if (!(std::isfinite(s.lo) && std::isfinite(s.hi) && s.lo < s.hi))
      throw ValidationError("knob '" + s.name + "' has invalid range");
    if (!s.contains(s.default_value))
      throw ValidationError("knob '" + s.name + "' default outside its range");
  }
}

std::optional<std::size_t> KnobUniverse::index_of(std::string_view name) const {
  auto it = std::lower_bound(specs_.begin(), specs_.end(), name,
                             [](const KnobSpec& s, std::string_view n) { return s.name < n; });
  if (it == specs_.end() || it->name != name) return std::nullopt;
  return static_cast<std::size_t>(it - specs_.begin());
}

const KnobSpec& KnobUniverse::spec(std::string_view name) const {
  auto idx = index_of(name);
  if (!idx) throw NotFoundError("unknown knob '" + std::string(name) + "'");
  return specs_[*idx];
}

std::vector<std::string> KnobUniverse::names() const {
  std::vector<std::string> out;
  out.reserve(specs_.size());
  for (const auto& s : specs_) out.push_back(s.name);
  return out;
}

KnobConfig KnobUniverse::default_config() const {
  KnobConfig x;
  for (const auto& s : specs_) x.set(s.name, s.default_value);
  return x;
}

Eigen::VectorXd KnobUniverse::to_row(const KnobConfig& x) const {
  Eigen::VectorXd row(static_cast<Eigen::Index>(specs_.size()));
  for (std::size_t i = 0; i < specs_.size(); ++i) row[static_cast<Eigen::Index>(i)] = specs_[i].default_value;
  for (const auto& [name, value] : x) {
    auto idx = index_of(name);
    if (!idx) throw ValidationError("unknown knob '" + name + "'");
    const auto& s = specs_[*idx];
    if (!std::isfinite(value) || !s.contains(value)) {
      std::ostringstream os;
      os << "knob '" << name << "' value " << value << " outside range [" << s.lo << ", " << s.hi
         << "]";
      throw ValidationError(os.str());
    }
    row[static_cast<Eigen::Index>(*idx)] = value;
  }
  return row;
}

KnobConfig KnobUniverse::from_row(const Eigen::Ref<const Eigen::VectorXd>& row) const {
  KnobConfig x;
  for (std::size_t i = 0; i < specs_.size(); ++i) x.set(specs_[i].name, row[static_cast<Eigen::Index>(i)]);
  return x;
}

void validate_dataset(const KPDataset& d) {
  if (d.X.size() != d.y.size())
    throw ValidationError("dataset has " + std::to_string(d.X.size()) + " configs but " +
                          std::to_string(d.y.size()) + " labels");
  if (d.y.empty()) throw ValidationError("dataset is empty");
  for (double v : d.y)
    if (!std::isfinite(v)) throw ValidationError("dataset contains a non-finite label");
  if (!d.knobs.empty()) {
    KnobUniverse universe(d.knobs);
    for (std::size_t i = 0; i < d.X.size(); ++i) {
      auto v = validate_config(d.X[i], universe.specs());
      if (!v.empty())
        throw ValidationError("config " + std::to_string(i) + " invalid: " + describe(v));
    }
  }
}

KnobUniverse universe_of(const KPDataset& d) {
  if (!d.knobs.empty()) return KnobUniverse(d.knobs);
  std::map<std::string, KnobSpec> inferred;
  for (const auto& x : d.X) {
    for (const auto& [name, value] : x) {
      auto [it, fresh] = inferred.try_emplace(name);
      auto& s = it->second;
      if (fresh) {
        s.name = name;
        s.lo = s.hi = s.default_value = value;
      }
      s.lo = std::min(s.lo, value);
      s.hi = std::max(s.hi, value);
    }
  }
  std::vector<KnobSpec> specs;
  for (auto& [name, s] : inferred) {
    if (!(s.lo < s.hi)) s.hi = s.lo + 1.0;
    specs.push_back(s);
  }
  return KnobUniverse(std::move(specs));
}

Eigen::MatrixXd feature_matrix(const KPDataset& d, const KnobUniverse& universe) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(d.X.size()), static_cast<Eigen::Index>(universe.size()));
  for (std::size_t i = 0; i < d.X.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = universe.to_row(d.X[i]).transpose();
  return X;
}

Eigen::VectorXd label_vector(const KPDataset& d) {
  return Eigen::Map<const Eigen::VectorXd>(d.y.data(), static_cast<Eigen::Index>(d.y.size()));
}

KPDataset subset(const KPDataset& d, std::span<const std::size_t> rows) {
  KPDataset out;
  out.scenario_id = d.scenario_id;
  out.knobs = d.knobs;
  out.X.reserve(rows.size());
  out.y.reserve(rows.size());
  for (auto r : rows) {
    out.X.push_back(d.X.at(r));
    out.y.push_back(d.y.at(r));
  }
  return out;
}

void validate_scenario(const Scenario& s) {
  if (s.id.empty()) throw ValidationError("scenario without id");
  if (!(s.data_scale_gb > 0.0)) throw ValidationError("scenario '" + s.id + "' has non-positive scale");
  double sum = 0.0;
  for (const auto& t : s.txn_mix) {
    if (!(t.ratio >= 0.0 && t.ratio <= 1.0))
      throw ValidationError("scenario '" + s.id + "' ratio for '" + t.name + "' outside [0,1]");
    sum += t.ratio;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ValidationError("scenario '" + s.id + "' transaction ratios do not sum to 1");
}

Fingerprint::Vector Fingerprint::concat() const {
  Vector v;
  for (int i = 0; i < 4; ++i) v[i] = suid[static_cast<std::size_t>(i)];
  for (int i = 0; i < 8; ++i) v[4 + i] = ops[static_cast<std::size_t>(i)];
  return v;
}

namespace {

template <std::size_t N>
void check_ratio_block(const std::array<double, N>& v, const char* what) {
  double sum = 0.0;
  for (double x : v) {
    if (!(std::isfinite(x) && x >= 0.0))
      throw ValidationError(std::string("fingerprint ") + what + " has a negative or non-finite entry");
    sum += x;
  }
  if (sum != 0.0 && std::abs(sum - 1.0) > 1e-9)
    throw ValidationError(std::string("fingerprint ") + what + " ratios do not sum to 1");
}

}  // namespace

void validate_fingerprint(const Fingerprint& f) {
  check_ratio_block(f.suid, "suid");
  check_ratio_block(f.ops, "operator");
}

KnobRanking::KnobRanking(std::map<std::string, double> weights) : weights_(std::move(weights)) {
  for (const auto& [k, v] : weights_)
    if (!std::isfinite(v)) throw ValidationError("ranking score for '" + k + "' is not finite");
}

double KnobRanking::score(std::string_view knob) const {
  auto it = weights_.find(std::string(knob));
  return it == weights_.end() ? 0.0 : it->second;
}

std::vector<std::pair<std::string, double>> KnobRanking::ordered() const {
  std::vector<std::pair<std::string, double>> out(weights_.begin(), weights_.end());
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

}  // namespace iwek
