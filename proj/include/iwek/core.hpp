#ifndef IWEK_CORE_HPP
#define IWEK_CORE_HPP

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace iwek {

inline constexpr std::string_view kFormatVersion = "iwek-v1";

// Categorical knobs are stored as ordinal integers; `levels` documents the
// mapping (levels[i] is the label of value i).
enum class KnobKind { kContinuous, kInteger, kOrdinal };

std::string_view to_string(KnobKind kind);
KnobKind knob_kind_from_string(std::string_view s);

struct KnobSpec {
  std::string name;
  KnobKind kind = KnobKind::kContinuous;
  double lo = 0.0;
  double hi = 1.0;
  double default_value = 0.0;
  std::vector<std::string> levels;

  bool contains(double v) const { return v >= lo && v <= hi; }
  double width() const { return hi - lo; }
  bool operator==(const KnobSpec&) const = default;
};

// One concrete knob assignment. Iteration order is lexicographic by name.
class KnobConfig {
 public:
  using Map = std::map<std::string, double, std::less<>>;
  using const_iterator = Map::const_iterator;

  KnobConfig() = default;
  KnobConfig(std::initializer_list<std::pair<const std::string, double>> init)
      : values_(init) {}
  explicit KnobConfig(Map values) : values_(std::move(values)) {}

  void set(std::string name, double value) { values_[std::move(name)] = value; }
  std::optional<double> get(std::string_view name) const;
  double at(std::string_view name) const;
  bool contains(std::string_view name) const { return values_.find(name) != values_.end(); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  std::vector<std::string> names() const;

  const_iterator begin() const { return values_.begin(); }
  const_iterator end() const { return values_.end(); }
  const Map& values() const { return values_; }

  bool operator==(const KnobConfig&) const = default;
  // Lexicographic by (name, value) pairs; the canonical design ordering.
  bool operator<(const KnobConfig& other) const { return values_ < other.values_; }

 private:
  Map values_;
};

struct Violation {
  std::string knob;
  double value = 0.0;
  std::string reason;
  bool operator==(const Violation&) const = default;
};

// Returns every unknown-name or out-of-range assignment. Missing knobs are
// not violations; consumers fill defaults.
std::vector<Violation> validate_config(const KnobConfig& x, std::span<const KnobSpec> specs);

std::string describe(std::span<const Violation> violations);

// Sorted, name-unique set of knob specs with index lookup. Feature vectors
// built from a universe are laid out in its (lexicographic) order.
class KnobUniverse {
 public:
  KnobUniverse() = default;
  explicit KnobUniverse(std::vector<KnobSpec> specs);

  std::size_t size() const { return specs_.size(); }
  const std::vector<KnobSpec>& specs() const { return specs_; }
  const KnobSpec& operator[](std::size_t i) const { return specs_[i]; }
  std::optional<std::size_t> index_of(std::string_view name) const;
  const KnobSpec& spec(std::string_view name) const;
  std::vector<std::string> names() const;

  KnobConfig default_config() const;
  // Missing knobs take defaults; unknown or out-of-range knobs throw.
  Eigen::VectorXd to_row(const KnobConfig& x) const;
  KnobConfig from_row(const Eigen::Ref<const Eigen::VectorXd>& row) const;

  bool operator==(const KnobUniverse& other) const { return specs_ == other.specs_; }

 private:
  std::vector<KnobSpec> specs_;
};

struct KPDataset {
  std::vector<KnobConfig> X;
  std::vector<double> y;
  std::string scenario_id;
  std::vector<KnobSpec> knobs;

  std::size_t size() const { return y.size(); }
  bool operator==(const KPDataset&) const = default;
};

void validate_dataset(const KPDataset& d);
// The dataset's declared knobs, or (when none are declared) specs inferred
// from the observed value ranges with the first row as defaults.
KnobUniverse universe_of(const KPDataset& d);
Eigen::MatrixXd feature_matrix(const KPDataset& d, const KnobUniverse& universe);
Eigen::VectorXd label_vector(const KPDataset& d);
KPDataset subset(const KPDataset& d, std::span<const std::size_t> rows);

struct TxnRatio {
  std::string name;
  double ratio = 0.0;
  bool operator==(const TxnRatio&) const = default;
};

struct Scenario {
  std::string id;
  double data_scale_gb = 1.0;
  std::vector<TxnRatio> txn_mix;
  std::string env_tag;
  bool operator==(const Scenario&) const = default;
};

void validate_scenario(const Scenario& s);

inline constexpr std::array<std::string_view, 4> kSuidClasses = {"select", "update", "insert",
                                                                 "delete"};
inline constexpr std::array<std::string_view, 8> kOperatorClasses = {
    "seq_scan", "index_scan", "bitmap_scan", "sort",
    "hash_join", "nested_loop", "merge_join", "aggregate"};

struct Fingerprint {
  std::array<double, 4> suid{};
  std::array<double, 8> ops{};

  using Vector = Eigen::Matrix<double, 12, 1>;
  Vector concat() const;
  bool operator==(const Fingerprint&) const = default;
};

void validate_fingerprint(const Fingerprint& f);

struct QueryLog {
  std::array<std::uint64_t, 4> suid{};  // select, update, insert, delete
  std::array<std::uint64_t, 8> ops{};   // see kOperatorClasses
  bool operator==(const QueryLog&) const = default;
};

class KnobRanking {
 public:
  KnobRanking() = default;
  explicit KnobRanking(std::map<std::string, double> weights);

  const std::map<std::string, double>& weights() const { return weights_; }
  std::size_t size() const { return weights_.size(); }
  double score(std::string_view knob) const;
  // Descending score, ties by lexicographic name.
  std::vector<std::pair<std::string, double>> ordered() const;
  bool operator==(const KnobRanking&) const = default;

 private:
  std::map<std::string, double> weights_;
};

}  // namespace iwek

#endif  // IWEK_CORE_HPP
