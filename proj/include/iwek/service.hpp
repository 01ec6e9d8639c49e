#ifndef IWEK_SERVICE_HPP
#define IWEK_SERVICE_HPP

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iwek/model.hpp"
#include "iwek/repo.hpp"
#include "iwek/serialize.hpp"
#include "iwek/sim.hpp"

namespace iwek {

inline constexpr std::size_t kMaxRequestBytes = 1 << 20;

struct HttpResponse {
  int status = 200;
  std::string body;
};

using QueryParams = std::map<std::string, std::string, std::less<>>;

// HTTP facade over the repository, estimators and transfer. Models are
// addressed by id: an experience id serves that experience's estimator, and
// ids minted by POST /v1/transfer serve transferred models stored under
// <repo>/models/. Loaded models are cached and never mutated.
//
//   POST /v1/estimate      {model, config}               -> {model, prediction, explanations}
//   POST /v1/compare       {model, config_a, config_b}   -> {better, predictions: {a, b}}
//   GET  /v1/experiences                                 -> {experiences: [...]}
//   GET  /v1/knob-profile  ?model=&knob=[&points=]       -> {model, knob, points, breakpoints}
//   POST /v1/transfer      {K, N, seed, log?, labels | sim, exclude?} -> {model}
//
// Errors are {code, message} with 400 (malformed), 404 (unknown model or
// route), 405, 413 (body over 1 MB), 422 (invalid configuration or input).
class Service {
 public:
  // `suite_seed` selects the simulator suite used by {"sim": ...} transfers.
  explicit Service(std::filesystem::path repo_root, std::uint64_t suite_seed = 0);

  HttpResponse handle(std::string_view method, std::string_view path, const QueryParams& query,
                      std::string_view body);

  // Blocks serving HTTP until stop(). Port 0 binds an ephemeral port;
  // on_listening receives the bound port once requests are accepted.
  void serve(const std::string& host, int port, std::function<void(int)> on_listening = {});
  void stop();

  ExperienceRepository& repository() { return repo_; }
  std::shared_ptr<const Model> model(std::string_view id);

 private:
  HttpResponse estimate(const Json& body);
  HttpResponse compare(const Json& body);
  HttpResponse experiences();
  HttpResponse knob_profile(const QueryParams& query);
  HttpResponse transfer(const Json& body);

  ExperienceRepository repo_;
  std::vector<SyntheticScenario> suite_;
  std::mutex cache_mutex_;
  std::map<std::string, std::shared_ptr<const Model>, std::less<>> cache_;
  std::mutex write_mutex_;
  std::mutex server_mutex_;
  std::function<void()> stop_server_;
};

Json explanations_to_json(const std::vector<Explanation>& xs);

// Inputs of a transfer shared by the CLI and the service. Exactly one of
// `labels` (a labelled K-P file whose configs become the design) or `sim`
// (a suite scenario labelled by its noisy oracle) must be set. Without `log`
// a sim target generates one.
struct TransferRequest {
  std::size_t K = 3;
  std::size_t N = 10;
  std::uint64_t seed = 0;
  std::optional<QueryLog> log;
  std::optional<KPDataset> labels;
  std::optional<std::string> sim;
  std::vector<std::string> exclude;  // experience ids left out of the candidate set
};

TransferredEstimator run_transfer_request(const ExperienceRepository& repo, const TransferRequest& request,
                                          std::span<const SyntheticScenario> suite);

// Sorted distinct finite rule bounds on `knob` among non-zero-weight rules:
// the only places a knob profile can change value.
std::vector<double> profile_breakpoints(const Model& m, std::string_view knob);

}  // namespace iwek

#endif  // IWEK_SERVICE_HPP
