#include "iwek/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>
#include <thread>

#include "iwek/error.hpp"

namespace iwek {

namespace {

struct BadRequest : std::runtime_error {
  using std::runtime_error::runtime_error;
};

HttpResponse reply(int status, const Json& j) { return {status, j.dump()}; }

HttpResponse error(int status, std::string_view code, std::string_view message) {
  return reply(status, {{"code", code}, {"message", message}});
}

Json parse_body(std::string_view body) {
  try {
    Json j = Json::parse(body);
    if (!j.is_object()) throw BadRequest("request body must be a JSON object");
    return j;
  } catch (const Json::exception& e) {
    throw BadRequest(std::string("malformed JSON: ") + e.what());
  }
}

const Json& field(const Json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw BadRequest(std::string("missing field '") + name + "'");
  return *it;
}

std::string string_field(const Json& j, const char* name) {
  const Json& v = field(j, name);
  if (!v.is_string()) throw BadRequest(std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

KnobConfig config_field(const Json& j, const char* name) {
  const Json& v = field(j, name);
  if (!v.is_object()) throw BadRequest(std::string("field '") + name + "' must be an object");
  return v.get<KnobConfig>();
}

template <typename T>
T number_field(const Json& j, const char* name, T fallback) {
  auto it = j.find(name);
  if (it == j.end()) return fallback;
  if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<long long>() >= 0))
    throw BadRequest(std::string("field '") + name + "' must be a non-negative integer");
  return it->get<T>();
}

bool valid_id(std::string_view id) {
  return !id.empty() && id.size() <= 128 && id.front() != '.' &&
         std::all_of(id.begin(), id.end(), [](char c) {
           return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
         });
}

void add_breakpoints(const InterpretableEstimator& e, std::string_view knob, std::set<double>& out) {
  for (std::size_t j = 0; j < e.rules().size(); ++j) {
    if (e.weights()[static_cast<Eigen::Index>(j)] == 0.0) continue;
    auto it = e.rules()[j].conjuncts.find(std::string(knob));
    if (it == e.rules()[j].conjuncts.end()) continue;
    if (std::isfinite(it->second.lo)) out.insert(it->second.lo);
    if (std::isfinite(it->second.hi)) out.insert(it->second.hi);
  }
}

}  // namespace

Json explanations_to_json(const std::vector<Explanation>& xs) {
  Json a = Json::array();
  for (const auto& x : xs) {
    Json e = {{"index", x.index}, {"rule", x.rule}, {"weight", x.weight}};
    if (!x.member.empty()) e["member"] = x.member;
    a.push_back(std::move(e));
  }
  return a;
}

std::vector<double> profile_breakpoints(const Model& m, std::string_view knob) {
  std::set<double> out;
  if (const auto* e = std::get_if<InterpretableEstimator>(&m)) {
    add_breakpoints(*e, knob, out);
  } else {
    for (const auto& member : std::get<TransferredEstimator>(m).members)
      if (member.weight != 0.0) add_breakpoints(member.experience->estimator, knob, out);
  }
  return {out.begin(), out.end()};
}

TransferredEstimator run_transfer_request(const ExperienceRepository& repo, const TransferRequest& request,
                                          std::span<const SyntheticScenario> suite) {
  if (request.labels.has_value() == request.sim.has_value())
    throw ValidationError("a transfer needs exactly one label source: labelled data or a simulated scenario");
  std::vector<std::shared_ptr<const Experience>> candidates;
  for (auto& e : repo.load_all())
    if (std::find(request.exclude.begin(), request.exclude.end(), e->scenario_id) == request.exclude.end())
      candidates.push_back(std::move(e));
  if (candidates.empty()) throw DataError("experience repository has no candidate experiences");

  TransferOptions options;
  options.K = request.K;
  options.N = request.N;
  if (request.sim) {
    const SyntheticScenario& s = find_scenario(suite, *request.sim);
    const QueryLog log = request.log ? *request.log : gen_log(s, 20000, request.seed);
    const LabelSource labels = [&s](std::span<const KnobConfig> S) {
      std::vector<double> y;
      for (const auto& x : S) y.push_back(oracle_perf(s, x, true));
      return y;
    };
    return transfer_estimator(candidates, fingerprint_from_log(log), KnobUniverse(s.knobs), labels, request.seed,
                              options);
  }
  if (!request.log) throw ValidationError("a transfer from labelled data needs the target's query log");
  const KPDataset& D = *request.labels;
  validate_dataset(D);
  const LabelSource labels = [&D](std::span<const KnobConfig> S) {
    if (S.size() != D.size()) throw DataError("label file does not cover the design");
    return D.y;
  };
  return transfer_estimator(candidates, fingerprint_from_log(*request.log), universe_of(D), labels, request.seed,
                            options, &D.X);
}

Service::Service(std::filesystem::path repo_root, std::uint64_t suite_seed)
    : repo_(std::move(repo_root)), suite_(make_scenario_suite(suite_seed)) {}

std::shared_ptr<const Model> Service::model(std::string_view id) {
  if (!valid_id(id)) throw NotFoundError("unknown model '" + std::string(id) + "'");
  {
    std::lock_guard guard(cache_mutex_);
    if (auto it = cache_.find(id); it != cache_.end()) return it->second;
  }
  std::shared_ptr<const Model> m;
  const auto path = repo_.root() / "models" / (std::string(id) + ".iwek");
  if (std::filesystem::exists(path)) {
    m = std::make_shared<const Model>(load_model(path));
  } else if (repo_.contains(id)) {
    m = std::make_shared<const Model>(repo_.get(id).estimator);
  } else {
    throw NotFoundError("unknown model '" + std::string(id) + "'");
  }
  std::lock_guard guard(cache_mutex_);
  return cache_.emplace(std::string(id), std::move(m)).first->second;
}

HttpResponse Service::handle(std::string_view method, std::string_view path, const QueryParams& query,
                             std::string_view body) {
  try {
    if (body.size() > kMaxRequestBytes) return error(413, "payload_too_large", "request body exceeds 1 MB");
    struct Route {
      std::string_view path;
      std::string_view method;
    };
    static constexpr Route routes[] = {{"/v1/estimate", "POST"},    {"/v1/compare", "POST"},
                                       {"/v1/experiences", "GET"},  {"/v1/knob-profile", "GET"},
                                       {"/v1/transfer", "POST"}};
    const auto* route = std::find_if(std::begin(routes), std::end(routes), [&](const Route& r) { return r.path == path; });
    if (route == std::end(routes)) return error(404, "not_found", "no route for " + std::string(path));
    if (route->method != method) return error(405, "method_not_allowed", std::string(path) + " expects " + std::string(route->method));

    if (path == "/v1/estimate") return estimate(parse_body(body));
    if (path == "/v1/compare") return compare(parse_body(body));
    if (path == "/v1/experiences") return experiences();
    if (path == "/v1/knob-profile") return knob_profile(query);
    return transfer(parse_body(body));
  } catch (const BadRequest& e) {
    return error(400, "bad_request", e.what());
  } catch (const NotFoundError& e) {
    return error(404, "not_found", e.what());
  } catch (const IntegrityError& e) {
    return error(500, "integrity", e.what());
  } catch (const DataError& e) {
    return error(422, "invalid_input", e.what());
  } catch (const Json::exception& e) {
    return error(400, "bad_request", e.what());
  } catch (const std::exception& e) {
    return error(500, "internal", e.what());
  }
}

HttpResponse Service::estimate(const Json& body) {
  const std::string id = string_field(body, "model");
  const KnobConfig x = config_field(body, "config");
  const auto m = model(id);
  const double p = predict_model(*m, x);
  return reply(200, {{"model", id}, {"prediction", p}, {"explanations", explanations_to_json(explain_model(*m, x))}});
}

HttpResponse Service::compare(const Json& body) {
  const std::string id = string_field(body, "model");
  const KnobConfig a = config_field(body, "config_a");
  const KnobConfig b = config_field(body, "config_b");
  const auto m = model(id);
  const double pa = predict_model(*m, a);
  const double pb = predict_model(*m, b);
  const char* better = pa > pb ? "a" : (pb > pa ? "b" : "tie");
  return reply(200, {{"model", id}, {"better", better}, {"predictions", {{"a", pa}, {"b", pb}}}});
}

HttpResponse Service::experiences() {
  Json list = Json::array();
  for (const auto& e : repo_.list())
    list.push_back({{"id", e.id}, {"scenario_id", e.scenario_id}, {"fingerprint", e.fingerprint}, {"sha256", e.sha256}});
  return reply(200, {{"experiences", std::move(list)}, {"version", std::string(kFormatVersion)}});
}

HttpResponse Service::knob_profile(const QueryParams& query) {
  auto get = [&](const char* name) {
    auto it = query.find(name);
    if (it == query.end() || it->second.empty()) throw BadRequest(std::string("missing query parameter '") + name + "'");
    return it->second;
  };
  const std::string id = get("model");
  const std::string knob = get("knob");
  int points = 101;
  if (auto it = query.find("points"); it != query.end()) {
    try {
      points = std::stoi(it->second);
    } catch (const std::exception&) {
      throw BadRequest("points must be an integer");
    }
    if (points < 2 || points > 10001) throw BadRequest("points must be in [2, 10001]");
  }
  const auto m = model(id);
  const KnobUniverse u = model_universe(*m);
  const auto idx = u.index_of(knob);
  if (!idx) throw ValidationError("model '" + id + "' has no knob '" + knob + "'");
  const auto grid = linear_grid(u[*idx], points);
  Json curve = Json::array();
  for (const auto& p : model_profile(*m, knob, grid, u.default_config()))
    curve.push_back({{"value", p.value}, {"prediction", p.prediction}});
  return reply(200, {{"model", id}, {"knob", knob}, {"points", std::move(curve)},
                     {"breakpoints", profile_breakpoints(*m, knob)}});
}

HttpResponse Service::transfer(const Json& body) {
  TransferRequest r;
  r.K = number_field<std::size_t>(body, "K", 3);
  r.N = number_field<std::size_t>(body, "N", 10);
  r.seed = number_field<std::uint64_t>(body, "seed", 0);
  if (auto it = body.find("log"); it != body.end()) r.log = it->get<QueryLog>();
  if (auto it = body.find("labels"); it != body.end()) r.labels = it->get<KPDataset>();
  if (auto it = body.find("sim"); it != body.end()) {
    if (it->is_string()) r.sim = it->get<std::string>();
    else r.sim = string_field(*it, "scenario");
  }
  if (auto it = body.find("exclude"); it != body.end()) r.exclude = it->get<std::vector<std::string>>();
  if (r.labels.has_value() == r.sim.has_value()) throw BadRequest("provide exactly one of 'labels' or 'sim'");

  const TransferredEstimator M = run_transfer_request(repo_, r, suite_);
  Json canonical = body;
  canonical.erase("version");
  const std::string id = "xfer-" + sha256_hex(canonical.dump()).substr(0, 16);
  {
    std::lock_guard guard(write_mutex_);
    std::filesystem::create_directories(repo_.root() / "models");
    save_model(repo_.root() / "models" / (id + ".iwek"), M);
  }
  {
    std::lock_guard guard(cache_mutex_);
    cache_[id] = std::make_shared<const Model>(M);
  }
  Json members = Json::array();
  for (const auto& m : M.members)
    members.push_back({{"experience", m.experience->scenario_id}, {"weight", m.weight}, {"mismatch", m.mismatch}});
  return reply(201, {{"model", id}, {"members", std::move(members)}, {"ranking", M.ranking}});
}

void Service::serve(const std::string& host, int port, std::function<void(int)> on_listening) {
  httplib::Server svr;
  svr.set_payload_max_length(kMaxRequestBytes);
  auto dispatch = [this](const httplib::Request& req, httplib::Response& res) {
    QueryParams q;
    for (const auto& [k, v] : req.params) q.emplace(k, v);
    const HttpResponse r = handle(req.method, req.path, q, req.body);
    res.status = r.status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(r.body, "application/json");
  };
  svr.Get(".*", dispatch);
  svr.Post(".*", dispatch);
  svr.Options(".*", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  const int bound = port == 0 ? svr.bind_to_any_port(host) : (svr.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw DataError("cannot listen on " + host + ":" + std::to_string(port));
  {
    std::lock_guard guard(server_mutex_);
    stop_server_ = [&svr] { svr.stop(); };
  }
  std::thread notifier;
  if (on_listening) {
    notifier = std::thread([&svr, bound, cb = std::move(on_listening)] {
      svr.wait_until_ready();
      if (svr.is_running()) cb(bound);
    });
  }
  svr.listen_after_bind();
  if (notifier.joinable()) notifier.join();
  std::lock_guard guard(server_mutex_);
  stop_server_ = nullptr;
}

void Service::stop() {
  std::lock_guard guard(server_mutex_);
  if (stop_server_) stop_server_();
}

}  // namespace iwek
