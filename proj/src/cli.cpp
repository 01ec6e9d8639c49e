#include "iwek/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iomanip>
#include <ostream>

#include "iwek/eval.hpp"
#include "iwek/lhs.hpp"
#include "iwek/model.hpp"
#include "iwek/ranking.hpp"
#include "iwek/repo.hpp"
#include "iwek/serialize.hpp"
#include "iwek/service.hpp"
#include "iwek/sim.hpp"

namespace iwek {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Args {
  bool json = false;
  std::uint64_t seed = 0;
  std::uint64_t suite_seed = 0;
  std::string out, dataset, model, config, repo, log, labels, sim, scenario, report, id, experiment;
  std::string host = "127.0.0.1";
  std::size_t points = 100;
  std::uint64_t queries = 20000;
  std::size_t top = 5;
  std::size_t K = 3;
  std::size_t N = 10;
  std::size_t max_k = 6;
  int budget = 30;
  int port = 8080;
  bool noiseless = false;
  bool overwrite = false;
  std::vector<std::string> exclude;
};

std::string fixed(double v, const char* fmt = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

// Accepts documents with or without the version tag; a present tag must match.
Json load_doc(const std::string& path) {
  Json j = read_json_file(path);
  if (j.is_object() && j.contains("version")) check_version(j);
  return j;
}

template <typename T>
T load_as(const std::string& path) {
  Json j = load_doc(path);
  try {
    return j.get<T>();
  } catch (const Json::exception& e) {
    throw DataError("'" + path + "' is malformed: " + e.what());
  }
}

KnobConfig load_config(const std::string& path) {
  Json j = load_doc(path);
  if (j.contains("config")) j = j.at("config");
  j.erase("version");
  return j.get<KnobConfig>();
}

void emit(const Args& a, std::ostream& out, const Json& doc) {
  if (a.out.empty()) out << doc.dump(1) << '\n';
  else write_json_file(a.out, doc);
}

std::vector<SyntheticScenario> suite_for(const Args& a) { return make_scenario_suite(a.suite_seed); }

void cmd_sim(CLI::App& sub, const Args& a, std::ostream& out) {
  const auto suite = suite_for(a);
  if (sub.got_subcommand("gen-suite")) {
    emit(a, out, {{"scenarios", suite}, {"version", std::string(kFormatVersion)}});
  } else if (sub.got_subcommand("collect")) {
    const auto& s = find_scenario(suite, a.scenario);
    const auto design = lhs_sample(a.points, s.knobs, a.seed);
    emit(a, out, to_document(collect_kp(s, design.S, !a.noiseless)));
  } else if (sub.got_subcommand("log")) {
    const auto& s = find_scenario(suite, a.scenario);
    emit(a, out, to_document(gen_log(s, a.queries, a.seed)));
  }
}

void cmd_rank(const Args& a, std::ostream& out) {
  const auto D = load_as<KPDataset>(a.dataset);
  validate_dataset(D);
  auto models = default_ensemble(derive_seed(a.seed, "ensemble"));
  const auto names = universe_of(D).names();
  const KnobRanking W = rank_knobs(models, D, names, a.seed);
  const auto order = W.ordered();
  const std::size_t k = std::min(a.top, order.size());
  if (a.json) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < k; ++i) rows.push_back({{"rank", i + 1}, {"knob", order[i].first}, {"score", order[i].second}});
    Json models_json = Json::array();
    for (const auto& m : models) models_json.push_back({{"kind", std::string(to_string(m.kind()))}, {"r2", m.score()}});
    out << Json{{"ranking", rows}, {"models", models_json}}.dump(1) << '\n';
    return;
  }
  out << std::left << std::setw(6) << "rank" << std::setw(32) << "knob" << "score\n";
  for (std::size_t i = 0; i < k; ++i)
    out << std::setw(6) << i + 1 << std::setw(32) << order[i].first << fixed(order[i].second) << '\n';
}

void cmd_train(const Args& a, std::ostream& out) {
  const auto D = load_as<KPDataset>(a.dataset);
  validate_dataset(D);
  IkeOptions options;
  options.budget = a.budget;
  const auto m = fit_ike(D, a.seed, options);
  save_model(a.out, m);
  const auto& f = *m.forest();
  if (a.json) {
    out << Json{{"model", a.out}, {"rules", m.rules().size()}, {"nonzero", m.nonzero_count()}, {"lambda", m.lambda()},
                {"oob_r2", std::isfinite(f.oob_r2) ? Json(f.oob_r2) : Json(nullptr)}}
               .dump(1)
        << '\n';
    return;
  }
  out << "trained " << m.rules().size() << " rules (" << m.nonzero_count() << " non-zero), lambda "
      << m.lambda() << ", forest " << f.params.n_trees << " trees depth " << f.params.max_depth << ", oob r2 "
      << fixed(f.oob_r2) << "\nwrote " << a.out << '\n';
}

void cmd_predict(const Args& a, std::ostream& out) {
  const Model m = load_model(a.model);
  const double p = predict_model(m, load_config(a.config));
  if (a.json) out << Json{{"prediction", p}}.dump() << '\n';
  else out << fixed(p) << '\n';
}

void cmd_explain(const Args& a, std::ostream& out) {
  const Model m = load_model(a.model);
  const KnobConfig x = load_config(a.config);
  const auto xs = explain_model(m, x);
  if (a.json) {
    out << explanations_to_json(xs).dump() << '\n';
    return;
  }
  out << "prediction " << fixed(predict_model(m, x)) << '\n';
  if (const auto* e = std::get_if<InterpretableEstimator>(&m)) out << "intercept  " << fixed(e->intercept()) << '\n';
  for (const auto& r : xs) {
    out << fixed(r.weight, "%+.6f") << "  " << r.rule;
    if (!r.member.empty()) out << "  [" << r.member << "]";
    out << '\n';
  }
}

void cmd_transfer(const Args& a, std::ostream& out) {
  if (a.labels.empty() == a.sim.empty()) throw UsageError("transfer needs exactly one of --labels or --sim");
  const ExperienceRepository repo(a.repo);
  TransferRequest r;
  r.K = a.K;
  r.N = a.N;
  r.seed = a.seed;
  r.exclude = a.exclude;
  if (!a.log.empty()) r.log = load_as<QueryLog>(a.log);
  if (!a.labels.empty()) r.labels = load_as<KPDataset>(a.labels);
  if (!a.sim.empty()) r.sim = a.sim;
  const auto M = run_transfer_request(repo, r, suite_for(a));
  save_model(a.out, M);
  if (a.json) {
    Json members = Json::array();
    for (const auto& m : M.members)
      members.push_back({{"experience", m.experience->scenario_id}, {"weight", m.weight}, {"mismatch", m.mismatch}});
    out << Json{{"model", a.out}, {"members", members}, {"ranking", M.ranking}}.dump(1) << '\n';
    return;
  }
  out << std::left << std::setw(24) << "member" << std::setw(12) << "weight" << std::setw(12) << "fp_dist"
      << "similarity\n";
  for (const auto& m : M.members)
    out << std::setw(24) << m.experience->scenario_id << std::setw(12) << fixed(m.weight) << std::setw(12)
        << fixed(m.fingerprint_distance) << (m.mismatch ? std::string("mismatch") : fixed(m.similarity)) << '\n';
  out << "design knobs:";
  for (const auto& k : M.design.knobs) out << ' ' << k;
  out << "\nwrote " << a.out << '\n';
}

void cmd_repo(CLI::App& sub, const Args& a, std::ostream& out) {
  ExperienceRepository repo(a.repo);
  if (sub.got_subcommand("add")) {
    const Model model = load_model(a.model);
    const auto* est = std::get_if<InterpretableEstimator>(&model);
    if (!est) throw ValidationError("only origin (ike) models can be stored as experiences");
    const auto D = load_as<KPDataset>(a.dataset);
    validate_dataset(D);
    Experience e;
    e.scenario_id = a.id.empty() ? D.scenario_id : a.id;
    if (e.scenario_id.empty()) throw ValidationError("experience needs an id: pass --id or set the dataset's scenario_id");
    e.estimator = *est;
    e.knob_universe = est->universe().specs();
    e.fingerprint = fingerprint_from_log(load_as<QueryLog>(a.log));
    auto models = default_ensemble(derive_seed(a.seed, "ensemble"));
    e.ranking = rank_knobs(models, D, est->universe().names(), a.seed);
    const auto id = repo.put(e, a.overwrite);
    if (a.json) out << Json{{"id", id}}.dump() << '\n';
    else out << "added " << id << '\n';
  } else if (sub.got_subcommand("list")) {
    const auto entries = repo.list();
    if (a.json) {
      Json list = Json::array();
      for (const auto& e : entries) list.push_back({{"id", e.id}, {"fingerprint", e.fingerprint}, {"sha256", e.sha256}});
      out << list.dump(1) << '\n';
      return;
    }
    for (const auto& e : entries) out << e.id << "  " << e.sha256.substr(0, 12) << '\n';
  } else if (sub.got_subcommand("show")) {
    const Experience e = repo.get(a.id);
    if (a.json) {
      out << Json{{"id", a.id}, {"fingerprint", e.fingerprint}, {"ranking", e.ranking},
                  {"rules", e.estimator.rules().size()}, {"nonzero", e.estimator.nonzero_count()}}
                 .dump(1)
          << '\n';
      return;
    }
    out << "id        " << a.id << "\nrules     " << e.estimator.rules().size() << " (" << e.estimator.nonzero_count()
        << " non-zero)\nsuid     ";
    for (double v : e.fingerprint.suid) out << ' ' << fixed(v);
    out << "\nops      ";
    for (double v : e.fingerprint.ops) out << ' ' << fixed(v);
    out << "\nranking\n";
    for (const auto& [k, s] : e.ranking.ordered()) out << "  " << std::left << std::setw(32) << k << fixed(s) << '\n';
  }
}

void cmd_eval(const Args& a, std::ostream& out) {
  const auto suite = suite_for(a);
  EvalOptions options;
  options.K = a.K;
  options.N = a.N;
  std::string csv;
  Json sum;
  if (a.experiment == "recall") {
    const auto r = ranking_recall(suite, a.seed, options);
    csv = to_csv(r);
    sum = summary(r);
  } else {
    const auto bank = build_experience_bank(suite, a.seed, options);
    if (a.experiment == "origin") {
      const auto r = run_origin_eval(bank, a.seed, options);
      csv = to_csv(r);
      sum = summary(r);
    } else if (a.experiment == "transfer") {
      const auto r = run_transfer_eval(suite, bank, a.K, a.N, a.seed, options);
      csv = to_csv(r);
      sum = summary(r);
    } else {
      const auto r = run_robustness_sweep(suite, bank, a.max_k, a.seed, options);
      csv = to_csv(r);
      sum = summary(r);
    }
  }
  sum["seed"] = a.seed;
  sum["version"] = std::string(kFormatVersion);
  if (!a.report.empty()) {
    write_text_file(a.report, csv);
    fs::path s = a.report;
    s.replace_extension(".summary.json");
    write_json_file(s, sum);
  }
  if (a.json) out << sum.dump(1) << '\n';
  else out << csv;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Args a;
  CLI::App app{"Interpretable what-if estimation of database knob configurations", "iwek"};
  app.set_version_flag("--version", std::string("iwek ") + IWEK_VERSION);
  app.add_flag("--json", a.json, "Machine-readable output");
  app.require_subcommand(1);

  auto seed = [&](CLI::App* s) { s->add_option("--seed", a.seed, "Random seed")->capture_default_str(); };
  auto suite_seed = [&](CLI::App* s) {
    s->add_option("--suite-seed", a.suite_seed, "Seed of the simulated scenario suite")->capture_default_str();
  };
  auto repo_opt = [&](CLI::App* s) {
    s->add_option("--repo", a.repo, "Experience repository directory")->envname("IWEK_REPO")->required();
  };

  auto* sim = app.add_subcommand("sim", "Simulated scenarios, K-P data and query logs");
  sim->require_subcommand(1);
  auto* gen = sim->add_subcommand("gen-suite", "Export the 16-scenario suite");
  auto* collect = sim->add_subcommand("collect", "Sample an LHS design and label it with the oracle");
  auto* logc = sim->add_subcommand("log", "Generate a query log");
  for (auto* s : {gen, collect, logc}) {
    seed(s);
    suite_seed(s);
    s->add_option("--out", a.out, "Output file (default: stdout)");
  }
  collect->add_option("--scenario", a.scenario)->required();
  collect->add_option("--points", a.points)->capture_default_str();
  collect->add_flag("--noiseless", a.noiseless);
  logc->add_option("--scenario", a.scenario)->required();
  logc->add_option("--queries", a.queries)->capture_default_str();

  auto* rank = app.add_subcommand("rank", "Rank knob importance");
  rank->add_option("--dataset", a.dataset)->required();
  rank->add_option("--top-k", a.top)->capture_default_str();
  seed(rank);

  auto* train = app.add_subcommand("train", "Fit a rule-based estimator");
  train->add_option("--dataset", a.dataset)->required();
  train->add_option("--budget", a.budget)->capture_default_str()->check(CLI::PositiveNumber);
  train->add_option("--out", a.out)->required();
  seed(train);

  auto* predict = app.add_subcommand("predict", "Predict a configuration's performance");
  auto* explain = app.add_subcommand("explain", "List the rules behind a prediction");
  for (auto* s : {predict, explain}) {
    s->add_option("--model", a.model)->required();
    s->add_option("--config", a.config)->required();
    seed(s);
  }

  auto* transfer = app.add_subcommand("transfer", "Build an estimator for a new scenario from experiences");
  repo_opt(transfer);
  transfer->add_option("--log", a.log, "Target query log");
  transfer->add_option("--labels", a.labels, "Labelled K-P file; its configs are the design");
  transfer->add_option("--sim", a.sim, "Simulated target scenario id");
  transfer->add_option("--K", a.K)->capture_default_str()->check(CLI::PositiveNumber);
  transfer->add_option("--N", a.N)->capture_default_str()->check(CLI::Range(4, 100000));
  transfer->add_option("--exclude", a.exclude, "Experience ids to leave out");
  transfer->add_option("--out", a.out)->required();
  seed(transfer);
  suite_seed(transfer);

  auto* repo = app.add_subcommand("repo", "Manage the experience repository");
  repo->require_subcommand(1);
  auto* add = repo->add_subcommand("add", "Store an experience");
  add->add_option("--model", a.model)->required();
  add->add_option("--dataset", a.dataset, "Training data, used for the ranking")->required();
  add->add_option("--log", a.log)->required();
  add->add_option("--id", a.id);
  add->add_flag("--overwrite", a.overwrite);
  auto* list = repo->add_subcommand("list", "List experiences");
  auto* show = repo->add_subcommand("show", "Show one experience");
  show->add_option("id", a.id)->required();
  for (auto* s : {add, list, show}) {
    repo_opt(s);
    seed(s);
  }

  auto* eval = app.add_subcommand("eval", "Run an experiment on the simulated suite");
  eval->add_option("experiment", a.experiment)
      ->required()
      ->check(CLI::IsMember({"origin", "transfer", "robustness", "recall"}));
  eval->add_option("--report", a.report, "CSV report; a .summary.json is written beside it");
  eval->add_option("--K", a.K)->capture_default_str()->check(CLI::PositiveNumber);
  eval->add_option("--N", a.N)->capture_default_str()->check(CLI::Range(4, 100000));
  eval->add_option("--max-k", a.max_k)->capture_default_str()->check(CLI::PositiveNumber);
  seed(eval);
  suite_seed(eval);

  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  repo_opt(serve);
  serve->add_option("--port", a.port)->capture_default_str();
  serve->add_option("--host", a.host)->capture_default_str();
  seed(serve);
  suite_seed(serve);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (sim->parsed()) cmd_sim(*sim, a, out);
    else if (rank->parsed()) cmd_rank(a, out);
    else if (train->parsed()) cmd_train(a, out);
    else if (predict->parsed()) cmd_predict(a, out);
    else if (explain->parsed()) cmd_explain(a, out);
    else if (transfer->parsed()) cmd_transfer(a, out);
    else if (repo->parsed()) cmd_repo(*repo, a, out);
    else if (eval->parsed()) cmd_eval(a, out);
    else if (serve->parsed()) {
      Service service(a.repo, a.suite_seed);
      err << "serving " << a.repo << " on http://" << a.host << ':' << a.port << '\n';
      service.serve(a.host, a.port);
    }
    return 0;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace iwek
