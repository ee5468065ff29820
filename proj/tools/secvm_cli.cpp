#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "secvm/bounds.hpp"
#include "secvm/crypto.hpp"
#include "secvm/data.hpp"
#include "secvm/error.hpp"
#include "secvm/feature_hash.hpp"
#include "secvm/http_service.hpp"
#include "secvm/netsim.hpp"
#include "secvm/scenario.hpp"
#include "secvm/server.hpp"
#include "secvm/svm.hpp"
#include "secvm/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace secvm;

namespace {

constexpr const char* kVersion = "0.1.0";

std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json input_entry(const fs::path& p) {
  const auto bytes = read_bytes(p);
  return {{"path", p.string()}, {"git_blob", git_blob_id(bytes)}};
}

// Collects everything a run writes so the manifest can list it.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  std::ofstream open(const std::string& name) {
    const fs::path p = dir_ / name;
    std::ofstream out(p);
    if (!out) throw IoError("cannot write " + p.string());
    written_.push_back(p.string());
    return out;
  }

  void write_manifest(json manifest) {
    const fs::path p = dir_ / "manifest.json";
    manifest["outputs"] = written_;
    std::ofstream out(p);
    if (!out) throw IoError("cannot write " + p.string());
    out << manifest.dump(2) << '\n';
  }

 private:
  fs::path dir_;
  std::vector<std::string> written_;
};

void write_weights_csv(std::ostream& out, const std::vector<double>& w) {
  out << "index,weight\n";
  char buf[64];
  for (std::size_t j = 0; j < w.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g", w[j]);
    out << j << ',' << buf << '\n';
  }
}

std::string fmt_opt(const std::optional<double>& x) {
  if (!x) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *x);
  return buf;
}

std::string fmt_g(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// "none", "zero_vector", "inconsistent_weights[:q]", "short_deadline[:victim[:factor]]"
json parse_adversary_flag(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.empty()) throw ConfigError("--adversary: empty");
  json j{{"mode", parts[0]}};
  try {
    if (parts[0] == "inconsistent_weights" && parts.size() > 1) j["q"] = std::stod(parts[1]);
    if (parts[0] == "short_deadline" && parts.size() > 1) j["victim"] = std::stoull(parts[1]);
    if (parts[0] == "short_deadline" && parts.size() > 2) j["factor"] = std::stod(parts[2]);
  } catch (const std::exception&) {
    throw ConfigError("--adversary: cannot parse '" + text + "'");
  }
  return j;
}

// ---- train-oracle ---------------------------------------------------------------

struct TrainOracleArgs {
  std::string dataset;
  std::string test_dataset;
  bool all_train = false;
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
  TrainConfig cfg;
  std::uint32_t bins = 0;
  std::string hash_seed = std::string(64, '0');
  std::string out_dir = "out";
};

int cmd_train_oracle(const TrainOracleArgs& a) {
  json inputs = json::array();
  const Dataset full = load_dataset(a.dataset);
  inputs.push_back(input_entry(a.dataset));
  if (full.empty()) throw DataError("dataset " + a.dataset + " contains no samples");

  Dataset train, test;
  if (!a.test_dataset.empty()) {
    train = full;
    test = load_dataset(a.test_dataset);
    inputs.push_back(input_entry(a.test_dataset));
  } else if (a.all_train) {
    train = full;
    test = full;
  } else {
    std::tie(train, test) = split_train_test(full, a.train_fraction, a.seed);
  }
  if (train.empty()) throw DataError("training split is empty");

  std::optional<HashConfig> hash;
  if (a.bins > 0) hash = HashConfig{a.bins, parse_hash_seed(a.hash_seed)};
  const Trajectory traj = train_centralized(train, test, a.cfg, hash);

  Outputs out(a.out_dir);
  {
    auto f = out.open("trajectory.csv");
    write_trajectory_csv(f, traj);
  }
  {
    auto f = out.open("final_weights.csv");
    write_weights_csv(f, traj.final_state.w);
  }
  json config{{"lambda", a.cfg.lambda},
              {"class_weight_pos", a.cfg.class_weight_pos},
              {"class_weight_neg", a.cfg.class_weight_neg},
              {"iterations", a.cfg.num_iterations},
              {"avg_window", a.cfg.avg_window},
              {"bins", a.bins},
              {"hash_seed", a.bins > 0 ? json(a.hash_seed) : json(nullptr)},
              {"split", !a.test_dataset.empty() ? "test_dataset" : a.all_train ? "all_train" : "random"},
              {"train_fraction", a.train_fraction}};
  out.write_manifest({{"subcommand", "train-oracle"},
                      {"version", kVersion},
                      {"seed", a.seed},
                      {"config", config},
                      {"inputs", inputs}});

  if (!traj.records.empty()) {
    const auto& last = traj.records.back();
    std::cout << "iterations=" << last.iteration << " train=" << train.size() << " test=" << test.size()
              << " loss=" << fmt_g(last.loss) << " accuracy=" << fmt_opt(last.raw.accuracy)
              << " averaged_accuracy=" << fmt_opt(last.averaged.accuracy) << '\n';
  }
  return 0;
}

// ---- simulate -------------------------------------------------------------------

struct SimulateArgs {
  std::string scenario;
  std::string out_dir = "out";
  json overrides = json::object();
  bool verify = false;
};

int cmd_simulate(const SimulateArgs& a) {
  json j;
  {
    std::ifstream in(a.scenario);
    if (!in) throw IoError("cannot open scenario " + a.scenario);
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ConfigError("scenario " + a.scenario + " is not valid JSON: " + e.what());
    }
  }
  if (!j.is_object()) throw ConfigError("scenario: expected an object");
  for (const auto& [k, v] : a.overrides.items()) j[k] = v;

  const LoadedScenario ls = scenario_from_json(j, fs::path(a.scenario).parent_path());
  const SimResult res = run_experiment(ls.scenario);

  Outputs out(a.out_dir);
  {
    auto f = out.open("simulation.csv");
    write_simulation_csv(f, res);
  }
  {
    auto f = out.open("events.csv");
    res.log.write_csv(f);
  }
  {
    auto f = out.open("final_weights.csv");
    write_weights_csv(f, res.final_model.w);
  }
  json detection{{"adversary", ls.resolved.at("adversary")},
                 {"verified", res.detection.verified},
                 {"detections", res.detection.detections},
                 {"rate", res.detection.rate()}};
  if (const auto* iw = std::get_if<InconsistentWeights>(&ls.scenario.adversary)) {
    const double q = iw->q, v = ls.scenario.verification_requests;
    detection["expected_rate"] = 1.0 - std::pow(q, v) - std::pow(1.0 - q, v);
  }
  {
    auto f = out.open("detection.json");
    f << detection.dump(2) << '\n';
  }
  json inputs = json::array();
  inputs.push_back(input_entry(a.scenario));
  for (const auto& p : ls.inputs) inputs.push_back(input_entry(p));
  out.write_manifest({{"subcommand", "simulate"},
                      {"version", kVersion},
                      {"seed", ls.scenario.seed},
                      {"config", ls.resolved},
                      {"inputs", inputs}});

  std::optional<bool> identical;
  if (a.verify) {
    const Scenario& sc = ls.scenario;
    if (!sc.all_train || !std::holds_alternative<NoAdversary>(sc.adversary) || sc.participant_estimate)
      throw ConfigError("--verify needs an honest all_train scenario without participant_estimate");
    const Trajectory tr = train_centralized(sc.dataset, sc.dataset, sc.train, sc.hash, {false});
    identical = res.final_model.w == tr.final_state.w;
  }

  std::cout << "iterations=" << res.iterations.size() << " train_clients=" << res.train_clients
            << " test_clients=" << res.test_clients;
  if (!res.iterations.empty()) {
    const auto& m = res.iterations.back().metrics;
    std::cout << " accuracy=" << fmt_opt(m.accuracy) << " recall_pos=" << fmt_opt(m.recall_pos)
              << " recall_neg=" << fmt_opt(m.recall_neg);
  }
  if (!std::holds_alternative<NoAdversary>(ls.scenario.adversary))
    std::cout << " verified=" << res.detection.verified << " detections=" << res.detection.detections
              << " detection_rate=" << fmt_g(res.detection.rate());
  if (identical) std::cout << " oracle_equivalence=" << (*identical ? "IDENTICAL" : "DIFFERENT");
  std::cout << '\n';
  return identical.value_or(true) ? 0 : 4;
}

// ---- bounds -----------------------------------------------------------------------

struct BoundsArgs {
  std::string lemma;
  std::uint64_t m = 0, n = 0, k = 0;
  std::uint64_t M = 0, F = 0, d = 0, K = 1;
  bool verify = false;
  std::uint64_t trials = 200000;
  std::uint64_t seed = 0;
  std::string out_dir;
};

struct BoundRow {
  std::string quantity;
  LogProb value;
  std::optional<double> oracle;
  std::string oracle_kind;
  std::string verdict;
};

OracleMode pick_oracle(std::uint64_t m, std::uint64_t n, const BoundsArgs& a, std::string& kind) {
  long double states = 1;
  for (std::uint64_t i = 0; i < m && states <= 1e7L; ++i) states *= n;
  if (states <= 1e7L) {
    kind = "exhaustive";
    return Exhaustive{};
  }
  if (m <= 12) {
    kind = "partition";
    return Partition{};
  }
  kind = "monte_carlo";
  return MonteCarlo{a.trials, a.seed};
}

std::string verdict(bool holds) { return holds ? "HOLDS" : "VIOLATED"; }

int cmd_bounds(const BoundsArgs& a) {
  std::vector<BoundRow> rows;
  std::string params;
  // relative slack for comparing an exact probability with a bound computed in floating point
  constexpr double kRel = 1e-12;

  if (a.lemma == "lemma1a" || a.lemma == "lemma1b" || a.lemma == "lemma2") {
    params = "m=" + std::to_string(a.m) + " n=" + std::to_string(a.n);
    if (a.lemma != "lemma1a") params += " k=" + std::to_string(a.k);
    std::optional<CollisionOracleResult> oracle;
    std::string kind;
    if (a.verify) oracle = collision_oracle(a.m, a.n, pick_oracle(a.m, a.n, a, kind));
    const double mc_slack = oracle && !oracle->exact ? 5.0 * std::sqrt(0.25 / static_cast<double>(a.trials)) : 0.0;

    if (a.lemma == "lemma1a") {
      BoundRow r{"p1_upper_bound", lemma1a_bound(a.m, a.n), {}, kind, ""};
      if (oracle) {
        r.oracle = oracle->p_some_alone;
        r.verdict = verdict(*r.oracle <= r.value.value() * (1 + kRel) + mc_slack);
      }
      rows.push_back(r);
    } else if (a.lemma == "lemma1b") {
      BoundRow r{"p2_upper_bound", lemma1b_bound(a.m, a.n, a.k), {}, kind, ""};
      if (oracle) {
        r.oracle = oracle->first_k_alone(a.k);
        r.verdict = verdict(*r.oracle <= r.value.value() * (1 + kRel) + mc_slack);
      }
      rows.push_back(r);
    } else {
      const Lemma2Result l2 = lemma2_bound(a.m, a.n, a.k);
      const LogProb lb = l2.lower_bound > 0 ? LogProb::from_ln(std::log(l2.lower_bound)) : LogProb::exact_zero();
      BoundRow r{l2.applicable ? "p3_lower_bound" : "p3_lower_bound(k>m/n)", lb, {}, kind, ""};
      if (oracle) {
        r.oracle = oracle->min_binmates(a.k);
        r.verdict = verdict(*r.oracle >= l2.lower_bound * (1 - kRel) - mc_slack);
      }
      rows.push_back(r);
      rows.push_back(BoundRow{"p3_complement", l2.complement, {}, "", ""});
    }
  } else if (a.lemma == "lemma3") {
    params = "M=" + std::to_string(a.M) + " F=" + std::to_string(a.F) + " d=" + std::to_string(a.d) +
             " K=" + std::to_string(a.K);
    BoundRow r{"max_outcome_difference_bound", lemma3_bound(a.M, a.F, a.d, a.K), {}, "", ""};
    if (a.verify) {
      std::vector<std::int64_t> vk(a.d, 0);
      vk[0] = static_cast<std::int64_t>(a.F);
      const std::vector<std::vector<std::int64_t>> v(a.K, vk);
      SplittingComparison cmp;
      try {
        cmp = splitting_exact(a.M, a.F, a.d, v);
        r.oracle_kind = "exact";
      } catch (const DomainError&) {
        cmp = splitting_monte_carlo(a.M, a.F, a.d, v, a.trials, a.seed);
        r.oracle_kind = "monte_carlo";
      }
      r.oracle = cmp.max_difference;
      r.verdict = verdict(cmp.max_difference <= cmp.bound.value() * (1 + kRel) + cmp.allowance);
    }
    rows.push_back(r);
  } else {
    throw ConfigError("bounds: unknown lemma '" + a.lemma + "' (lemma1a, lemma1b, lemma2, lemma3)");
  }

  std::ostringstream table;
  table << "lemma,params,quantity,log10,value,scientific,oracle,oracle_kind,verdict\n";
  for (const auto& r : rows) {
    table << a.lemma << ',' << params << ',' << r.quantity << ','
          << (r.value.zero ? std::string("-inf") : fmt_g(r.value.log10)) << ',' << fmt_g(r.value.value()) << ','
          << r.value.scientific() << ',' << (r.oracle ? fmt_g(*r.oracle) : "") << ',' << r.oracle_kind << ','
          << r.verdict << '\n';
  }
  std::cout << table.str();
  if (!a.out_dir.empty()) {
    Outputs out(a.out_dir);
    out.open("bounds.csv") << table.str();
    out.write_manifest({{"subcommand", "bounds"},
                        {"version", kVersion},
                        {"seed", a.seed},
                        {"config",
                         {{"lemma", a.lemma}, {"m", a.m}, {"n", a.n}, {"k", a.k}, {"M", a.M}, {"F", a.F}, {"d", a.d},
                          {"K", a.K}, {"verify", a.verify}, {"trials", a.trials}}},
                        {"inputs", json::array()}});
  }
  for (const auto& r : rows)
    if (r.verdict == "VIOLATED") return 4;
  return 0;
}

// ---- plan-bins --------------------------------------------------------------------

struct PlanArgs {
  std::uint64_t m = 0;
  std::string max_p1, max_p2, max_fail;
  std::uint64_t k = 1;
  std::uint64_t min_collisions = 0;
  std::string out_dir;
};

int cmd_plan_bins(const PlanArgs& a) {
  std::vector<std::pair<std::string, PlanTarget>> targets;
  if (!a.max_p1.empty()) targets.emplace_back("max_p1=" + a.max_p1, MaxP1{parse_log10_probability(a.max_p1)});
  if (!a.max_p2.empty())
    targets.emplace_back("max_p2=" + a.max_p2 + " k=" + std::to_string(a.k),
                         MaxP2{a.k, parse_log10_probability(a.max_p2)});
  if (a.min_collisions > 0) {
    if (a.max_fail.empty()) throw ConfigError("--min-collisions needs --max-fail");
    targets.emplace_back("min_collisions k=" + std::to_string(a.min_collisions) + " max_fail=" + a.max_fail,
                         MinCollisions{a.min_collisions, parse_log10_probability(a.max_fail)});
  }
  if (targets.empty()) throw ConfigError("plan-bins: give --max-p1, --max-p2 or --min-collisions");

  std::ostringstream table;
  table << "target,m,n,log10_at_n,log10_at_n_plus_1\n";
  for (const auto& [label, t] : targets) {
    const PlanResult r = plan_bins(a.m, t);
    auto lg = [](const LogProb& p) { return p.zero ? std::string("-inf") : fmt_g(p.log10); };
    table << label << ',' << a.m << ',' << r.n << ',' << lg(r.at_n) << ',' << lg(r.at_n_plus_1) << '\n';
  }
  std::cout << table.str();
  if (!a.out_dir.empty()) {
    Outputs out(a.out_dir);
    out.open("plan.csv") << table.str();
    out.write_manifest({{"subcommand", "plan-bins"},
                        {"version", kVersion},
                        {"seed", nullptr},
                        {"config",
                         {{"m", a.m}, {"max_p1", a.max_p1}, {"max_p2", a.max_p2}, {"k", a.k},
                          {"min_collisions", a.min_collisions}, {"max_fail", a.max_fail}}},
                        {"inputs", json::array()}});
  }
  return 0;
}

// ---- synth ------------------------------------------------------------------------

struct SynthArgs {
  std::string spec_path;
  SyntheticSpec spec;
  std::uint64_t seed = 0;
  std::string out = "synthetic.txt";
};

int cmd_synth(SynthArgs a) {
  json inputs = json::array();
  if (!a.spec_path.empty()) {
    std::ifstream in(a.spec_path);
    if (!in) throw IoError("cannot open " + a.spec_path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ConfigError(a.spec_path + " is not valid JSON: " + e.what());
    }
    a.spec = synthetic_spec_from_json(j);
    inputs.push_back(input_entry(a.spec_path));
  }
  const Dataset ds = generate_synthetic(a.spec, a.seed);
  const fs::path out_path(a.out);
  Outputs out(out_path.parent_path().empty() ? fs::path(".") : out_path.parent_path());
  out.open(out_path.filename().string()) << serialize_dataset(ds);
  out.write_manifest({{"subcommand", "synth"},
                      {"version", kVersion},
                      {"seed", a.seed},
                      {"config", synthetic_spec_to_json(a.spec)},
                      {"inputs", inputs}});
  std::cout << "samples=" << ds.size() << " features=" << ds.num_raw_features << " out=" << a.out << '\n';
  return 0;
}

// ---- serve ------------------------------------------------------------------------

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  ServerConfig cfg;
  std::string hash_seed = std::string(64, '0');
  std::uint32_t iterations = 0;  // 0 runs until killed
};

int cmd_serve(ServeArgs a) {
  a.cfg.hash.seed = parse_hash_seed(a.hash_seed);
  a.cfg.validate();
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto now = [t0] { return std::chrono::duration<double>(clock::now() - t0).count(); };

  Server server(a.cfg, now());
  httplib::Server http;
  register_routes(http, server);
  if (!http.bind_to_port(a.host, a.port)) throw IoError("cannot bind " + a.host + ":" + std::to_string(a.port));
  std::thread listener([&http] { http.listen_after_bind(); });
  spdlog::info("serving experiment {} on {}:{}, iteration length {} s", a.cfg.experiment_id, a.host, a.port,
               a.cfg.iteration_seconds);

  for (std::uint32_t closed = 0; a.iterations == 0 || closed < a.iterations; ++closed) {
    const double deadline = server.descriptor().deadline;
    while (now() < deadline) std::this_thread::sleep_for(std::chrono::duration<double>(std::min(0.2, deadline - now())));
    server.close_iteration(now());
    const auto& rep = server.history().back();
    spdlog::info("closed iteration {}: {} update packages, accuracy {}", rep.iteration, rep.counts.total(),
                 fmt_opt(rep.metrics.accuracy));
  }
  http.stop();
  listener.join();
  return 0;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e)) return 2;
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const DimensionError*>(&e) ||
      dynamic_cast<const DecodeError*>(&e))
    return 3;
  return 4;
}

void add_train_flags(CLI::App* sub, TrainConfig& cfg) {
  sub->add_option("--lambda", cfg.lambda, "regularization strength");
  sub->add_option("--class-weight-pos", cfg.class_weight_pos, "weight of positive-label packages");
  sub->add_option("--class-weight-neg", cfg.class_weight_neg, "weight of negative-label packages");
  sub->add_option("--iterations", cfg.num_iterations, "number of server updates");
  sub->add_option("--avg-window", cfg.avg_window, "iterates averaged for evaluation");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SecVM: distributed linear SVM training with hashed, packetized updates"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error")->capture_default_str();

  TrainOracleArgs to;
  auto* sub_to = app.add_subcommand("train-oracle", "centralized subgradient training, the reference trajectory");
  sub_to->add_option("--dataset", to.dataset, "sparse text dataset")->required();
  sub_to->add_option("--test-dataset", to.test_dataset, "evaluate on this file instead of a random split");
  sub_to->add_flag("--all-train", to.all_train, "train and evaluate on the whole dataset");
  sub_to->add_option("--train-fraction", to.train_fraction, "train share of the random split");
  sub_to->add_option("--seed", to.seed, "split seed");
  sub_to->add_option("--bins", to.bins, "hash into this many bins (0 = unhashed)");
  sub_to->add_option("--hash-seed", to.hash_seed, "64 hex chars");
  sub_to->add_option("--out-dir", to.out_dir, "output directory")->capture_default_str();
  add_train_flags(sub_to, to.cfg);

  SimulateArgs sa;
  std::uint64_t s_seed = 0;
  double s_lambda = 0, s_cpos = 0, s_cneg = 0, s_tf = 0, s_iter_sec = 0;
  std::uint32_t s_bins = 0, s_iters = 0, s_avg = 0;
  std::string s_adv, s_hash_seed;
  auto* sub_sim = app.add_subcommand("simulate", "run the full protocol on a simulated network");
  sub_sim->add_option("--scenario", sa.scenario, "scenario JSON")->required();
  sub_sim->add_option("--out-dir", sa.out_dir, "output directory")->capture_default_str();
  auto* o_seed = sub_sim->add_option("--seed", s_seed);
  auto* o_lambda = sub_sim->add_option("--lambda", s_lambda);
  auto* o_bins = sub_sim->add_option("--bins", s_bins);
  auto* o_tf = sub_sim->add_option("--train-fraction", s_tf);
  auto* o_cpos = sub_sim->add_option("--class-weight-pos", s_cpos);
  auto* o_cneg = sub_sim->add_option("--class-weight-neg", s_cneg);
  auto* o_iters = sub_sim->add_option("--iterations", s_iters);
  auto* o_isec = sub_sim->add_option("--iteration-seconds", s_iter_sec);
  auto* o_avg = sub_sim->add_option("--avg-window", s_avg);
  auto* o_adv = sub_sim->add_option("--adversary", s_adv,
                                    "none | zero_vector | inconsistent_weights[:q] | short_deadline[:victim[:factor]]");
  auto* o_hs = sub_sim->add_option("--hash-seed", s_hash_seed, "64 hex chars");
  bool s_verify = false;
  sub_sim->add_flag("--verify", s_verify, "also run train-oracle on the same data and require identical weights");

  BoundsArgs ba;
  auto* sub_b = app.add_subcommand("bounds", "evaluate a privacy bound");
  sub_b->add_option("lemma", ba.lemma, "lemma1a | lemma1b | lemma2 | lemma3")->required();
  sub_b->add_option("--m", ba.m, "unique features");
  sub_b->add_option("--n", ba.n, "bins");
  sub_b->add_option("--k", ba.k, "k of lemma1b / lemma2");
  sub_b->add_option("--M", ba.M, "participating users");
  sub_b->add_option("--F", ba.F, "l1 norm of an update");
  sub_b->add_option("--d", ba.d, "update dimension");
  sub_b->add_option("--K", ba.K, "training iterations");
  sub_b->add_flag("--verify", ba.verify, "compare with an exact or sampled oracle");
  sub_b->add_option("--trials", ba.trials, "monte carlo trials when no exact oracle fits");
  sub_b->add_option("--seed", ba.seed, "monte carlo seed");
  sub_b->add_option("--out-dir", ba.out_dir, "also write bounds.csv and a manifest here");

  PlanArgs pa;
  auto* sub_p = app.add_subcommand("plan-bins", "largest bin count meeting a privacy target");
  sub_p->add_option("--m", pa.m, "unique features")->required();
  sub_p->add_option("--max-p1", pa.max_p1, "ceiling on P(some feature alone), e.g. 1e-400");
  sub_p->add_option("--max-p2", pa.max_p2, "ceiling on P(one of k features alone)");
  sub_p->add_option("--k", pa.k, "k for --max-p2");
  sub_p->add_option("--min-collisions", pa.min_collisions, "every feature shares its bin with >= k-1 others");
  sub_p->add_option("--max-fail", pa.max_fail, "allowed failure probability for --min-collisions");
  sub_p->add_option("--out-dir", pa.out_dir, "also write plan.csv and a manifest here");

  SynthArgs sy;
  auto* sub_sy = app.add_subcommand("synth", "write a seeded synthetic dataset");
  sub_sy->add_option("--spec", sy.spec_path, "JSON generator spec (overrides the flags)");
  sub_sy->add_option("--samples", sy.spec.num_samples);
  sub_sy->add_option("--features", sy.spec.num_features);
  sub_sy->add_option("--positive-fraction", sy.spec.positive_fraction);
  sub_sy->add_option("--mean-tokens", sy.spec.mean_tokens);
  sub_sy->add_option("--seed", sy.seed);
  sub_sy->add_option("--out", sy.out)->capture_default_str();

  ServeArgs sv;
  auto* sub_sv = app.add_subcommand("serve", "run a server behind HTTP on the wall clock");
  sub_sv->add_option("--host", sv.host)->capture_default_str();
  sub_sv->add_option("--port", sv.port)->capture_default_str();
  sub_sv->add_option("--bins", sv.cfg.hash.num_bins)->required();
  sub_sv->add_option("--hash-seed", sv.hash_seed, "64 hex chars");
  sub_sv->add_option("--participants", sv.cfg.train.participant_estimate, "N-hat used in every update")->required();
  sub_sv->add_option("--train-fraction", sv.cfg.train_fraction);
  sub_sv->add_option("--iteration-seconds", sv.cfg.iteration_seconds);
  sub_sv->add_option("--experiment-id", sv.cfg.experiment_id);
  sub_sv->add_option("--stop-after", sv.iterations, "close this many iterations, then exit (0 = never)");
  add_train_flags(sub_sv, sv.cfg.train);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    spdlog::set_level(spdlog::level::from_str(log_level));
    if (sub_to->parsed()) return cmd_train_oracle(to);
    if (sub_sim->parsed()) {
      if (o_seed->count()) sa.overrides["seed"] = s_seed;
      if (o_lambda->count()) sa.overrides["lambda"] = s_lambda;
      if (o_bins->count()) sa.overrides["bins"] = s_bins;
      if (o_tf->count()) sa.overrides["train_fraction"] = s_tf;
      if (o_cpos->count()) sa.overrides["class_weight_pos"] = s_cpos;
      if (o_cneg->count()) sa.overrides["class_weight_neg"] = s_cneg;
      if (o_iters->count()) sa.overrides["iterations"] = s_iters;
      if (o_isec->count()) sa.overrides["iteration_seconds"] = s_iter_sec;
      if (o_avg->count()) sa.overrides["avg_window"] = s_avg;
      if (o_adv->count()) sa.overrides["adversary"] = parse_adversary_flag(s_adv);
      if (o_hs->count()) sa.overrides["hash_seed"] = s_hash_seed;
      sa.verify = s_verify;
      return cmd_simulate(sa);
    }
    if (sub_b->parsed()) return cmd_bounds(ba);
    if (sub_p->parsed()) return cmd_plan_bins(pa);
    if (sub_sy->parsed()) return cmd_synth(sy);
    if (sub_sv->parsed()) return cmd_serve(sv);
  } catch (const std::exception& e) {
    std::cerr << "secvm: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return 2;
}
