#include "secvm/scenario.hpp"

#include <fstream>
#include <set>

#include "secvm/synthetic.hpp"

namespace secvm {

namespace {

using nlohmann::json;

template <class T>
T get_field(const json& j, const std::string& prefix, const char* name, T fallback) {
  if (!j.contains(name) || j.at(name).is_null()) return fallback;
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(prefix + name + ": wrong type");
  }
}

void reject_unknown(const json& j, const std::string& prefix, const std::set<std::string>& known) {
  if (!j.is_object()) throw ConfigError((prefix.empty() ? std::string("scenario") : prefix) + ": expected an object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError(prefix + key + ": unknown field");
}

ChurnModel parse_churn(const json& j) {
  const std::string mode = get_field<std::string>(j, "churn.", "mode", "constant");
  if (mode == "constant") {
    reject_unknown(j, "churn.", {"mode", "online_probability"});
    return ConstantChurn{get_field(j, "churn.", "online_probability", 1.0)};
  }
  if (mode == "day_night") {
    reject_unknown(j, "churn.", {"mode", "period_seconds", "phase_seconds", "pos_day", "pos_night", "neg_day", "neg_night"});
    DayNightChurn c;
    c.period_seconds = get_field(j, "churn.", "period_seconds", c.period_seconds);
    c.phase_seconds = get_field(j, "churn.", "phase_seconds", c.phase_seconds);
    c.pos_day = get_field(j, "churn.", "pos_day", c.pos_day);
    c.pos_night = get_field(j, "churn.", "pos_night", c.pos_night);
    c.neg_day = get_field(j, "churn.", "neg_day", c.neg_day);
    c.neg_night = get_field(j, "churn.", "neg_night", c.neg_night);
    return c;
  }
  throw ConfigError("churn.mode: expected constant or day_night, got " + mode);
}

json churn_to_json(const ChurnModel& m) {
  if (const auto* c = std::get_if<ConstantChurn>(&m)) return {{"mode", "constant"}, {"online_probability", c->online_probability}};
  const auto& d = std::get<DayNightChurn>(m);
  return {{"mode", "day_night"}, {"period_seconds", d.period_seconds}, {"phase_seconds", d.phase_seconds},
          {"pos_day", d.pos_day}, {"pos_night", d.pos_night}, {"neg_day", d.neg_day}, {"neg_night", d.neg_night}};
}

AdversaryMode parse_adversary(const json& j) {
  const std::string mode = get_field<std::string>(j, "adversary.", "mode", "none");
  if (mode == "none") {
    reject_unknown(j, "adversary.", {"mode"});
    return NoAdversary{};
  }
  if (mode == "inconsistent_weights") {
    reject_unknown(j, "adversary.", {"mode", "q"});
    return InconsistentWeights{get_field(j, "adversary.", "q", 0.5)};
  }
  if (mode == "short_deadline") {
    reject_unknown(j, "adversary.", {"mode", "victim", "factor"});
    return ShortDeadline{get_field<std::uint64_t>(j, "adversary.", "victim", 0), get_field(j, "adversary.", "factor", 0.1)};
  }
  if (mode == "zero_vector") {
    reject_unknown(j, "adversary.", {"mode"});
    return ZeroVector{};
  }
  throw ConfigError("adversary.mode: expected none, inconsistent_weights, short_deadline or zero_vector, got " + mode);
}

json adversary_to_json(const AdversaryMode& m) {
  if (std::holds_alternative<NoAdversary>(m)) return {{"mode", "none"}};
  if (std::holds_alternative<ZeroVector>(m)) return {{"mode", "zero_vector"}};
  if (const auto* a = std::get_if<InconsistentWeights>(&m)) return {{"mode", "inconsistent_weights"}, {"q", a->q}};
  const auto& s = std::get<ShortDeadline>(m);
  return {{"mode", "short_deadline"}, {"victim", s.victim}, {"factor", s.factor}};
}

LogDetail parse_detail(const std::string& s) {
  if (s == "iterations") return LogDetail::Iterations;
  if (s == "clients") return LogDetail::Clients;
  if (s == "messages") return LogDetail::Messages;
  throw ConfigError("log_detail: expected iterations, clients or messages, got " + s);
}

const char* detail_name(LogDetail d) {
  switch (d) {
    case LogDetail::Iterations: return "iterations";
    case LogDetail::Clients: return "clients";
    case LogDetail::Messages: return "messages";
  }
  return "clients";
}

}  // namespace

LoadedScenario scenario_from_json(const json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j, "", {"seed", "experiment_id", "dataset", "lambda", "class_weight_pos", "class_weight_neg",
                         "iterations", "avg_window", "participant_estimate", "bins", "hash_seed", "train_fraction",
                         "all_train", "iteration_seconds", "verification_requests", "fetch_window_fraction",
                         "churn", "adversary", "log_detail", "record_counts", "record_weights"});
  LoadedScenario out;
  Scenario& s = out.scenario;
  s.seed = get_field<std::uint64_t>(j, "", "seed", 0);
  s.experiment_id = get_field<std::uint32_t>(j, "", "experiment_id", 1);

  if (!j.contains("dataset")) throw ConfigError("dataset: missing");
  const json& dj = j.at("dataset");
  json dataset_resolved;
  if (dj.is_object() && dj.contains("path")) {
    reject_unknown(dj, "dataset.", {"path"});
    std::filesystem::path p = get_field<std::string>(dj, "dataset.", "path", "");
    if (p.is_relative()) p = base_dir / p;
    s.dataset = load_dataset(p);
    out.inputs.push_back(p);
    dataset_resolved = {{"path", p.string()}};
  } else if (dj.is_object() && dj.contains("synthetic")) {
    reject_unknown(dj, "dataset.", {"synthetic", "seed"});
    const SyntheticSpec spec = synthetic_spec_from_json(dj.at("synthetic"));
    const auto dseed = get_field<std::uint64_t>(dj, "dataset.", "seed", s.seed);
    s.dataset = generate_synthetic(spec, dseed);
    dataset_resolved = {{"synthetic", synthetic_spec_to_json(spec)}, {"seed", dseed}};
  } else {
    throw ConfigError("dataset: expected {\"path\": ...} or {\"synthetic\": {...}}");
  }

  const TrainConfig def;
  s.train.lambda = get_field(j, "", "lambda", def.lambda);
  s.train.class_weight_pos = get_field(j, "", "class_weight_pos", 1.0);
  s.train.class_weight_neg = get_field(j, "", "class_weight_neg", 1.0);
  s.train.num_iterations = get_field<std::uint32_t>(j, "", "iterations", def.num_iterations);
  s.train.avg_window = get_field<std::uint32_t>(j, "", "avg_window", def.avg_window);
  if (j.contains("participant_estimate") && !j.at("participant_estimate").is_null())
    s.participant_estimate = get_field(j, "", "participant_estimate", 1.0);
  s.hash.num_bins = get_field<std::uint32_t>(j, "", "bins", 1000);
  s.hash.seed = parse_hash_seed(get_field<std::string>(j, "", "hash_seed", std::string(64, '0')));
  s.train_fraction = get_field(j, "", "train_fraction", 0.7);
  s.all_train = get_field(j, "", "all_train", false);
  s.iteration_seconds = get_field(j, "", "iteration_seconds", 660.0);
  s.verification_requests = get_field<std::uint32_t>(j, "", "verification_requests", 3);
  s.fetch_window_fraction = get_field(j, "", "fetch_window_fraction", 0.05);
  s.churn = j.contains("churn") ? parse_churn(j.at("churn")) : ChurnModel{ConstantChurn{}};
  s.adversary = j.contains("adversary") ? parse_adversary(j.at("adversary")) : AdversaryMode{NoAdversary{}};
  s.log_detail = parse_detail(get_field<std::string>(j, "", "log_detail", "clients"));
  s.record_counts = get_field(j, "", "record_counts", false);
  s.record_weights = get_field(j, "", "record_weights", true);
  s.validate();

  out.resolved = {
      {"seed", s.seed},
      {"experiment_id", s.experiment_id},
      {"dataset", dataset_resolved},
      {"lambda", s.train.lambda},
      {"class_weight_pos", s.train.class_weight_pos},
      {"class_weight_neg", s.train.class_weight_neg},
      {"iterations", s.train.num_iterations},
      {"avg_window", s.train.avg_window},
      {"participant_estimate", s.participant_estimate ? json(*s.participant_estimate) : json(nullptr)},
      {"bins", s.hash.num_bins},
      {"hash_seed", hash_seed_to_hex(s.hash.seed)},
      {"train_fraction", s.train_fraction},
      {"all_train", s.all_train},
      {"iteration_seconds", s.iteration_seconds},
      {"verification_requests", s.verification_requests},
      {"fetch_window_fraction", s.fetch_window_fraction},
      {"churn", churn_to_json(s.churn)},
      {"adversary", adversary_to_json(s.adversary)},
      {"log_detail", detail_name(s.log_detail)},
      {"record_counts", s.record_counts},
      {"record_weights", s.record_weights},
  };
  return out;
}

LoadedScenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("scenario " + path.string() + " is not valid JSON: " + e.what());
  }
  return scenario_from_json(j, path.parent_path());
}

}  // namespace secvm
