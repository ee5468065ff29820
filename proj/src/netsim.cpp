#include "secvm/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <queue>

namespace secvm {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

double online_probability(const ChurnModel& model, Label label, double time) {
  return std::visit(
      Overloaded{
          [](const ConstantChurn& c) { return c.online_probability; },
          [&](const DayNightChurn& c) {
            const bool pos = label == Label::Positive;
            const double day = pos ? c.pos_day : c.neg_day;
            const double night = pos ? c.pos_night : c.neg_night;
            const double phase = 2.0 * std::numbers::pi * (time - c.phase_seconds) / c.period_seconds;
            return night + (day - night) * 0.5 * (1.0 + std::cos(phase));
          },
      },
      model);
}

double mean_online_probability(const ChurnModel& model, Label label) {
  return std::visit(Overloaded{
                        [](const ConstantChurn& c) { return c.online_probability; },
                        [&](const DayNightChurn& c) {
                          return label == Label::Positive ? 0.5 * (c.pos_day + c.pos_night)
                                                          : 0.5 * (c.neg_day + c.neg_night);
                        },
                    },
                    model);
}

bool churn_online(const ChurnModel& model, Label label, double time, Rng& rng) {
  const double p = online_probability(model, label, time);
  if (p >= 1.0) return true;
  if (p <= 0.0) return false;
  return rng.bernoulli(p);
}

std::vector<Delivery> proxy_deliver(std::vector<Envelope> messages, Rng& rng) {
  struct Keyed {
    double time;
    std::uint64_t key;
    std::size_t pos;
  };
  std::vector<Keyed> order;
  order.reserve(messages.size());
  for (std::size_t i = 0; i < messages.size(); ++i) order.push_back({messages[i].send_time, rng.next(), i});
  std::sort(order.begin(), order.end(), [](const Keyed& a, const Keyed& b) {
    return a.time != b.time ? a.time < b.time : a.key < b.key;
  });
  std::vector<Delivery> out;
  out.reserve(messages.size());
  for (const auto& k : order) out.push_back({k.time, std::move(messages[k.pos].message)});
  return out;
}

const char* to_string(EventKind kind) noexcept {
  switch (kind) {
    case EventKind::Publish: return "publish";
    case EventKind::Fetch: return "fetch";
    case EventKind::DigestRequest: return "digest_request";
    case EventKind::Detection: return "detection";
    case EventKind::Schedule: return "schedule";
    case EventKind::Send: return "send";
    case EventKind::Deliver: return "deliver";
    case EventKind::Close: return "close";
  }
  return "unknown";
}

bool EventLog::time_ordered() const noexcept {
  return std::is_sorted(events.begin(), events.end(), [](const Event& a, const Event& b) { return a.time < b.time; });
}

void EventLog::write_csv(std::ostream& out) const {
  out << "time,kind,iteration,client,value\n" << std::setprecision(17);
  for (const auto& e : events) {
    out << e.time << ',' << to_string(e.kind) << ',' << e.iteration << ',';
    if (e.client >= 0) out << e.client;
    out << ',' << e.value << '\n';
  }
}

void Scenario::validate() const {
  train.validate();
  hash.validate();
  if (dataset.empty()) throw ConfigError("scenario.dataset: no clients");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("scenario.train_fraction must lie in (0,1)");
  if (!(iteration_seconds > 0.0)) throw ConfigError("scenario.iteration_seconds must be > 0");
  if (train.num_iterations < 1) throw ConfigError("scenario.iterations must be >= 1");
  if (verification_requests < 1) throw ConfigError("scenario.verification_requests must be >= 1");
  if (!(fetch_window_fraction > 0.0 && fetch_window_fraction < 0.5))
    throw ConfigError("scenario.fetch_window_fraction must lie in (0,0.5)");
  if (participant_estimate && !(*participant_estimate > 0.0))
    throw ConfigError("scenario.participant_estimate must be > 0");
  std::visit(Overloaded{
                 [](const NoAdversary&) {},
                 [](const ZeroVector&) {},
                 [](const InconsistentWeights& a) {
                   if (!(a.q > 0.0 && a.q < 1.0)) throw ConfigError("scenario.adversary.q must lie in (0,1)");
                 },
                 [&](const ShortDeadline& a) {
                   if (a.victim >= dataset.size()) throw ConfigError("scenario.adversary.victim is not a client");
                   if (!(a.factor > 0.0 && a.factor < 1.0))
                     throw ConfigError("scenario.adversary.factor must lie in (0,1)");
                 },
             },
             adversary);
  std::visit(Overloaded{
                 [](const ConstantChurn& c) {
                   if (!(c.online_probability >= 0.0 && c.online_probability <= 1.0))
                     throw ConfigError("scenario.churn.online_probability must lie in [0,1]");
                 },
                 [](const DayNightChurn& c) {
                   if (!(c.period_seconds > 0.0)) throw ConfigError("scenario.churn.period_seconds must be > 0");
                   for (double p : {c.pos_day, c.pos_night, c.neg_day, c.neg_night})
                     if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("scenario.churn probabilities must lie in [0,1]");
                 },
             },
             churn);
}

namespace {

// What each request of the current iteration can be answered with.
class Frontend {
 public:
  Frontend(const AdversaryMode& mode, const ExperimentDescriptor& honest, double publish_time,
           double iteration_seconds)
      : mode_(mode) {
    std::visit(Overloaded{
                   [&](const NoAdversary&) { versions_.push_back(honest); },
                   [&](const InconsistentWeights&) {
                     versions_.push_back(honest);
                     ExperimentDescriptor b = honest;
                     b.weights[0] += 1.0;
                     b.averaged_weights[0] += 1.0;
                     versions_.push_back(std::move(b));
                   },
                   [&](const ShortDeadline& a) {
                     versions_.push_back(honest);
                     ExperimentDescriptor s = honest;
                     s.deadline = publish_time + a.factor * iteration_seconds;
                     versions_.push_back(std::move(s));
                   },
                   [&](const ZeroVector&) {
                     ExperimentDescriptor z = honest;
                     std::fill(z.weights.begin(), z.weights.end(), 0.0);
                     std::fill(z.averaged_weights.begin(), z.averaged_weights.end(), 0.0);
                     versions_.push_back(std::move(z));
                   },
               },
               mode_);
    for (const auto& v : versions_) digests_.push_back(descriptor_digest(v));
  }

  std::size_t answer_fetch(std::uint64_t client, Rng& rng) const {
    return std::visit(Overloaded{
                          [](const NoAdversary&) -> std::size_t { return 0; },
                          [](const ZeroVector&) -> std::size_t { return 0; },
                          [&](const InconsistentWeights& a) -> std::size_t { return rng.bernoulli(a.q) ? 0 : 1; },
                          [&](const ShortDeadline& a) -> std::size_t { return client == a.victim ? 1 : 0; },
                      },
                      mode_);
  }

  std::size_t answer_digest(Rng& rng) const {
    if (const auto* a = std::get_if<InconsistentWeights>(&mode_)) return rng.bernoulli(a->q) ? 0 : 1;
    return 0;
  }

  const ExperimentDescriptor& version(std::size_t i) const { return versions_[i]; }
  const Digest& digest(std::size_t i) const { return digests_[i]; }

 private:
  const AdversaryMode& mode_;
  std::vector<ExperimentDescriptor> versions_;
  std::vector<Digest> digests_;
};

enum class Kind : std::uint8_t { Fetch, DigestRequest, Deliver, Close };

struct SimEvent {
  double time;
  std::uint64_t key;  // proxy tie-break for deliveries, 0 otherwise
  std::uint64_t seq;
  Kind kind;
  std::uint32_t index;  // client id, or message slot for deliveries

  bool operator>(const SimEvent& o) const {
    if (time != o.time) return time > o.time;
    if (key != o.key) return key > o.key;
    return seq > o.seq;
  }
};

struct ClientRound {
  std::size_t version = 0;
  std::vector<Digest> digests;
  std::uint32_t pending = 0;
};

}  // namespace

SimResult run_experiment(const Scenario& sc) {
  sc.validate();
  const std::size_t num_clients = sc.dataset.size();

  std::vector<Client> clients;
  clients.reserve(num_clients);
  for (std::size_t i = 0; i < num_clients; ++i)
    clients.emplace_back(i, sc.dataset.samples[i], derive_seed(sc.seed, "client", i));

  SimResult result;

  // Roles are settled on first contact with the experiment, before the first
  // iteration opens.
  ExperimentDescriptor first_contact;
  first_contact.experiment_id = sc.experiment_id;
  first_contact.train_fraction = sc.train_fraction;
  for (auto& c : clients) {
    Role r;
    if (sc.all_train) {
      c.pin_role(sc.experiment_id, Role::Train);
      r = Role::Train;
    } else {
      r = c.assign_role(first_contact);
    }
    ++(r == Role::Train ? result.train_clients : result.test_clients);
  }

  ServerConfig scfg;
  scfg.experiment_id = sc.experiment_id;
  scfg.train = sc.train;
  scfg.train.participant_estimate =
      sc.participant_estimate.value_or(static_cast<double>(std::max<std::uint64_t>(1, result.train_clients)));
  scfg.hash = sc.hash;
  scfg.train_fraction = sc.train_fraction;
  scfg.iteration_seconds = sc.iteration_seconds;
  Server server(scfg, 0.0);

  Rng churn_rng(derive_seed(sc.seed, "churn"));
  Rng adversary_rng(derive_seed(sc.seed, "adversary"));
  Rng proxy_rng(derive_seed(sc.seed, "proxy"));

  const bool log_clients = sc.log_detail != LogDetail::Iterations;
  const bool log_messages = sc.log_detail == LogDetail::Messages;
  auto log = [&](double t, EventKind k, std::uint32_t it, std::int64_t client, std::uint64_t value) {
    result.log.events.push_back({t, k, it, client, value});
  };

  std::priority_queue<SimEvent, std::vector<SimEvent>, std::greater<>> queue;
  std::uint64_t seq = 0;
  std::vector<ClientRound> rounds(num_clients);
  std::vector<Message> slots;
  std::vector<std::uint32_t> slot_sender;

  const double fetch_window = sc.fetch_window_fraction * sc.iteration_seconds;

  for (std::uint32_t k = 1; k <= sc.train.num_iterations; ++k) {
    const ExperimentDescriptor honest = server.descriptor();
    const double t0 = honest.deadline - sc.iteration_seconds;
    const Frontend frontend(sc.adversary, honest, t0, sc.iteration_seconds);
    SimIteration rec;
    rec.iteration = honest.iteration;
    log(t0, EventKind::Publish, rec.iteration, -1, 0);

    slots.clear();
    slot_sender.clear();
    for (std::uint32_t c = 0; c < num_clients; ++c) {
      if (!churn_online(sc.churn, clients[c].sample().label, t0, churn_rng)) continue;
      ++(clients[c].role(sc.experiment_id) == Role::Train ? rec.online_train : rec.online_test);
      queue.push({t0 + clients[c].rng().uniform(0.0, fetch_window), 0, seq++, Kind::Fetch, c});
    }
    queue.push({honest.deadline, 0, seq++, Kind::Close, 0});

    auto decide = [&](std::uint32_t c, double now) {
      ClientRound& round = rounds[c];
      const auto reference = frontend.digest(round.version);
      ++rec.verified;
      if (!round.digests.empty() && verify_consistency(round.digests, reference) == Consistency::AttackSuspected) {
        ++rec.detections;
        log(now, EventKind::Detection, rec.iteration, c, 0);
        return;
      }
      auto out = clients[c].produce_round(frontend.version(round.version), now);
      std::uint64_t sent = 0;
      auto submit = [&](double t, Message m) {
        slots.push_back(std::move(m));
        slot_sender.push_back(c);
        queue.push({t, proxy_rng.next(), seq++, Kind::Deliver, static_cast<std::uint32_t>(slots.size() - 1)});
        ++sent;
      };
      if (auto* ups = std::get_if<std::vector<Timed<UpdatePackage>>>(&out))
        for (auto& u : *ups) submit(u.time, u.message);
      else if (auto* tp = std::get_if<Timed<TestPackage>>(&out))
        submit(tp->time, tp->message);
      if (log_clients) log(now, EventKind::Schedule, rec.iteration, c, sent);
    };

    while (!queue.empty()) {
      const SimEvent ev = queue.top();
      queue.pop();
      if (ev.kind == Kind::Close) break;
      switch (ev.kind) {
        case Kind::Fetch: {
          ClientRound& round = rounds[ev.index];
          round.version = frontend.answer_fetch(ev.index, adversary_rng);
          round.digests.clear();
          round.pending = sc.verification_requests - 1;
          if (log_clients) log(ev.time, EventKind::Fetch, rec.iteration, ev.index, round.version);
          if (round.pending == 0) {
            decide(ev.index, ev.time);
          } else {
            for (std::uint32_t r = 0; r < round.pending; ++r)
              queue.push({ev.time + clients[ev.index].rng().uniform(0.0, fetch_window), 0, seq++,
                          Kind::DigestRequest, ev.index});
          }
          break;
        }
        case Kind::DigestRequest: {
          ClientRound& round = rounds[ev.index];
          round.digests.push_back(frontend.digest(frontend.answer_digest(adversary_rng)));
          if (log_messages) log(ev.time, EventKind::DigestRequest, rec.iteration, ev.index, 0);
          if (--round.pending == 0) decide(ev.index, ev.time);
          break;
        }
        case Kind::Deliver: {
          const Message& m = slots[ev.index];
          if (log_messages) log(ev.time, EventKind::Send, rec.iteration, slot_sender[ev.index], 1);
          IngestResult res;
          if (const auto* u = std::get_if<UpdatePackage>(&m)) {
            res = server.ingest_update(*u);
            if (res == IngestResult::Accepted) ++rec.update_packages;
          } else {
            res = server.ingest_test(std::get<TestPackage>(m));
            if (res == IngestResult::Accepted) ++rec.test_packages;
          }
          if (log_messages) log(ev.time, EventKind::Deliver, rec.iteration, -1, res == IngestResult::Accepted);
          break;
        }
        case Kind::Close:
          break;
      }
    }

    if (!queue.empty()) throw InvariantError("simulator events scheduled past the iteration deadline");
    server.close_iteration(honest.deadline);
    const IterationReport& report = server.history().back();
    rec.metrics = report.metrics;
    rec.stale = report.stale;
    rec.rejected = report.rejected;
    if (sc.record_counts) rec.counts = report.counts;
    if (sc.record_weights) rec.weights = server.model().w;
    log(honest.deadline, EventKind::Close, rec.iteration, -1, report.counts.total());
    result.detection.verified += rec.verified;
    result.detection.detections += rec.detections;
    result.iterations.push_back(std::move(rec));
  }
  result.final_model = server.model();
  return result;
}

namespace {

void put_opt(std::ostream& out, const std::optional<double>& v) {
  out << ',';
  if (v) out << *v;
}

}  // namespace

void write_simulation_csv(std::ostream& out, const SimResult& result) {
  out << "iteration,online_train,online_test,verified,detections,update_packages,test_packages,stale,rejected,"
         "accuracy,recall_pos,recall_neg,precision_pos,precision_neg,share_pos,share_neg\n"
      << std::setprecision(10);
  for (const auto& r : result.iterations) {
    out << r.iteration << ',' << r.online_train << ',' << r.online_test << ',' << r.verified << ','
        << r.detections << ',' << r.update_packages << ',' << r.test_packages << ',' << r.stale << ','
        << r.rejected;
    put_opt(out, r.metrics.accuracy);
    put_opt(out, r.metrics.recall_pos);
    put_opt(out, r.metrics.recall_neg);
    put_opt(out, r.metrics.precision_pos);
    put_opt(out, r.metrics.precision_neg);
    put_opt(out, r.metrics.share_pos());
    put_opt(out, r.metrics.share_neg());
    out << '\n';
  }
}

}  // namespace secvm
