#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <variant>
#include <vector>

#include "secvm/client.hpp"
#include "secvm/protocol.hpp"
#include "secvm/server.hpp"
#include "secvm/svm.hpp"

namespace secvm {

// ---- churn ---------------------------------------------------------------

struct ConstantChurn {
  double online_probability = 1.0;
};

// Online probability moves on a cosine between a day and a night level,
// per class. time = phase is the middle of the day; half a period later is
// the middle of the night.
struct DayNightChurn {
  double period_seconds = 86400.0;
  double phase_seconds = 0.0;
  double pos_day = 0.9;
  double pos_night = 0.45;
  double neg_day = 0.9;
  double neg_night = 0.9;
};

using ChurnModel = std::variant<ConstantChurn, DayNightChurn>;

double online_probability(const ChurnModel& model, Label label, double time);
// Time-average of online_probability.
double mean_online_probability(const ChurnModel& model, Label label);
bool churn_online(const ChurnModel& model, Label label, double time, Rng& rng);

// ---- adversary -----------------------------------------------------------

struct NoAdversary {};

// Every descriptor or digest request is answered with the honest version
// with probability q and with a version whose first weight is shifted by one
// otherwise, independently per request.
struct InconsistentWeights {
  double q = 0.5;
};

// The victim's descriptor fetch returns a deadline shortened to
// factor * iteration length; anonymous digest requests get the honest digest.
struct ShortDeadline {
  std::uint64_t victim = 0;
  double factor = 0.1;
};

// Everyone is served w = 0, consistently.
struct ZeroVector {};

using AdversaryMode = std::variant<NoAdversary, InconsistentWeights, ShortDeadline, ZeroVector>;

// ---- proxy ---------------------------------------------------------------

using Message = std::variant<UpdatePackage, TestPackage>;

struct Envelope {
  double send_time = 0.0;
  std::uint64_t sender = 0;
  Message message;
};

// What the server sees: arrival time and payload, nothing about the sender.
struct Delivery {
  double time = 0.0;
  Message message;
};

// Lossless, latency-free anonymizing relay: delivers in send-time order and
// breaks ties with a seeded shuffle.
std::vector<Delivery> proxy_deliver(std::vector<Envelope> messages, Rng& rng);

// ---- event log -----------------------------------------------------------

enum class EventKind { Publish, Fetch, DigestRequest, Detection, Schedule, Send, Deliver, Close };

const char* to_string(EventKind kind) noexcept;

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::Publish;
  std::uint32_t iteration = 0;
  std::int64_t client = -1;  // -1 when not tied to a client
  std::uint64_t value = 0;   // kind-specific count
};

enum class LogDetail { Iterations, Clients, Messages };

struct EventLog {
  std::vector<Event> events;

  bool time_ordered() const noexcept;
  void write_csv(std::ostream& out) const;
};

// ---- scenario ------------------------------------------------------------

struct Scenario {
  Dataset dataset;  // one sample per client
  TrainConfig train;
  HashConfig hash;
  double train_fraction = 0.7;
  bool all_train = false;
  double iteration_seconds = 660.0;
  ChurnModel churn = ConstantChurn{};
  AdversaryMode adversary = NoAdversary{};
  std::uint32_t verification_requests = 3;  // responses compared, the descriptor fetch included
  std::optional<double> participant_estimate;  // defaults to the exact train count
  std::uint32_t experiment_id = 1;
  std::uint64_t seed = 0;
  double fetch_window_fraction = 0.05;
  LogDetail log_detail = LogDetail::Clients;
  bool record_weights = true;
  bool record_counts = false;

  void validate() const;
};

struct SimIteration {
  std::uint32_t iteration = 0;
  Metrics metrics;  // from test packages, for the model published this iteration
  std::uint64_t online_train = 0;
  std::uint64_t online_test = 0;
  std::uint64_t verified = 0;
  std::uint64_t detections = 0;
  std::uint64_t update_packages = 0;
  std::uint64_t test_packages = 0;
  std::uint64_t stale = 0;
  std::uint64_t rejected = 0;
  std::vector<double> weights;  // after the close; empty unless record_weights
  std::optional<AggregateCounts> counts;
};

struct DetectionReport {
  std::uint64_t verified = 0;
  std::uint64_t detections = 0;
  double rate() const { return verified ? static_cast<double>(detections) / static_cast<double>(verified) : 0.0; }
};

struct SimResult {
  std::vector<SimIteration> iterations;
  EventLog log;
  ModelState final_model;
  std::uint64_t train_clients = 0;
  std::uint64_t test_clients = 0;
  DetectionReport detection;
};

// Discrete-event run of the whole protocol over a virtual clock. Deterministic
// for a fixed scenario (seed included).
SimResult run_experiment(const Scenario& scenario);

// iteration,online_train,online_test,verified,detections,update_packages,
// test_packages,stale,rejected,accuracy,recall_pos,recall_neg,precision_pos,
// precision_neg,share_pos,share_neg
void write_simulation_csv(std::ostream& out, const SimResult& result);

}  // namespace secvm
