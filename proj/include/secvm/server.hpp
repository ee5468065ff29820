#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <vector>

#include "secvm/protocol.hpp"
#include "secvm/svm.hpp"

namespace secvm {

struct ServerConfig {
  std::uint32_t experiment_id = 1;
  TrainConfig train;  // participant_estimate is the N-hat used by every update
  HashConfig hash;
  double train_fraction = 0.7;
  double iteration_seconds = 660.0;

  void validate() const;
};

enum class IngestResult { Accepted, Stale, Rejected };

// What the server saw during one closed iteration. Metrics describe the model
// that was published for that iteration (the one test clients evaluated).
struct IterationReport {
  std::uint32_t iteration = 0;
  AggregateCounts counts;
  Metrics metrics;
  std::uint64_t stale = 0;
  std::uint64_t rejected = 0;
  double closed_at = 0.0;
};

// The (possibly malicious) training server. Ingestion may be called from any
// number of threads; close_iteration takes the state exclusively.
class Server {
 public:
  Server(ServerConfig config, double start_time);

  ExperimentDescriptor descriptor() const;
  Digest digest() const;
  const ServerConfig& config() const noexcept { return config_; }

  IngestResult ingest_update(const UpdatePackage& pkg);
  IngestResult ingest_test(const TestPackage& pkg);

  // Applies the Pegasos step with the accumulated counts, resets counters and
  // publishes iteration t+1 with deadline now + iteration_seconds. Throws
  // ProtocolError before the current deadline.
  ExperimentDescriptor close_iteration(double now);

  ModelState model() const;
  const std::vector<IterationReport>& history() const noexcept { return history_; }

  std::uint64_t stale_total() const noexcept { return stale_total_.load(); }
  std::uint64_t rejected_total() const noexcept { return rejected_total_.load(); }

 private:
  void publish(double now);

  ServerConfig config_;
  mutable std::shared_mutex mutex_;
  ModelState model_;
  IterateAverager averager_;
  ExperimentDescriptor descriptor_;
  Digest digest_{};
  std::vector<std::atomic<std::uint64_t>> pos_;
  std::vector<std::atomic<std::uint64_t>> neg_;
  std::array<std::atomic<std::uint64_t>, 4> cells_{};
  std::atomic<std::uint64_t> stale_{0};
  std::atomic<std::uint64_t> rejected_{0};
  std::atomic<std::uint64_t> stale_total_{0};
  std::atomic<std::uint64_t> rejected_total_{0};
  std::vector<IterationReport> history_;
};

}  // namespace secvm
