#include "secvm/server.hpp"

#include <mutex>

#include <spdlog/spdlog.h>

namespace secvm {

void ServerConfig::validate() const {
  train.validate();
  hash.validate();
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0,1)");
  if (!(iteration_seconds > 0.0)) throw ConfigError("iteration_seconds must be > 0");
}

Server::Server(ServerConfig config, double start_time)
    : config_(std::move(config)),
      model_(ModelState::zeros(config_.hash.num_bins)),
      averager_(config_.train.avg_window),
      pos_(config_.hash.num_bins),
      neg_(config_.hash.num_bins) {
  config_.validate();
  averager_.push(model_.w);
  publish(start_time);
}

void Server::publish(double now) {
  ExperimentDescriptor d;
  d.experiment_id = config_.experiment_id;
  d.iteration = model_.t;
  d.num_bins = config_.hash.num_bins;
  d.hash_seed = config_.hash.seed;
  d.lambda = config_.train.lambda;
  d.train_fraction = config_.train_fraction;
  d.class_weight_pos = config_.train.class_weight_pos;
  d.class_weight_neg = config_.train.class_weight_neg;
  d.deadline = now + config_.iteration_seconds;
  d.weights = model_.w;
  d.averaged_weights = averager_.average();
  descriptor_ = std::move(d);
  digest_ = descriptor_digest(descriptor_);
}

ExperimentDescriptor Server::descriptor() const {
  std::shared_lock lock(mutex_);
  return descriptor_;
}

Digest Server::digest() const {
  std::shared_lock lock(mutex_);
  return digest_;
}

ModelState Server::model() const {
  std::shared_lock lock(mutex_);
  return model_;
}

IngestResult Server::ingest_update(const UpdatePackage& pkg) {
  std::shared_lock lock(mutex_);
  if (pkg.experiment_id != descriptor_.experiment_id || pkg.iteration != descriptor_.iteration) {
    stale_.fetch_add(1, std::memory_order_relaxed);
    return IngestResult::Stale;
  }
  if (pkg.feature_index >= pos_.size() || (pkg.sign != 1 && pkg.sign != -1)) {
    spdlog::warn("rejected update package: feature index {} for {} bins", pkg.feature_index, pos_.size());
    rejected_.fetch_add(1, std::memory_order_relaxed);
    return IngestResult::Rejected;
  }
  (pkg.sign > 0 ? pos_ : neg_)[pkg.feature_index].fetch_add(1, std::memory_order_relaxed);
  return IngestResult::Accepted;
}

IngestResult Server::ingest_test(const TestPackage& pkg) {
  std::shared_lock lock(mutex_);
  if (pkg.experiment_id != descriptor_.experiment_id || pkg.iteration != descriptor_.iteration) {
    stale_.fetch_add(1, std::memory_order_relaxed);
    return IngestResult::Stale;
  }
  const std::size_t cell = (pkg.true_label == Label::Positive ? 0 : 2) + (pkg.predicted_label == Label::Positive ? 0 : 1);
  cells_[cell].fetch_add(1, std::memory_order_relaxed);
  return IngestResult::Accepted;
}

ExperimentDescriptor Server::close_iteration(double now) {
  std::unique_lock lock(mutex_);
  if (now < descriptor_.deadline)
    throw ProtocolError("close_iteration called before the deadline of iteration " +
                        std::to_string(descriptor_.iteration));

  IterationReport report;
  report.iteration = descriptor_.iteration;
  report.counts = AggregateCounts(pos_.size());
  for (std::size_t j = 0; j < pos_.size(); ++j) {
    report.counts.pos[j] = pos_[j].exchange(0, std::memory_order_relaxed);
    report.counts.neg[j] = neg_[j].exchange(0, std::memory_order_relaxed);
  }
  ConfusionCounts cells;
  cells.true_pos = cells_[0].exchange(0);
  cells.false_neg = cells_[1].exchange(0);
  cells.false_pos = cells_[2].exchange(0);
  cells.true_neg = cells_[3].exchange(0);
  report.metrics = Metrics::from_cells(cells);
  report.stale = stale_.exchange(0);
  report.rejected = rejected_.exchange(0);
  report.closed_at = now;
  stale_total_ += report.stale;
  rejected_total_ += report.rejected;

  model_ = server_update(model_, report.counts, config_.train);
  averager_.push(model_.w);
  history_.push_back(std::move(report));
  publish(now);
  return descriptor_;
}

}  // namespace secvm
