#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "secvm/data.hpp"
#include "secvm/feature_hash.hpp"

namespace secvm {

// Dense weights plus the previous iterate, kept for two-vector averaging.
// t counts updates applied so far plus one, so the first step size is 1/lambda.
struct ModelState {
  std::vector<double> w;
  std::vector<double> w_prev;
  std::uint32_t t = 1;

  static ModelState zeros(std::size_t dim) { return {std::vector<double>(dim), std::vector<double>(dim), 1}; }
  std::size_t dim() const noexcept { return w.size(); }
};

struct TrainConfig {
  double lambda = 1e-4;
  double class_weight_pos = 1.0;
  double class_weight_neg = 1.0;
  double participant_estimate = 1.0;  // N-hat, divides the summed update
  std::uint32_t num_iterations = 100;
  std::uint32_t avg_window = 2;

  void validate() const;
};

// N_j^+ and N_j^- per bin.
struct AggregateCounts {
  std::vector<std::uint64_t> pos;
  std::vector<std::uint64_t> neg;

  explicit AggregateCounts(std::size_t dim = 0) : pos(dim), neg(dim) {}
  std::size_t dim() const noexcept { return pos.size(); }
  std::uint64_t total() const noexcept;

  // Adds an integer update vector: positive entries feed pos, negative feed neg.
  void add(const SparseVector& g);

  friend bool operator==(const AggregateCounts&, const AggregateCounts&) = default;
};

struct ConfusionCounts {
  std::uint64_t true_pos = 0;   // truth +1, predicted +1
  std::uint64_t false_neg = 0;  // truth +1, predicted -1
  std::uint64_t false_pos = 0;  // truth -1, predicted +1
  std::uint64_t true_neg = 0;   // truth -1, predicted -1

  void add(Label truth, Label predicted) noexcept;
  std::uint64_t total() const noexcept { return true_pos + false_neg + false_pos + true_neg; }
  std::uint64_t positives() const noexcept { return true_pos + false_neg; }
  std::uint64_t negatives() const noexcept { return false_pos + true_neg; }

  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

// Rates with a zero denominator are left empty rather than NaN.
struct Metrics {
  ConfusionCounts cells;
  std::optional<double> accuracy;
  std::optional<double> recall_pos;
  std::optional<double> recall_neg;
  std::optional<double> precision_pos;
  std::optional<double> precision_neg;

  static Metrics from_cells(const ConfusionCounts& cells);
  // Share of each class among evaluated samples, the marginal baseline.
  std::optional<double> share_pos() const;
  std::optional<double> share_neg() const;
};

// y * <w, x>. Throws DimensionError when x has an index outside w.
double margin(std::span<const double> w, const SparseVector& x, Label y);

// y * x when 1 - margin > 0 (strictly), otherwise empty.
SparseVector local_update(std::span<const double> w, const SparseVector& x, Label y);

// Pegasos step eta = 1/(lambda t):
//   w_j <- (1 - eta lambda) w_j + (eta / N-hat) (c+ N_j^+ - c- N_j^-)
ModelState server_update(const ModelState& state, const AggregateCounts& counts, const TrainConfig& cfg);

// (w + w_prev) / 2, or w unchanged while t < 2.
std::vector<double> averaged_model(const ModelState& state);

// Running mean of the last `window` iterates.
class IterateAverager {
 public:
  explicit IterateAverager(std::uint32_t window);
  void push(std::vector<double> w);
  std::vector<double> average() const;
  std::uint32_t window() const noexcept { return window_; }

 private:
  std::uint32_t window_;
  std::deque<std::vector<double>> history_;
};

// +1 when <w, x> >= 0.
Label predict(std::span<const double> w, const SparseVector& x);

Metrics evaluate(std::span<const double> w, const Dataset& test);

struct IterationRecord {
  std::uint32_t iteration = 0;  // number of updates applied
  double loss = 0.0;            // objective at the iterate the update was computed from
  std::uint64_t packages = 0;   // ||sum of local updates||_1 equivalent, total unit messages
  Metrics averaged;
  Metrics raw;
  std::vector<double> w;  // iterate after the update; empty unless keep_weights
};

struct Trajectory {
  std::vector<IterationRecord> records;
  ModelState final_state;
};

struct CentralizedOptions {
  bool keep_weights = true;
};

// Full-batch subgradient training on (optionally hashed) samples with exact
// integer aggregation and N-hat = |train|. Deterministic and order-invariant.
Trajectory train_centralized(const Dataset& train, const Dataset& test, const TrainConfig& cfg,
                             const std::optional<HashConfig>& hash_cfg, const CentralizedOptions& opts = {});

// iteration,loss,accuracy,recall_pos,recall_neg,precision_pos,precision_neg
// followed by the same rates for the raw (unaveraged) iterate.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace secvm
