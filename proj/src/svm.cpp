#include "secvm/svm.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <string>

#include "secvm/error.hpp"

namespace secvm {

void TrainConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be > 0");
  if (!(class_weight_pos > 0.0)) throw ConfigError("class_weight_pos must be > 0");
  if (!(class_weight_neg > 0.0)) throw ConfigError("class_weight_neg must be > 0");
  if (!(participant_estimate > 0.0)) throw ConfigError("participant_estimate must be > 0");
  if (avg_window < 1) throw ConfigError("avg_window must be >= 1");
}

std::uint64_t AggregateCounts::total() const noexcept {
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < pos.size(); ++j) s += pos[j] + neg[j];
  return s;
}

void AggregateCounts::add(const SparseVector& g) {
  for (const auto& e : g.entries()) {
    if (e.index >= pos.size()) throw DimensionError("update index " + std::to_string(e.index) + " >= " +
                                                    std::to_string(pos.size()));
    if (e.value > 0)
      pos[e.index] += static_cast<std::uint64_t>(e.value);
    else
      neg[e.index] += static_cast<std::uint64_t>(-e.value);
  }
}

void ConfusionCounts::add(Label truth, Label predicted) noexcept {
  if (truth == Label::Positive)
    ++(predicted == Label::Positive ? true_pos : false_neg);
  else
    ++(predicted == Label::Positive ? false_pos : true_neg);
}

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

double dot(std::span<const double> w, const SparseVector& x) {
  double s = 0.0;
  for (const auto& e : x.entries()) {
    if (e.index >= w.size())
      throw DimensionError("feature index " + std::to_string(e.index) + " outside weight vector of length " +
                           std::to_string(w.size()));
    s += w[e.index] * static_cast<double>(e.value);
  }
  return s;
}

}  // namespace

Metrics Metrics::from_cells(const ConfusionCounts& c) {
  Metrics m;
  m.cells = c;
  m.accuracy = ratio(c.true_pos + c.true_neg, c.total());
  m.recall_pos = ratio(c.true_pos, c.positives());
  m.recall_neg = ratio(c.true_neg, c.negatives());
  m.precision_pos = ratio(c.true_pos, c.true_pos + c.false_pos);
  m.precision_neg = ratio(c.true_neg, c.true_neg + c.false_neg);
  return m;
}

std::optional<double> Metrics::share_pos() const { return ratio(cells.positives(), cells.total()); }
std::optional<double> Metrics::share_neg() const { return ratio(cells.negatives(), cells.total()); }

double margin(std::span<const double> w, const SparseVector& x, Label y) {
  return static_cast<double>(to_int(y)) * dot(w, x);
}

SparseVector local_update(std::span<const double> w, const SparseVector& x, Label y) {
  if (1.0 - margin(w, x, y) > 0.0) return x.scaled(to_int(y));
  return {};
}

ModelState server_update(const ModelState& state, const AggregateCounts& counts, const TrainConfig& cfg) {
  if (state.t < 1) throw InvariantError("iteration counter must be >= 1");
  if (counts.dim() != state.dim() || counts.neg.size() != state.dim())
    throw DimensionError("aggregate counts do not match the model dimension");
  const double eta = 1.0 / (cfg.lambda * static_cast<double>(state.t));
  const double shrink = 1.0 - eta * cfg.lambda;
  const double step = eta / cfg.participant_estimate;

  ModelState next;
  next.w.resize(state.dim());
  for (std::size_t j = 0; j < state.dim(); ++j) {
    const double signal = cfg.class_weight_pos * static_cast<double>(counts.pos[j]) -
                          cfg.class_weight_neg * static_cast<double>(counts.neg[j]);
    next.w[j] = shrink * state.w[j] + step * signal;
  }
  next.w_prev = state.w;
  next.t = state.t + 1;
  return next;
}

std::vector<double> averaged_model(const ModelState& state) {
  if (state.t < 2) return state.w;
  std::vector<double> avg(state.dim());
  for (std::size_t j = 0; j < avg.size(); ++j) avg[j] = (state.w[j] + state.w_prev[j]) / 2.0;
  return avg;
}

IterateAverager::IterateAverager(std::uint32_t window) : window_(window) {
  if (window_ < 1) throw ConfigError("averaging window must be >= 1");
}

void IterateAverager::push(std::vector<double> w) {
  history_.push_back(std::move(w));
  while (history_.size() > window_) history_.pop_front();
}

std::vector<double> IterateAverager::average() const {
  if (history_.empty()) return {};
  if (history_.size() == 1) return history_.front();
  // Newest first, so a window of two computes (w + w_prev) / 2 exactly like
  // averaged_model.
  std::vector<double> sum = history_.back();
  for (auto it = std::next(history_.rbegin()); it != history_.rend(); ++it)
    for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += (*it)[j];
  const double n = static_cast<double>(history_.size());
  for (double& v : sum) v /= n;
  return sum;
}

Label predict(std::span<const double> w, const SparseVector& x) {
  return dot(w, x) >= 0.0 ? Label::Positive : Label::Negative;
}

Metrics evaluate(std::span<const double> w, const Dataset& test) {
  ConfusionCounts cells;
  for (const auto& s : test.samples) cells.add(s.label, predict(w, s.features));
  return Metrics::from_cells(cells);
}

Trajectory train_centralized(const Dataset& train, const Dataset& test, const TrainConfig& cfg_in,
                             const std::optional<HashConfig>& hash_cfg, const CentralizedOptions& opts) {
  if (train.empty()) throw ConfigError("training set is empty");
  TrainConfig cfg = cfg_in;
  cfg.participant_estimate = static_cast<double>(train.size());
  cfg.validate();

  const Dataset htrain = hash_cfg ? hash_dataset(train, *hash_cfg) : train;
  const Dataset htest = hash_cfg ? hash_dataset(test, *hash_cfg) : test;
  const std::size_t dim =
      hash_cfg ? hash_cfg->num_bins : std::max(train.num_raw_features, test.num_raw_features);

  Trajectory traj;
  traj.final_state = ModelState::zeros(dim);
  ModelState& state = traj.final_state;
  IterateAverager averager(cfg.avg_window);
  averager.push(state.w);

  for (std::uint32_t it = 1; it <= cfg.num_iterations; ++it) {
    AggregateCounts counts(dim);
    double hinge = 0.0;
    for (const auto& s : htrain.samples) {
      const double m = margin(state.w, s.features, s.label);
      hinge += std::max(0.0, 1.0 - m);
      counts.add(local_update(state.w, s.features, s.label));
    }
    double sq = 0.0;
    for (double v : state.w) sq += v * v;

    IterationRecord rec;
    rec.iteration = it;
    rec.loss = hinge / static_cast<double>(htrain.size()) + 0.5 * cfg.lambda * sq;
    rec.packages = counts.total();

    state = server_update(state, counts, cfg);
    averager.push(state.w);
    rec.averaged = evaluate(averager.average(), htest);
    rec.raw = evaluate(state.w, htest);
    if (opts.keep_weights) rec.w = state.w;
    traj.records.push_back(std::move(rec));
  }
  return traj;
}

namespace {

void put_rate(std::ostream& out, const std::optional<double>& v) {
  out << ',';
  if (v) out << *v;
}

void put_rates(std::ostream& out, const Metrics& m) {
  put_rate(out, m.accuracy);
  put_rate(out, m.recall_pos);
  put_rate(out, m.recall_neg);
  put_rate(out, m.precision_pos);
  put_rate(out, m.precision_neg);
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "iteration,loss,accuracy,recall_pos,recall_neg,precision_pos,precision_neg,"
         "raw_accuracy,raw_recall_pos,raw_recall_neg,raw_precision_pos,raw_precision_neg\n";
  out << std::setprecision(10);
  for (const auto& r : trajectory.records) {
    out << r.iteration << ',' << r.loss;
    put_rates(out, r.averaged);
    put_rates(out, r.raw);
    out << '\n';
  }
}

}  // namespace secvm
