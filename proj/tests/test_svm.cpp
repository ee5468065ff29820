#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "secvm/error.hpp"
#include "secvm/random.hpp"
#include "secvm/svm.hpp"
#include "secvm/synthetic.hpp"

using namespace secvm;

namespace {

std::vector<double> vec(std::initializer_list<double> v) { return v; }

// Positive samples draw from features [0,10), negatives from [10,20); both add
// noise from [20,30). Separable by the block indicator.
Dataset two_clusters(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.num_raw_features = 30;
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = rng.bernoulli(0.5);
    std::vector<SparseEntry> e;
    for (int k = 0; k < 3; ++k) e.push_back({static_cast<std::uint32_t>((pos ? 0 : 10) + rng.below(10)), 1});
    for (int k = 0; k < 2; ++k) e.push_back({static_cast<std::uint32_t>(20 + rng.below(10)), 1});
    ds.samples.push_back({SparseVector::from_entries(e), pos ? Label::Positive : Label::Negative});
  }
  return ds;
}

TrainConfig config(double lambda, std::uint32_t iterations) {
  TrainConfig c;
  c.lambda = lambda;
  c.num_iterations = iterations;
  return c;
}

}  // namespace

TEST(Margin, Examples) {
  EXPECT_EQ(margin(vec({0, 0, 0, 0, 0, 0, 0, 0}), SparseVector{{3, 2}, {7, 1}}, Label::Negative), 0.0);
  EXPECT_EQ(margin(vec({1, 0}), SparseVector{{0, 2}}, Label::Positive), 2.0);
  EXPECT_EQ(margin(vec({0.5, -1}), SparseVector{{0, 2}, {1, 1}}, Label::Negative), 0.0);
  EXPECT_THROW(margin(vec({1}), SparseVector{{1, 1}}, Label::Positive), DimensionError);
}

TEST(LocalUpdate, Examples) {
  // margin 2 >= 1: nothing to send
  EXPECT_TRUE(local_update(vec({1, 0}), SparseVector{{0, 2}}, Label::Positive).empty());
  EXPECT_EQ(local_update(std::vector<double>(8, 0.0), SparseVector{{3, 2}, {7, 1}}, Label::Negative),
            (SparseVector{{3, -2}, {7, -1}}));
  // margin exactly 1: delta(0) = 0
  EXPECT_TRUE(local_update(vec({0.5}), SparseVector{{0, 2}}, Label::Positive).empty());
  EXPECT_THROW(local_update(vec({0}), SparseVector{{4, 1}}, Label::Positive), DimensionError);
}

TEST(LocalUpdate, EntriesAreLabelTimesFeature) {
  Rng rng(3);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> w(50);
    for (auto& x : w) x = rng.uniform(-0.2, 0.2);
    std::vector<SparseEntry> e;
    for (int k = 0; k < 6; ++k) e.push_back({static_cast<std::uint32_t>(rng.below(50)), 1});
    const auto x = SparseVector::from_entries(e);
    const Label y = rng.bernoulli(0.5) ? Label::Positive : Label::Negative;
    const auto g = local_update(w, x, y);
    if (g.empty()) continue;
    EXPECT_EQ(g, x.scaled(to_int(y)));
  }
}

TEST(ServerUpdate, ZeroCountsFirstStepAnnihilates) {
  ModelState s{vec({3, -2}), vec({0, 0}), 1};
  const auto next = server_update(s, AggregateCounts(2), config(0.1, 1));
  EXPECT_EQ(next.w, vec({0, 0}));
  EXPECT_EQ(next.w_prev, vec({3, -2}));
  EXPECT_EQ(next.t, 2u);
}

TEST(ServerUpdate, SingleBinByHand) {
  TrainConfig c = config(0.1, 1);
  AggregateCounts counts(1);
  counts.pos[0] = 3;
  counts.neg[0] = 1;
  const auto next = server_update(ModelState::zeros(1), counts, c);
  EXPECT_DOUBLE_EQ(next.w[0], 20.0);
}

TEST(ServerUpdate, ClassWeightsScaleBySign) {
  TrainConfig c = config(0.1, 1);
  c.class_weight_pos = 4;
  AggregateCounts counts(1);
  counts.pos[0] = 1;
  counts.neg[0] = 2;
  EXPECT_DOUBLE_EQ(server_update(ModelState::zeros(1), counts, c).w[0], 10.0 * (4.0 - 2.0));
}

TEST(ServerUpdate, StepSizeIdentity) {
  for (std::uint32_t t = 1; t < 2000; ++t) {
    for (double lambda : {0.1, 1e-4, 0.37}) {
      const double eta = 1.0 / (lambda * t);
      EXPECT_LT(std::fabs(eta * lambda * t - 1.0), 1e-12);
    }
  }
  EXPECT_EQ(1.0 / (0.1 * 10), 1.0);
}

TEST(ServerUpdate, ZeroCountsShrinkMultiplicatively) {
  Rng rng(5);
  const TrainConfig c = config(0.01, 1);
  for (std::uint32_t t = 2; t < 50; ++t) {
    ModelState s = ModelState::zeros(10);
    for (auto& x : s.w) x = rng.uniform(-1, 1);
    s.t = t;
    const auto next = server_update(s, AggregateCounts(10), c);
    const double factor = 1.0 - (1.0 / (c.lambda * t)) * c.lambda;
    for (std::size_t j = 0; j < 10; ++j) EXPECT_EQ(next.w[j], factor * s.w[j]);
  }
}

TEST(ServerUpdate, DimensionMismatch) {
  EXPECT_THROW(server_update(ModelState::zeros(3), AggregateCounts(2), config(0.1, 1)), DimensionError);
  AggregateCounts c(2);
  EXPECT_THROW(c.add(SparseVector{{2, 1}}), DimensionError);
}

TEST(Averaging, Examples) {
  EXPECT_EQ(averaged_model({vec({4, 1}), vec({4, 1}), 3}), vec({4, 1}));
  EXPECT_EQ(averaged_model({vec({2}), vec({0}), 2}), vec({1}));
  EXPECT_EQ(averaged_model({vec({2}), vec({0}), 1}), vec({2}));  // t < 2 leaves w alone
  Rng rng(8);
  for (int k = 0; k < 100; ++k) {
    ModelState s = ModelState::zeros(5);
    for (std::size_t j = 0; j < 5; ++j) {
      s.w[j] = rng.uniform(-3, 3);
      s.w_prev[j] = rng.uniform(-3, 3);
    }
    s.t = 4;
    const auto avg = averaged_model(s);
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(avg[j], 0.5 * (s.w_prev[j] + s.w[j]));
  }
}

TEST(Averaging, WindowTwoMatchesTwoVectorAverage) {
  Rng rng(9);
  IterateAverager avg(2);
  ModelState s = ModelState::zeros(4);
  avg.push(s.w);
  for (int k = 0; k < 20; ++k) {
    ModelState next = s;
    for (auto& x : next.w) x = rng.uniform(-1, 1);
    next.w_prev = s.w;
    next.t = s.t + 1;
    s = next;
    avg.push(s.w);
    EXPECT_EQ(avg.average(), averaged_model(s));
  }
  EXPECT_THROW(IterateAverager(0), ConfigError);
}

TEST(Predict, TieAndSign) {
  EXPECT_EQ(predict(vec({0, 0}), SparseVector{{1, 5}}), Label::Positive);
  EXPECT_EQ(predict(vec({1}), SparseVector{{0, -3}}), Label::Negative);
  Rng rng(10);
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> w(20);
    for (auto& x : w) x = rng.uniform(-1, 1);
    const SparseVector x{{static_cast<std::uint32_t>(rng.below(10)), 1}, {static_cast<std::uint32_t>(10 + rng.below(10)), -2}};
    EXPECT_EQ(predict(w, x), margin(w, x, Label::Positive) >= 0 ? Label::Positive : Label::Negative);
  }
}

TEST(Evaluate, PerfectAndConstant) {
  Dataset ds;
  for (int i = 0; i < 10; ++i) ds.samples.push_back({SparseVector{{0, i < 3 ? 1 : -1}}, i < 3 ? Label::Positive : Label::Negative});
  const auto perfect = evaluate(vec({1}), ds);
  EXPECT_EQ(*perfect.accuracy, 1.0);
  EXPECT_EQ(*perfect.recall_pos, 1.0);
  EXPECT_EQ(*perfect.recall_neg, 1.0);
  EXPECT_EQ(*perfect.precision_pos, 1.0);
  EXPECT_EQ(*perfect.precision_neg, 1.0);
  const auto constant = evaluate(vec({0}), ds);
  EXPECT_EQ(*constant.recall_pos, 1.0);
  EXPECT_EQ(*constant.recall_neg, 0.0);
  EXPECT_DOUBLE_EQ(*constant.precision_pos, 0.3);
  EXPECT_FALSE(constant.precision_neg.has_value());  // nothing predicted negative
  EXPECT_DOUBLE_EQ(*constant.share_pos(), 0.3);
}

TEST(Evaluate, MatchesHandTally) {
  Rng rng(14);
  Dataset ds;
  for (int i = 0; i < 200; ++i) {
    std::vector<SparseEntry> e{{static_cast<std::uint32_t>(rng.below(8)), static_cast<std::int64_t>(rng.below(3)) + 1}};
    ds.samples.push_back({SparseVector::from_entries(e), rng.bernoulli(0.4) ? Label::Positive : Label::Negative});
  }
  std::vector<double> w(8);
  for (auto& x : w) x = rng.uniform(-1, 1);
  double tp = 0, fn = 0, fp = 0, tn = 0;
  for (const auto& s : ds.samples) {
    double d = 0;
    for (const auto& en : s.features.entries()) d += w[en.index] * static_cast<double>(en.value);
    const bool pred = d >= 0, truth = s.label == Label::Positive;
    (truth ? (pred ? tp : fn) : (pred ? fp : tn)) += 1;
  }
  const auto m = evaluate(w, ds);
  EXPECT_EQ(m.cells.total(), 200u);
  EXPECT_DOUBLE_EQ(*m.accuracy, (tp + tn) / 200);
  EXPECT_DOUBLE_EQ(*m.recall_pos, tp / (tp + fn));
  EXPECT_DOUBLE_EQ(*m.recall_neg, tn / (tn + fp));
  EXPECT_DOUBLE_EQ(*m.precision_pos, tp / (tp + fp));
  EXPECT_DOUBLE_EQ(*m.precision_neg, tn / (tn + fn));
}

TEST(Centralized, HandUnrolledThreeSteps) {
  Dataset ds;
  ds.samples.push_back({SparseVector{{0, 1}}, Label::Positive});
  ds.num_raw_features = 1;
  const auto tr = train_centralized(ds, ds, config(0.1, 3), std::nullopt);
  ASSERT_EQ(tr.records.size(), 3u);
  // t=1: eta=10, shrink 0, one package -> 10
  EXPECT_DOUBLE_EQ(tr.records[0].w[0], 10.0);
  EXPECT_EQ(tr.records[0].packages, 1u);
  // t=2: margin 10, no package; shrink 1/2 -> 5
  EXPECT_DOUBLE_EQ(tr.records[1].w[0], 5.0);
  EXPECT_EQ(tr.records[1].packages, 0u);
  // t=3: shrink 2/3 -> 10/3
  EXPECT_DOUBLE_EQ(tr.records[2].w[0], 10.0 / 3.0);
  EXPECT_EQ(tr.final_state.t, 4u);
}

TEST(Centralized, SymmetricDataStaysAtZero) {
  Dataset ds;
  ds.samples.push_back({SparseVector{{0, 2}, {3, 1}}, Label::Positive});
  ds.samples.push_back({SparseVector{{0, 2}, {3, 1}}, Label::Negative});
  ds.num_raw_features = 4;
  const auto tr = train_centralized(ds, ds, config(0.1, 20), std::nullopt);
  for (const auto& r : tr.records)
    for (double x : r.w) EXPECT_EQ(x, 0.0);
}

TEST(Centralized, SeparableClustersReachHighAccuracy) {
  const Dataset train = two_clusters(400, 21), test = two_clusters(400, 22);
  const auto tr = train_centralized(train, test, config(0.01, 200), std::nullopt);
  EXPECT_GE(*tr.records.back().averaged.accuracy, 0.95);
  EXPECT_GE(*tr.records.back().raw.accuracy, 0.95);
}

TEST(Centralized, OrderInvariant) {
  Dataset train = two_clusters(300, 31);
  const Dataset test = two_clusters(100, 32);
  const auto a = train_centralized(train, test, config(0.05, 30), HashConfig{16, {}});
  std::reverse(train.samples.begin(), train.samples.end());
  Rng rng(4);
  for (std::size_t i = train.size(); i > 1; --i) std::swap(train.samples[i - 1], train.samples[rng.below(i)]);
  const auto b = train_centralized(train, test, config(0.05, 30), HashConfig{16, {}});
  EXPECT_EQ(a.final_state.w, b.final_state.w);
  for (std::size_t k = 0; k < a.records.size(); ++k) EXPECT_EQ(a.records[k].w, b.records[k].w);
}

TEST(Centralized, EmptyTrainingSetRejected) {
  EXPECT_THROW(train_centralized(Dataset{}, Dataset{}, config(0.1, 1), std::nullopt), ConfigError);
}

TEST(Centralized, AveragingSmoothsAccuracy) {
  SyntheticSpec spec;
  spec.num_samples = 1500;
  spec.num_features = 5000;
  spec.signal = 0.15;
  const Dataset all = generate_synthetic(spec, 5);
  const auto [train, test] = split_train_test(all, 0.7, 5);
  TrainConfig c = config(1e-3, 60);
  auto jitter = [&](std::uint32_t window) {
    c.avg_window = window;
    const auto tr = train_centralized(train, test, c, std::nullopt);
    double v = 0;
    for (std::size_t k = 11; k < tr.records.size(); ++k) {
      const double d = *tr.records[k].averaged.accuracy - *tr.records[k - 1].averaged.accuracy;
      v += d * d;
    }
    return v;
  };
  EXPECT_LT(jitter(2), jitter(1));
}

TEST(Centralized, TrajectoryCsvHeader) {
  const Dataset train = two_clusters(50, 1);
  std::ostringstream out;
  write_trajectory_csv(out, train_centralized(train, train, config(0.1, 2), std::nullopt));
  const std::string text = out.str();
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "iteration,loss,accuracy,recall_pos,recall_neg,precision_pos,precision_neg,raw_accuracy,raw_recall_pos,"
            "raw_recall_neg,raw_precision_pos,raw_precision_neg");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}

TEST(TrainConfigValidation, RejectsBadValues) {
  TrainConfig c;
  c.lambda = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.class_weight_neg = -1;
  EXPECT_THROW(c.validate(), ConfigError);
}
