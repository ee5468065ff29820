#include <gtest/gtest.h>

#include <algorithm>
#include <thread>

#include "secvm/server.hpp"

using namespace secvm;

namespace {

ServerConfig config(std::uint32_t bins, double lambda = 0.1, double n_hat = 1.0) {
  ServerConfig c;
  c.experiment_id = 2;
  c.hash.num_bins = bins;
  c.train.lambda = lambda;
  c.train.participant_estimate = n_hat;
  c.iteration_seconds = 10.0;
  return c;
}

}  // namespace

TEST(Server, PublishesFirstIteration) {
  Server s(config(4), 100.0);
  const auto d = s.descriptor();
  EXPECT_EQ(d.iteration, 1u);
  EXPECT_EQ(d.deadline, 110.0);
  EXPECT_EQ(d.weights, std::vector<double>(4, 0.0));
  EXPECT_EQ(s.digest(), descriptor_digest(d));
}

TEST(Server, IngestCountsPerSign) {
  Server s(config(5), 0.0);
  EXPECT_EQ(s.ingest_update({2, 1, 3, 1}), IngestResult::Accepted);
  EXPECT_EQ(s.ingest_update({2, 1, 3, -1}), IngestResult::Accepted);
  s.close_iteration(10.0);
  const auto& c = s.history().back().counts;
  EXPECT_EQ(c.pos[3], 1u);
  EXPECT_EQ(c.neg[3], 1u);
  EXPECT_EQ(c.total(), 2u);
}

TEST(Server, StaleAndRejected) {
  Server s(config(5), 0.0);
  EXPECT_EQ(s.ingest_update({2, 7, 1, 1}), IngestResult::Stale);   // wrong iteration
  EXPECT_EQ(s.ingest_update({3, 1, 1, 1}), IngestResult::Stale);   // wrong experiment
  EXPECT_EQ(s.ingest_update({2, 1, 5, 1}), IngestResult::Rejected); // index out of range
  EXPECT_EQ(s.ingest_test({2, 0, Label::Positive, Label::Positive}), IngestResult::Stale);
  s.close_iteration(10.0);
  const auto& r = s.history().back();
  EXPECT_EQ(r.counts.total(), 0u);
  EXPECT_EQ(r.stale, 3u);
  EXPECT_EQ(r.rejected, 1u);
  EXPECT_EQ(s.stale_total(), 3u);
}

TEST(Server, TestPackagesFillCells) {
  Server s(config(1), 0.0);
  EXPECT_EQ(s.ingest_test({2, 1, Label::Positive, Label::Positive}), IngestResult::Accepted);
  s.ingest_test({2, 1, Label::Positive, Label::Negative});
  s.ingest_test({2, 1, Label::Negative, Label::Positive});
  s.ingest_test({2, 1, Label::Negative, Label::Negative});
  s.close_iteration(10.0);
  EXPECT_EQ(s.history().back().metrics.cells, (ConfusionCounts{1, 1, 1, 1}));
}

TEST(Server, TestPackagesAgreeWithEvaluate) {
  Rng rng(3);
  Server s(config(1), 0.0);
  Dataset ds;
  const std::vector<double> w{0.3};
  for (int i = 0; i < 1000; ++i) {
    std::int64_t v = static_cast<std::int64_t>(rng.below(5)) - 2;
    if (v == 0) v = 1;
    const Sample smp{SparseVector{{0, v}}, rng.bernoulli(0.3) ? Label::Positive : Label::Negative};
    ds.samples.push_back(smp);
    s.ingest_test({2, 1, smp.label, predict(w, smp.features)});
  }
  s.close_iteration(10.0);
  const auto got = s.history().back().metrics;
  const auto want = evaluate(w, ds);
  EXPECT_EQ(got.cells, want.cells);
  EXPECT_EQ(got.accuracy, want.accuracy);
  EXPECT_EQ(got.precision_neg, want.precision_neg);
}

TEST(Server, CountsMatchIndependentTally) {
  Rng rng(4);
  Server s(config(50), 0.0);
  std::vector<std::uint64_t> pos(50), neg(50);
  for (int i = 0; i < 100000; ++i) {
    const auto j = static_cast<std::uint32_t>(rng.below(50));
    const bool up = rng.bernoulli(0.5);
    ++(up ? pos : neg)[j];
    s.ingest_update({2, 1, j, static_cast<std::int8_t>(up ? 1 : -1)});
  }
  s.close_iteration(10.0);
  EXPECT_EQ(s.history().back().counts.pos, pos);
  EXPECT_EQ(s.history().back().counts.neg, neg);
}

TEST(Server, OrderIndependentAndThreadSafe) {
  Rng rng(5);
  std::vector<UpdatePackage> pk;
  for (int i = 0; i < 40000; ++i)
    pk.push_back({2, 1, static_cast<std::uint32_t>(rng.below(20)), static_cast<std::int8_t>(rng.bernoulli(0.4) ? 1 : -1)});
  Server a(config(20), 0.0), b(config(20), 0.0);
  for (const auto& p : pk) a.ingest_update(p);
  std::reverse(pk.begin(), pk.end());
  std::vector<std::thread> pool;
  for (int t = 0; t < 4; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < pk.size(); i += 4) b.ingest_update(pk[i]);
    });
  for (auto& th : pool) th.join();
  a.close_iteration(10.0);
  b.close_iteration(10.0);
  EXPECT_EQ(a.history().back().counts, b.history().back().counts);
  EXPECT_EQ(a.model().w, b.model().w);
}

TEST(Server, CloseBeforeDeadlineIsAnError) {
  Server s(config(2), 0.0);
  EXPECT_THROW(s.close_iteration(9.999), ProtocolError);
}

TEST(Server, ZeroPackagesShrinkOnly) {
  Server s(config(1), 0.0);
  s.ingest_update({2, 1, 0, 1});
  s.close_iteration(10.0);  // w = 10
  EXPECT_DOUBLE_EQ(s.model().w[0], 10.0);
  s.close_iteration(20.0);  // nothing received, t=2: shrink by 1/2
  EXPECT_DOUBLE_EQ(s.model().w[0], 5.0);
}

TEST(Server, SingleBinHandComputation) {
  Server s(config(1), 0.0);
  for (int i = 0; i < 3; ++i) s.ingest_update({2, 1, 0, 1});
  s.ingest_update({2, 1, 0, -1});
  s.close_iteration(10.0);
  EXPECT_DOUBLE_EQ(s.model().w[0], 20.0);
}

TEST(Server, ConsecutiveClosesChainState) {
  Server s(config(1), 0.0);
  const auto d0 = s.digest();
  s.ingest_update({2, 1, 0, 1});
  const auto d1 = s.close_iteration(10.0);
  EXPECT_NE(s.digest(), d0);
  EXPECT_EQ(d1.iteration, 2u);
  EXPECT_EQ(d1.deadline, 20.0);
  s.close_iteration(20.0);
  const auto m = s.model();
  EXPECT_EQ(m.t, 3u);
  EXPECT_DOUBLE_EQ(m.w_prev[0], 10.0);
  EXPECT_DOUBLE_EQ(m.w[0], 5.0);
  // published averaged model is the mean of the last two iterates
  EXPECT_DOUBLE_EQ(s.descriptor().averaged_weights[0], 7.5);
  // counters are reset
  s.close_iteration(30.0);
  EXPECT_EQ(s.history().back().counts.total(), 0u);
}

TEST(Server, PipelineMatchesCentralized) {
  Rng rng(6);
  Dataset ds;
  ds.num_raw_features = 200;
  for (int i = 0; i < 150; ++i) {
    std::vector<SparseEntry> e;
    for (int k = 0; k < 5; ++k) e.push_back({static_cast<std::uint32_t>(rng.below(200)), 1});
    ds.samples.push_back({SparseVector::from_entries(e), rng.bernoulli(0.5) ? Label::Positive : Label::Negative});
  }
  const HashConfig h{40, {}};
  TrainConfig tc;
  tc.lambda = 0.05;
  tc.num_iterations = 25;
  const auto oracle = train_centralized(ds, ds, tc, h);

  ServerConfig sc = config(40, 0.05, static_cast<double>(ds.size()));
  sc.hash = h;
  Server s(sc, 0.0);
  const Dataset hashed = hash_dataset(ds, h);
  for (std::uint32_t k = 1; k <= tc.num_iterations; ++k) {
    const auto d = s.descriptor();
    for (const auto& smp : hashed.samples)
      for (const auto& p : packetize(local_update(d.weights, smp.features, smp.label), sc.experiment_id, d.iteration))
        s.ingest_update(p);
    s.close_iteration(d.deadline);
    EXPECT_EQ(s.model().w, oracle.records[k - 1].w) << "iteration " << k;
  }
}
