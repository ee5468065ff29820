#include <gtest/gtest.h>

#include <set>

#include "secvm/data.hpp"
#include "secvm/error.hpp"
#include "secvm/random.hpp"

using namespace secvm;

TEST(Parse, SingleLine) {
  const Dataset ds = parse_dataset("+1 3:2 7:1\n");
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.samples[0].label, Label::Positive);
  EXPECT_EQ(ds.samples[0].features, (SparseVector{{3, 2}, {7, 1}}));
  EXPECT_EQ(ds.num_raw_features, 8u);
}

TEST(Parse, LabelOnlyLine) {
  const Dataset ds = parse_dataset("-1\n");
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_EQ(ds.samples[0].label, Label::Negative);
  EXPECT_TRUE(ds.samples[0].features.empty());
}

TEST(Parse, DuplicatesAreSummed) {
  const Dataset ds = parse_dataset("+1 3:1 3:1\n");
  EXPECT_EQ(ds.samples[0].features, (SparseVector{{3, 2}}));
}

TEST(Parse, CommentsHeaderAndBareOne) {
  const Dataset ds = parse_dataset("# corpus\n#d 100\n1 5:-2\n\n-1 99:4\n");
  EXPECT_EQ(ds.num_raw_features, 100u);
  ASSERT_EQ(ds.size(), 2u);
  EXPECT_EQ(ds.samples[0].features.at(5), -2);
}

TEST(Parse, ErrorsNameTheLine) {
  auto line_of = [](const char* text) {
    try {
      parse_dataset(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return std::size_t{0};
  };
  EXPECT_EQ(line_of("+1 1:1\n+1 2:0\n"), 2u);       // zero value
  EXPECT_EQ(line_of("+1 1:1\n0 2:1\n"), 2u);        // bad label
  EXPECT_EQ(line_of("+1 x:1\n"), 1u);               // malformed token
  EXPECT_EQ(line_of("+1 1:1\n-1 3\n"), 2u);         // missing value
  EXPECT_EQ(line_of("#d 4\n+1 4:1\n"), 2u);         // index beyond header
  EXPECT_EQ(line_of("+1 1:1\n#d 10\n"), 2u);        // header after samples
}

TEST(Parse, SerializeRoundTrip) {
  const Dataset ds = parse_dataset("#d 50\n+1 3:2 7:1\n-1\n-1 49:-5 0:1\n");
  EXPECT_EQ(parse_dataset(serialize_dataset(ds)), ds);
}

TEST(Sparse, FromEntriesDropsZeroSums) {
  const auto v = SparseVector::from_entries({{4, 2}, {1, 1}, {4, -2}});
  EXPECT_EQ(v, (SparseVector{{1, 1}}));
  EXPECT_EQ(v.l1_norm(), 1u);
  EXPECT_EQ(v.extent(), 2u);
}

TEST(Sparse, AdditionAndScaling) {
  const SparseVector a{{1, 2}, {3, -1}};
  const SparseVector b{{3, 1}, {5, 4}};
  EXPECT_EQ(a + b, (SparseVector{{1, 2}, {5, 4}}));
  EXPECT_EQ(a.scaled(-2), (SparseVector{{1, -4}, {3, 2}}));
  EXPECT_TRUE(a.scaled(0).empty());
}

namespace {
Dataset counting_dataset(std::size_t n) {
  Dataset ds;
  for (std::size_t i = 0; i < n; ++i)
    ds.samples.push_back({SparseVector{{static_cast<std::uint32_t>(i), 1}}, i % 2 ? Label::Positive : Label::Negative});
  ds.num_raw_features = n;
  return ds;
}
}  // namespace

TEST(Split, NearOneKeepsAlmostEverything) {
  const auto [train, test] = split_train_test(counting_dataset(100), 1.0 - 1e-9, 3);
  EXPECT_EQ(train.size(), 100u);
  EXPECT_EQ(test.size(), 0u);
}

TEST(Split, ConcentrationOverSeeds) {
  const Dataset ds = counting_dataset(10000);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto [train, test] = split_train_test(ds, 0.7, seed);
    EXPECT_GE(train.size(), 6700u);
    EXPECT_LE(train.size(), 7300u);
    EXPECT_EQ(train.size() + test.size(), ds.size());
  }
}

TEST(Split, DeterministicAndDisjoint) {
  const Dataset ds = counting_dataset(500);
  const auto a = split_train_test(ds, 0.6, 9);
  const auto b = split_train_test(ds, 0.6, 9);
  EXPECT_EQ(a.first, b.first);
  EXPECT_EQ(a.second, b.second);
  std::set<std::uint32_t> seen;
  for (const auto* part : {&a.first, &a.second})
    for (const auto& s : part->samples) EXPECT_TRUE(seen.insert(s.features.entries()[0].index).second);
  EXPECT_EQ(seen.size(), 500u);
}

TEST(Split, RejectsDegenerateFraction) {
  const Dataset ds = counting_dataset(10);
  EXPECT_THROW(split_train_test(ds, 0.0, 1), ConfigError);
  EXPECT_THROW(split_train_test(ds, 1.0, 1), ConfigError);
}

TEST(Labels, OnlyTwoValues) {
  EXPECT_EQ(label_from_int(1), Label::Positive);
  EXPECT_EQ(label_from_int(-1), Label::Negative);
  EXPECT_THROW(label_from_int(0), ConfigError);
  EXPECT_THROW(label_from_int(2), ConfigError);
}

TEST(Random, DeriveSeedSeparatesStreams) {
  EXPECT_NE(derive_seed(1, "client", 0), derive_seed(1, "client", 1));
  EXPECT_NE(derive_seed(1, "client", 0), derive_seed(1, "proxy", 0));
  EXPECT_EQ(derive_seed(5, "churn", 2), derive_seed(5, "churn", 2));
  Rng r(42);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform(2.0, 3.0);
    EXPECT_GE(u, 2.0);
    EXPECT_LT(u, 3.0);
    EXPECT_LT(r.below(7), 7u);
  }
}
