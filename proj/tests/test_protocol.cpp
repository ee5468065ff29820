#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numeric>

#include "secvm/crypto.hpp"
#include "secvm/protocol.hpp"

using namespace secvm;

namespace {

ExperimentDescriptor sample_descriptor() {
  ExperimentDescriptor d;
  d.experiment_id = 7;
  d.iteration = 3;
  d.num_bins = 2;
  std::iota(d.hash_seed.begin(), d.hash_seed.end(), std::uint8_t{0});
  d.lambda = 0.1;
  d.train_fraction = 0.7;
  d.class_weight_pos = 4.0;
  d.class_weight_neg = 1.0;
  d.deadline = 1320.5;
  d.weights = {0.25, -1.5};
  d.averaged_weights = {0.125, 0.0};
  return d;
}

SparseVector random_vector(Rng& rng) {
  std::vector<SparseEntry> e;
  const int n = static_cast<int>(rng.below(20));
  for (int i = 0; i < n; ++i) {
    std::int64_t v = static_cast<std::int64_t>(rng.below(9)) - 4;
    e.push_back({static_cast<std::uint32_t>(rng.below(1000)), v});
  }
  return SparseVector::from_entries(std::move(e));
}

}  // namespace

TEST(Packetize, Examples) {
  EXPECT_TRUE(packetize({}, 1, 1).empty());
  const auto p = packetize(SparseVector{{4, -2}}, 9, 5);
  ASSERT_EQ(p.size(), 2u);
  for (const auto& pkg : p) EXPECT_EQ(pkg, (UpdatePackage{9, 5, 4, -1}));
}

TEST(Packetize, ReaggregationIsExact) {
  Rng rng(1);
  for (int t = 0; t < 2000; ++t) {
    const auto g = random_vector(rng);
    const auto p = packetize(g, 1, 2);
    EXPECT_EQ(p.size(), g.l1_norm());
    EXPECT_EQ(reaggregate(p), g);
  }
}

TEST(Packetize, WireLayoutHasNoSenderField) {
  // experiment, iteration, index and sign fill the whole 13 bytes.
  EXPECT_EQ(kUpdatePackageWireSize, 4u + 4u + 4u + 1u);
  EXPECT_EQ(sizeof(UpdatePackage::experiment_id) + sizeof(UpdatePackage::iteration) +
                sizeof(UpdatePackage::feature_index) + sizeof(UpdatePackage::sign),
            kUpdatePackageWireSize);
  EXPECT_EQ(kTestPackageWireSize, 4u + 4u + 1u + 1u);
}

TEST(Schedule, SingleAndWindowBounds) {
  Rng rng(2);
  const std::vector<UpdatePackage> one{{1, 1, 0, 1}};
  const auto s = schedule_sends<UpdatePackage>(one, 0.0, 10.0, rng);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_GE(s[0].time, 0.0);
  EXPECT_LT(s[0].time, 10.0);
  EXPECT_THROW(schedule_sends<UpdatePackage>(one, 10.0, 10.0, rng), SchedulingError);
  EXPECT_THROW(schedule_sends<UpdatePackage>(one, 11.0, 10.0, rng), SchedulingError);
}

TEST(Schedule, DecilesOfTenThousand) {
  Rng rng(3);
  const std::vector<UpdatePackage> pk(10000, UpdatePackage{1, 1, 0, 1});
  const auto s = schedule_sends<UpdatePackage>(pk, 0.0, 100.0, rng);
  std::vector<int> dec(10, 0);
  for (const auto& t : s) {
    ASSERT_GE(t.time, 0.0);
    ASSERT_LT(t.time, 100.0);
    ++dec[static_cast<int>(t.time / 10.0)];
  }
  for (int c : dec) {
    EXPECT_GE(c, 900);
    EXPECT_LE(c, 1100);
  }
}

TEST(Schedule, SameSeedSameSchedule) {
  const std::vector<UpdatePackage> pk(50, UpdatePackage{1, 1, 0, 1});
  Rng a(4), b(4);
  const auto x = schedule_sends<UpdatePackage>(pk, 5.0, 6.0, a);
  const auto y = schedule_sends<UpdatePackage>(pk, 5.0, 6.0, b);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(x[i].time, y[i].time);
}

TEST(Digest, FrozenValue) {
  // canonical bytes and SHA-256 recomputed independently with python struct + hashlib
  const auto d = sample_descriptor();
  EXPECT_EQ(canonical_bytes(d).size(), 132u);
  EXPECT_EQ(digest_hex(descriptor_digest(d)), "f5199c324d4a6f264b37293de46628e1d809689bfa85bf39eb6485a5ec2976d5");
}

TEST(Digest, SensitiveToEveryField) {
  const auto base = sample_descriptor();
  const auto h = descriptor_digest(base);
  EXPECT_EQ(descriptor_digest(sample_descriptor()), h);
  auto changed = [&](auto mutate) {
    auto d = base;
    mutate(d);
    return descriptor_digest(d) != h;
  };
  EXPECT_TRUE(changed([](auto& d) { d.deadline += 1; }));
  EXPECT_TRUE(changed([](auto& d) { d.weights[1] = std::nextafter(d.weights[1], 0.0); }));
  EXPECT_TRUE(changed([](auto& d) { d.averaged_weights[0] = std::nextafter(d.averaged_weights[0], 1.0); }));
  EXPECT_TRUE(changed([](auto& d) { d.hash_seed[31] ^= 1; }));
  EXPECT_TRUE(changed([](auto& d) { d.iteration += 1; }));
  EXPECT_TRUE(changed([](auto& d) { d.class_weight_pos = 1.0; }));
  // moving a value between the two vectors must not collide
  EXPECT_TRUE(changed([](auto& d) {
    d.weights = {0.25, -1.5, 0.125};
    d.averaged_weights = {0.0};
  }));
}

TEST(Digest, HexRoundTrip) {
  const auto h = descriptor_digest(sample_descriptor());
  EXPECT_EQ(parse_digest_hex(digest_hex(h)), h);
  EXPECT_THROW(parse_digest_hex("zz"), Error);
}

TEST(Wire, UpdateRoundTripAndErrors) {
  const UpdatePackage p{1, 1, 0, 1};
  EXPECT_EQ(decode_package(encode_package(p)), p);
  auto bytes = encode_package(UpdatePackage{0x01020304, 0x0a0b0c0d, 0x11223344, -1});
  const std::array<std::uint8_t, 13> expect{1, 2, 3, 4, 10, 11, 12, 13, 0x11, 0x22, 0x33, 0x44, 0xff};
  EXPECT_EQ(bytes, expect);
  bytes[12] = 0;
  EXPECT_THROW(decode_package(bytes), DecodeError);
  bytes[12] = 2;
  EXPECT_THROW(decode_package(bytes), DecodeError);
  EXPECT_THROW(decode_package(std::span<const std::uint8_t>(bytes.data(), 12)), DecodeError);
}

TEST(Wire, RandomUpdateRoundTrip) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const UpdatePackage p{static_cast<std::uint32_t>(rng.next()), static_cast<std::uint32_t>(rng.next()),
                          static_cast<std::uint32_t>(rng.next()), static_cast<std::int8_t>(rng.bernoulli(0.5) ? 1 : -1)};
    EXPECT_EQ(decode_package(encode_package(p)), p);
  }
}

TEST(Wire, TestPackageRoundTripAndErrors) {
  for (Label t : {Label::Positive, Label::Negative})
    for (Label p : {Label::Positive, Label::Negative}) {
      const TestPackage pkg{3, 4, t, p};
      EXPECT_EQ(decode_test_package(encode_test_package(pkg)), pkg);
    }
  auto bytes = encode_test_package(TestPackage{3, 4, Label::Positive, Label::Negative});
  bytes[9] = 0;
  EXPECT_THROW(decode_test_package(bytes), DecodeError);
  EXPECT_THROW(decode_test_package(std::span<const std::uint8_t>(bytes.data(), 9)), DecodeError);
}

TEST(DescriptorJson, RoundTripIsExact) {
  auto d = sample_descriptor();
  d.weights[0] = 0.1 + 0.2;  // not representable in short decimal
  const auto back = descriptor_from_json(nlohmann::json::parse(descriptor_to_json(d).dump()));
  EXPECT_EQ(back, d);
  EXPECT_EQ(descriptor_digest(back), descriptor_digest(d));
}

TEST(DescriptorValidation, WeightLengthMustMatchBins) {
  auto d = sample_descriptor();
  EXPECT_NO_THROW(d.validate());
  d.weights.push_back(1.0);
  EXPECT_THROW(d.validate(), ProtocolError);
}

TEST(Crypto, Sha256AndGitBlob) {
  const std::string abc = "abc";
  const auto h = sha256(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(abc.data()), 3));
  EXPECT_EQ(to_hex(h), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const std::string hello = "hello";
  EXPECT_EQ(git_blob_id(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(hello.data()), 5)),
            "b6fc4c620b67d95f953a5c1c1230aaab5db5a1b0");
}
