#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "secvm/crypto.hpp"
#include "secvm/data.hpp"
#include "secvm/error.hpp"
#include "secvm/feature_hash.hpp"
#include "secvm/random.hpp"

namespace secvm {

using Digest = Sha256;

// Everything the server publishes for one iteration. `weights` is the raw
// iterate clients compute margins against; `averaged_weights` is the model
// test clients evaluate.
struct ExperimentDescriptor {
  std::uint32_t experiment_id = 0;
  std::uint32_t iteration = 1;
  std::uint32_t num_bins = 1;
  HashSeed hash_seed{};
  double lambda = 1e-4;
  double train_fraction = 0.7;
  double class_weight_pos = 1.0;
  double class_weight_neg = 1.0;
  double deadline = 0.0;  // absolute, seconds
  std::vector<double> weights;
  std::vector<double> averaged_weights;

  HashConfig hash_config() const { return {num_bins, hash_seed}; }
  // Throws ProtocolError when the fields are mutually inconsistent.
  void validate() const;

  friend bool operator==(const ExperimentDescriptor&, const ExperimentDescriptor&) = default;
};

// One unit of an update vector. There is deliberately no sender field.
struct UpdatePackage {
  std::uint32_t experiment_id = 0;
  std::uint32_t iteration = 0;
  std::uint32_t feature_index = 0;
  std::int8_t sign = 1;

  friend bool operator==(const UpdatePackage&, const UpdatePackage&) = default;
};

struct TestPackage {
  std::uint32_t experiment_id = 0;
  std::uint32_t iteration = 0;
  Label true_label = Label::Positive;
  Label predicted_label = Label::Positive;

  friend bool operator==(const TestPackage&, const TestPackage&) = default;
};

template <class Message>
struct Timed {
  double time = 0.0;
  Message message;
};

inline constexpr std::size_t kUpdatePackageWireSize = 13;
inline constexpr std::size_t kTestPackageWireSize = 10;

// |v| packages of sign sgn(v) for every entry (j, v). Total count is ||g||_1.
std::vector<UpdatePackage> packetize(const SparseVector& g, std::uint32_t experiment_id, std::uint32_t iteration);

// Per-index signed sum of a package multiset, the inverse of packetize.
SparseVector reaggregate(std::span<const UpdatePackage> packages);

// Independent uniform send time in [now, deadline) for every message.
template <class Message>
std::vector<Timed<Message>> schedule_sends(std::span<const Message> messages, double now, double deadline, Rng& rng) {
  if (!(now < deadline)) throw SchedulingError("send window is empty: now >= deadline");
  std::vector<Timed<Message>> out;
  out.reserve(messages.size());
  for (const auto& m : messages) out.push_back({rng.uniform(now, deadline), m});
  return out;
}

// Fixed-order byte layout: integers big-endian, doubles as little-endian
// IEEE-754, each weight vector preceded by its length as a big-endian u64.
std::vector<std::uint8_t> canonical_bytes(const ExperimentDescriptor& desc);
Digest descriptor_digest(const ExperimentDescriptor& desc);
std::string digest_hex(const Digest& d);
Digest parse_digest_hex(const std::string& hex);

// experiment_id (4, BE) | iteration (4, BE) | feature_index (4, BE) | sign (1, signed)
std::array<std::uint8_t, kUpdatePackageWireSize> encode_package(const UpdatePackage& pkg);
UpdatePackage decode_package(std::span<const std::uint8_t> bytes);

// experiment_id (4, BE) | iteration (4, BE) | true label (1) | predicted label (1)
std::array<std::uint8_t, kTestPackageWireSize> encode_test_package(const TestPackage& pkg);
TestPackage decode_test_package(std::span<const std::uint8_t> bytes);

nlohmann::json descriptor_to_json(const ExperimentDescriptor& desc);
ExperimentDescriptor descriptor_from_json(const nlohmann::json& j);

}  // namespace secvm
