#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "secvm/protocol.hpp"

namespace secvm {

enum class Role { Train, Test };

enum class Consistency { Ok, AttackSuspected };

// Ok iff every digest equals the reference. Throws ProtocolError on an empty list.
Consistency verify_consistency(std::span<const Digest> digests, const Digest& reference);

using RoundOutput = std::variant<std::monostate, std::vector<Timed<UpdatePackage>>, Timed<TestPackage>>;

// A data-holding participant. The client id exists for the simulator's
// bookkeeping only; nothing derived from it is ever written into a message.
class Client {
 public:
  Client(std::uint64_t client_id, Sample sample, std::uint64_t seed);

  std::uint64_t id() const noexcept { return id_; }
  const Sample& sample() const noexcept { return sample_; }
  Rng& rng() noexcept { return rng_; }

  // Train with probability desc.train_fraction on first encounter; sticky.
  Role assign_role(const ExperimentDescriptor& desc);
  // Pins the role for an experiment before first encounter. Throws
  // ProtocolError if a different role was already assigned.
  void pin_role(std::uint32_t experiment_id, Role role);
  std::optional<Role> role(std::uint32_t experiment_id) const;

  // Features hashed with this configuration; cached per configuration.
  const SparseVector& hashed_features(const HashConfig& cfg);

  // Train: hashed local update, packetized and spread over [now, deadline).
  // Test: one TestPackage for the averaged model at a uniform time in the window.
  // Empty when there is nothing to send or the window is already over. The
  // caller must have verified the descriptor's consistency.
  RoundOutput produce_round(const ExperimentDescriptor& desc, double now);

 private:
  std::uint64_t id_;
  Sample sample_;
  Rng rng_;
  std::map<std::uint32_t, Role> roles_;
  std::optional<HashConfig> cached_cfg_;
  SparseVector cached_hashed_;
};

}  // namespace secvm
