#include "secvm/client.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "secvm/svm.hpp"

namespace secvm {

Consistency verify_consistency(std::span<const Digest> digests, const Digest& reference) {
  if (digests.empty()) throw ProtocolError("consistency check needs at least one digest");
  return std::all_of(digests.begin(), digests.end(), [&](const Digest& d) { return d == reference; })
             ? Consistency::Ok
             : Consistency::AttackSuspected;
}

Client::Client(std::uint64_t client_id, Sample sample, std::uint64_t seed)
    : id_(client_id), sample_(std::move(sample)), rng_(seed) {}

Role Client::assign_role(const ExperimentDescriptor& desc) {
  auto it = roles_.find(desc.experiment_id);
  if (it != roles_.end()) return it->second;
  const Role r = rng_.bernoulli(desc.train_fraction) ? Role::Train : Role::Test;
  roles_.emplace(desc.experiment_id, r);
  return r;
}

void Client::pin_role(std::uint32_t experiment_id, Role role) {
  auto [it, inserted] = roles_.emplace(experiment_id, role);
  if (!inserted && it->second != role) throw ProtocolError("role for an experiment cannot change once assigned");
}

std::optional<Role> Client::role(std::uint32_t experiment_id) const {
  auto it = roles_.find(experiment_id);
  if (it == roles_.end()) return std::nullopt;
  return it->second;
}

const SparseVector& Client::hashed_features(const HashConfig& cfg) {
  if (!cached_cfg_ || *cached_cfg_ != cfg) {
    cached_hashed_ = hash_vector(sample_.features, cfg);
    cached_cfg_ = cfg;
  }
  return cached_hashed_;
}

RoundOutput Client::produce_round(const ExperimentDescriptor& desc, double now) {
  if (!(now < desc.deadline)) {
    spdlog::debug("client skips iteration {}: window already closed", desc.iteration);
    return std::monostate{};
  }
  const Role r = assign_role(desc);
  const SparseVector& x = hashed_features(desc.hash_config());

  if (r == Role::Test) {
    TestPackage pkg{desc.experiment_id, desc.iteration, sample_.label, predict(desc.averaged_weights, x)};
    return Timed<TestPackage>{rng_.uniform(now, desc.deadline), pkg};
  }

  const SparseVector g = local_update(desc.weights, x, sample_.label);
  if (g.empty()) return std::monostate{};
  const auto packages = packetize(g, desc.experiment_id, desc.iteration);
  return schedule_sends<UpdatePackage>(packages, now, desc.deadline, rng_);
}

}  // namespace secvm
