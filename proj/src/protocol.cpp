#include "secvm/protocol.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <map>

namespace secvm {

void ExperimentDescriptor::validate() const {
  if (num_bins < 1) throw ProtocolError("descriptor has zero bins");
  if (weights.size() != num_bins || averaged_weights.size() != num_bins)
    throw ProtocolError("descriptor weight vectors do not match num_bins");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ProtocolError("train_fraction must lie in (0,1)");
  if (!(lambda > 0.0)) throw ProtocolError("lambda must be > 0");
  for (double v : weights)
    if (!std::isfinite(v)) throw ProtocolError("descriptor carries a non-finite weight");
}

std::vector<UpdatePackage> packetize(const SparseVector& g, std::uint32_t experiment_id, std::uint32_t iteration) {
  std::vector<UpdatePackage> out;
  out.reserve(g.l1_norm());
  for (const auto& e : g.entries()) {
    const std::int8_t sign = e.value > 0 ? 1 : -1;
    const std::uint64_t reps = static_cast<std::uint64_t>(e.value > 0 ? e.value : -e.value);
    for (std::uint64_t r = 0; r < reps; ++r) out.push_back({experiment_id, iteration, e.index, sign});
  }
  return out;
}

SparseVector reaggregate(std::span<const UpdatePackage> packages) {
  std::map<std::uint32_t, std::int64_t> sums;
  for (const auto& p : packages) sums[p.feature_index] += p.sign;
  std::vector<SparseEntry> entries;
  entries.reserve(sums.size());
  for (auto [j, v] : sums) entries.push_back({j, v});
  return SparseVector::from_entries(std::move(entries));
}

namespace {

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_be64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_f64le(std::vector<std::uint8_t>& out, double d) {
  const auto bits = std::bit_cast<std::uint64_t>(d);
  for (int s = 0; s < 64; s += 8) out.push_back(static_cast<std::uint8_t>(bits >> s));
}

void write_be32(std::uint8_t* p, std::uint32_t v) {
  p[0] = static_cast<std::uint8_t>(v >> 24);
  p[1] = static_cast<std::uint8_t>(v >> 16);
  p[2] = static_cast<std::uint8_t>(v >> 8);
  p[3] = static_cast<std::uint8_t>(v);
}

std::uint32_t read_be32(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

Label decode_label(std::uint8_t byte) {
  const auto v = static_cast<std::int8_t>(byte);
  if (v == 1) return Label::Positive;
  if (v == -1) return Label::Negative;
  throw DecodeError("label byte must be -1 or +1");
}

}  // namespace

std::vector<std::uint8_t> canonical_bytes(const ExperimentDescriptor& d) {
  std::vector<std::uint8_t> out;
  out.reserve(12 + 32 + 5 * 8 + 16 + 16 * d.weights.size());
  put_be32(out, d.experiment_id);
  put_be32(out, d.iteration);
  put_be32(out, d.num_bins);
  out.insert(out.end(), d.hash_seed.begin(), d.hash_seed.end());
  put_f64le(out, d.lambda);
  put_f64le(out, d.train_fraction);
  put_f64le(out, d.class_weight_pos);
  put_f64le(out, d.class_weight_neg);
  put_f64le(out, d.deadline);
  put_be64(out, d.weights.size());
  for (double w : d.weights) put_f64le(out, w);
  put_be64(out, d.averaged_weights.size());
  for (double w : d.averaged_weights) put_f64le(out, w);
  return out;
}

Digest descriptor_digest(const ExperimentDescriptor& desc) { return sha256(canonical_bytes(desc)); }

std::string digest_hex(const Digest& d) { return to_hex(d); }

Digest parse_digest_hex(const std::string& hex) {
  // Same alphabet and width as a hash seed.
  return parse_hash_seed(hex);
}

std::array<std::uint8_t, kUpdatePackageWireSize> encode_package(const UpdatePackage& pkg) {
  std::array<std::uint8_t, kUpdatePackageWireSize> out{};
  write_be32(out.data(), pkg.experiment_id);
  write_be32(out.data() + 4, pkg.iteration);
  write_be32(out.data() + 8, pkg.feature_index);
  out[12] = static_cast<std::uint8_t>(pkg.sign);
  return out;
}

UpdatePackage decode_package(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kUpdatePackageWireSize)
    throw DecodeError("update package must be exactly 13 bytes, got " + std::to_string(bytes.size()));
  const auto sign = static_cast<std::int8_t>(bytes[12]);
  if (sign != 1 && sign != -1) throw DecodeError("sign byte must be -1 or +1");
  return {read_be32(bytes.data()), read_be32(bytes.data() + 4), read_be32(bytes.data() + 8), sign};
}

std::array<std::uint8_t, kTestPackageWireSize> encode_test_package(const TestPackage& pkg) {
  std::array<std::uint8_t, kTestPackageWireSize> out{};
  write_be32(out.data(), pkg.experiment_id);
  write_be32(out.data() + 4, pkg.iteration);
  out[8] = static_cast<std::uint8_t>(static_cast<std::int8_t>(to_int(pkg.true_label)));
  out[9] = static_cast<std::uint8_t>(static_cast<std::int8_t>(to_int(pkg.predicted_label)));
  return out;
}

TestPackage decode_test_package(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kTestPackageWireSize)
    throw DecodeError("test package must be exactly 10 bytes, got " + std::to_string(bytes.size()));
  return {read_be32(bytes.data()), read_be32(bytes.data() + 4), decode_label(bytes[8]), decode_label(bytes[9])};
}

nlohmann::json descriptor_to_json(const ExperimentDescriptor& d) {
  return {
      {"experiment_id", d.experiment_id},
      {"iteration", d.iteration},
      {"num_bins", d.num_bins},
      {"hash_seed", hash_seed_to_hex(d.hash_seed)},
      {"lambda", d.lambda},
      {"train_fraction", d.train_fraction},
      {"class_weight_pos", d.class_weight_pos},
      {"class_weight_neg", d.class_weight_neg},
      {"deadline", d.deadline},
      {"weights", d.weights},
      {"averaged_weights", d.averaged_weights},
  };
}

ExperimentDescriptor descriptor_from_json(const nlohmann::json& j) {
  try {
    ExperimentDescriptor d;
    d.experiment_id = j.at("experiment_id").get<std::uint32_t>();
    d.iteration = j.at("iteration").get<std::uint32_t>();
    d.num_bins = j.at("num_bins").get<std::uint32_t>();
    d.hash_seed = parse_hash_seed(j.at("hash_seed").get<std::string>());
    d.lambda = j.at("lambda").get<double>();
    d.train_fraction = j.at("train_fraction").get<double>();
    d.class_weight_pos = j.at("class_weight_pos").get<double>();
    d.class_weight_neg = j.at("class_weight_neg").get<double>();
    d.deadline = j.at("deadline").get<double>();
    d.weights = j.at("weights").get<std::vector<double>>();
    d.averaged_weights = j.at("averaged_weights").get<std::vector<double>>();
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw DecodeError(std::string("descriptor JSON: ") + e.what());
  }
}

}  // namespace secvm
