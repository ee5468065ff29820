#include "secvm/feature_hash.hpp"

#include "secvm/error.hpp"

namespace secvm {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

constexpr std::uint64_t rotl(std::uint64_t x, int b) noexcept { return (x << b) | (x >> (64 - b)); }

std::uint64_t load_le64(const std::uint8_t* p) noexcept {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

HashSeed parse_hash_seed(std::string_view hex) {
  if (hex.size() != 64) throw ConfigError("hash seed must be 64 hex characters");
  HashSeed seed{};
  for (std::size_t i = 0; i < 32; ++i) {
    int hi = hex_value(hex[2 * i]);
    int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw ConfigError("hash seed contains a non-hex character");
    seed[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return seed;
}

std::string hash_seed_to_hex(const HashSeed& seed) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (auto b : seed) {
    out += kDigits[b >> 4];
    out += kDigits[b & 0xf];
  }
  return out;
}

void HashConfig::validate() const {
  if (num_bins < 1) throw ConfigError("number of hash bins must be at least 1");
}

std::uint64_t siphash24(std::uint64_t k0, std::uint64_t k1, std::span<const std::uint8_t> message) noexcept {
  std::uint64_t v0 = 0x736f6d6570736575ULL ^ k0;
  std::uint64_t v1 = 0x646f72616e646f6dULL ^ k1;
  std::uint64_t v2 = 0x6c7967656e657261ULL ^ k0;
  std::uint64_t v3 = 0x7465646279746573ULL ^ k1;

  auto round = [&] {
    v0 += v1; v1 = rotl(v1, 13); v1 ^= v0; v0 = rotl(v0, 32);
    v2 += v3; v3 = rotl(v3, 16); v3 ^= v2;
    v0 += v3; v3 = rotl(v3, 21); v3 ^= v0;
    v2 += v1; v1 = rotl(v1, 17); v1 ^= v2; v2 = rotl(v2, 32);
  };

  const std::size_t len = message.size();
  const std::size_t full = len - len % 8;
  for (std::size_t i = 0; i < full; i += 8) {
    std::uint64_t m = load_le64(message.data() + i);
    v3 ^= m;
    round();
    round();
    v0 ^= m;
  }
  std::uint64_t last = static_cast<std::uint64_t>(len & 0xff) << 56;
  for (std::size_t i = 0; i < len % 8; ++i) last |= std::uint64_t{message[full + i]} << (8 * i);
  v3 ^= last;
  round();
  round();
  v0 ^= last;

  v2 ^= 0xff;
  round();
  round();
  round();
  round();
  return v0 ^ v1 ^ v2 ^ v3;
}

std::uint64_t keyed_hash(const HashSeed& seed, std::uint64_t raw_index) noexcept {
  const std::uint64_t k0 = load_le64(seed.data()) ^ load_le64(seed.data() + 16);
  const std::uint64_t k1 = load_le64(seed.data() + 8) ^ load_le64(seed.data() + 24);
  std::array<std::uint8_t, 8> msg{};
  for (int i = 0; i < 8; ++i) msg[i] = static_cast<std::uint8_t>(raw_index >> (8 * i));
  return siphash24(k0, k1, msg);
}

std::uint32_t hash_index(std::uint64_t raw_index, const HashConfig& config) noexcept {
  if (config.num_bins <= 1) return 0;
  return static_cast<std::uint32_t>(keyed_hash(config.seed, raw_index) % config.num_bins);
}

SparseVector hash_vector(const SparseVector& x, const HashConfig& config) {
  std::vector<SparseEntry> binned;
  binned.reserve(x.size());
  for (const auto& e : x.entries()) binned.push_back({hash_index(e.index, config), e.value});
  return SparseVector::from_entries(std::move(binned));
}

Dataset hash_dataset(const Dataset& dataset, const HashConfig& config) {
  config.validate();
  Dataset out{{}, config.num_bins};
  out.samples.reserve(dataset.size());
  for (const auto& s : dataset.samples) out.samples.push_back({hash_vector(s.features, config), s.label});
  return out;
}

}  // namespace secvm
