#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "secvm/data.hpp"

namespace secvm {

using HashSeed = std::array<std::uint8_t, 32>;

// 64 hex characters -> seed. Throws ConfigError otherwise.
HashSeed parse_hash_seed(std::string_view hex);
std::string hash_seed_to_hex(const HashSeed& seed);

struct HashConfig {
  std::uint32_t num_bins = 1;
  HashSeed seed{};

  void validate() const;
  friend bool operator==(const HashConfig&, const HashConfig&) = default;
};

// SipHash-2-4 with a 128-bit key.
std::uint64_t siphash24(std::uint64_t k0, std::uint64_t k1, std::span<const std::uint8_t> message) noexcept;

// The 32-byte seed is folded into the 128-bit SipHash key by xoring its two
// halves; the message is the raw index as 8 little-endian bytes.
std::uint64_t keyed_hash(const HashSeed& seed, std::uint64_t raw_index) noexcept;

std::uint32_t hash_index(std::uint64_t raw_index, const HashConfig& config) noexcept;

// Values of raw indices sharing a bin are summed; zero sums are dropped.
SparseVector hash_vector(const SparseVector& x, const HashConfig& config);

Dataset hash_dataset(const Dataset& dataset, const HashConfig& config);

}  // namespace secvm
