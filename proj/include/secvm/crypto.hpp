#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace secvm {

using Sha256 = std::array<std::uint8_t, 32>;

Sha256 sha256(std::span<const std::uint8_t> bytes);

// Object id git would assign to a blob with these contents (SHA-1 over
// "blob <size>\0" followed by the bytes), as 40 hex characters.
std::string git_blob_id(std::span<const std::uint8_t> bytes);

std::string to_hex(std::span<const std::uint8_t> bytes);

}  // namespace secvm
