#include "secvm/crypto.hpp"

#include <openssl/evp.h>

#include <memory>

#include "secvm/error.hpp"

namespace secvm {

namespace {

using MdCtx = std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)>;

template <std::size_t N>
std::array<std::uint8_t, N> digest(const EVP_MD* md, std::span<const std::uint8_t> prefix,
                                   std::span<const std::uint8_t> bytes) {
  MdCtx ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  std::array<std::uint8_t, N> out{};
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), md, nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), prefix.data(), prefix.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1 || len != N)
    throw InvariantError("OpenSSL digest failed");
  return out;
}

}  // namespace

Sha256 sha256(std::span<const std::uint8_t> bytes) { return digest<32>(EVP_sha256(), {}, bytes); }

std::string git_blob_id(std::span<const std::uint8_t> bytes) {
  std::string header = "blob " + std::to_string(bytes.size());
  header.push_back('\0');
  auto id = digest<20>(EVP_sha1(), {reinterpret_cast<const std::uint8_t*>(header.data()), header.size()}, bytes);
  return to_hex(id);
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out += kDigits[b >> 4];
    out += kDigits[b & 0xf];
  }
  return out;
}

}  // namespace secvm
