#include "pizzamon/digest.hpp"

#include <openssl/evp.h>
#include <zlib.h>

#include "pizzamon/error.hpp"

namespace pizzamon {

Digest sha256(std::span<const std::uint8_t> bytes) {
  // Fetched once; implicit fetching on every call dominates short inputs.
  static EVP_MD* const md = EVP_MD_fetch(nullptr, "SHA256", nullptr);
  Digest out{};
  unsigned int len = 0;
  if (!md || EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, md, nullptr) != 1 || len != out.size()) {
    throw std::runtime_error("sha256 failed");
  }
  return out;
}

Digest sha256(std::string_view bytes) {
  return sha256(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

std::string to_hex(const Digest& d) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (auto b : d) {
    s.push_back(kHex[b >> 4]);
    s.push_back(kHex[b & 0xF]);
  }
  return s;
}

Digest digest_from_hex(std::string_view hex) {
  auto nibble = [&](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw Error(ErrorCode::kParseError, "bad hex digit");
  };
  if (hex.size() != 64) throw Error(ErrorCode::kParseError, "digest must be 64 hex chars");
  Digest d{};
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  }
  return d;
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong c = ::crc32(0L, Z_NULL, 0);
  c = ::crc32(c, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(c);
}

}  // namespace pizzamon
