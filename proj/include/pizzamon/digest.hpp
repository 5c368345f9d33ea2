#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace pizzamon {

using Digest = std::array<std::uint8_t, 32>;

inline constexpr Digest kZeroDigest{};

Digest sha256(std::span<const std::uint8_t> bytes);
Digest sha256(std::string_view bytes);

// Lowercase hex, 64 chars.
std::string to_hex(const Digest& d);
// Throws Error(kParseError) unless given exactly 64 hex chars.
Digest digest_from_hex(std::string_view hex);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

}  // namespace pizzamon
