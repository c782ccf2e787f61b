#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace vrag {

/// Lowercase hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);
std::string sha256_hex(std::span<const std::uint8_t> bytes);

/// Stable 64-bit FNV-1a; used wherever a seed must be derived from text.
std::uint64_t fnv1a64(std::string_view text) noexcept;

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed for slot `index` of a fan-out rooted at `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(seed ^ splitmix64(index + 0x51ed270b27f3b1a5ULL));
}

}  // namespace vrag
