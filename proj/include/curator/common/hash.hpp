#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace curator {

/// Lowercase hex SHA-256 of a byte buffer.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

/// Short content id: the first 16 hex chars of the SHA-256 digest.
std::string content_id(std::span<const std::uint8_t> bytes);
std::string content_id(std::string_view text);

/// SplitMix64 finalizer; used to derive independent deterministic streams
/// from (seed, key) tuples.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_string(std::string_view text) noexcept;

}  // namespace curator
