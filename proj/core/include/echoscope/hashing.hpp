#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace echoscope {

// Lower-case hex SHA-256 of the bytes of `text`.
std::string sha256_hex(std::string_view text);

// Incremental SHA-256 for digests over many records.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::string_view bytes);
  void update(std::span<const std::byte> bytes);
  std::string hex_digest();

 private:
  void* ctx_;
};

std::uint32_t crc32(std::span<const std::byte> bytes, std::uint32_t seed = 0);

// 64-bit FNV-1a; stable across platforms, used for feature hashing.
constexpr std::uint64_t fnv1a64(std::string_view text,
                                std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept {
  std::uint64_t h = basis;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace echoscope
