#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace wvsim {

using Bytes = std::vector<uint8_t>;
using ByteView = std::span<const uint8_t>;

using Aes128Key = std::array<uint8_t, 16>;
using AesIv = std::array<uint8_t, 16>;
using MacKey = std::array<uint8_t, 32>;
using MacTag = std::array<uint8_t, 32>;
using DeviceId = std::array<uint8_t, 32>;

std::string to_hex(ByteView data);
std::optional<Bytes> from_hex(std::string_view hex);

// Constant-time comparison; false when lengths differ.
bool ct_equal(ByteView a, ByteView b);

void append(Bytes& dst, ByteView src);
inline void append(Bytes& dst, std::string_view src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

inline ByteView view(const Bytes& b) { return ByteView(b); }
inline Bytes to_bytes(ByteView v) { return Bytes(v.begin(), v.end()); }
inline Bytes to_bytes(std::string_view s) {
  return Bytes(s.begin(), s.end());
}

// Overwrites key material before the container is released.
void wipe(std::span<uint8_t> data);

inline uint16_t load_be16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] << 8 | p[1]);
}
inline uint32_t load_be32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) << 24 | static_cast<uint32_t>(p[1]) << 16 |
         static_cast<uint32_t>(p[2]) << 8 | static_cast<uint32_t>(p[3]);
}
inline void store_be16(uint16_t v, uint8_t* p) {
  p[0] = static_cast<uint8_t>(v >> 8);
  p[1] = static_cast<uint8_t>(v);
}
inline void store_be32(uint32_t v, uint8_t* p) {
  p[0] = static_cast<uint8_t>(v >> 24);
  p[1] = static_cast<uint8_t>(v >> 16);
  p[2] = static_cast<uint8_t>(v >> 8);
  p[3] = static_cast<uint8_t>(v);
}
inline void append_be16(Bytes& dst, uint16_t v) {
  uint8_t buf[2];
  store_be16(v, buf);
  dst.insert(dst.end(), buf, buf + 2);
}
inline void append_be32(Bytes& dst, uint32_t v) {
  uint8_t buf[4];
  store_be32(v, buf);
  dst.insert(dst.end(), buf, buf + 4);
}

}  // namespace wvsim
