#pragma once

#include <array>
#include <cstdint>

#include "wvsim/bytes.hpp"
#include "wvsim/status.hpp"

namespace wvsim {

// Control bit assignments inside KeyControlBlock::control_bits.
namespace kcb_bits {
inline constexpr uint32_t kAllowContentDecrypt = 1u << 0;
inline constexpr uint32_t kAllowGenericEncrypt = 1u << 1;
inline constexpr uint32_t kAllowGenericDecrypt = 1u << 2;
inline constexpr uint32_t kAllowGenericSign = 1u << 3;
inline constexpr uint32_t kAllowGenericVerify = 1u << 4;
inline constexpr uint32_t kNonceRequired = 1u << 5;
inline constexpr uint32_t kAntiRollbackRequired = 1u << 6;
}  // namespace kcb_bits

inline constexpr size_t kKcbSize = 16;
inline constexpr std::array<uint8_t, 4> kKcbMagic = {'k', 'c', 't', 'l'};

// A 16-byte policy record bound to one content key.  All fields are stored
// big-endian on the wire.  ttl is in seconds; 0 means the key never expires.
struct KeyControlBlock {
  uint32_t nonce = 0;
  uint32_t ttl = 0;
  uint32_t control_bits = 0;

  bool operator==(const KeyControlBlock&) const = default;
};

std::array<uint8_t, kKcbSize> serialize_kcb(const KeyControlBlock& kcb);

// Rejects blocks whose magic does not match (BadKcbMagic) or whose size is
// not exactly 16 bytes (LengthError).
Status parse_kcb(ByteView raw, KeyControlBlock& out);

}  // namespace wvsim
