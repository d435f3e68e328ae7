#include "wvsim/kcb.hpp"

#include <cstring>

namespace wvsim {

std::array<uint8_t, kKcbSize> serialize_kcb(const KeyControlBlock& kcb) {
  std::array<uint8_t, kKcbSize> buf{};
  std::memcpy(buf.data(), kKcbMagic.data(), 4);
  store_be32(kcb.nonce, buf.data() + 4);
  store_be32(kcb.ttl, buf.data() + 8);
  store_be32(kcb.control_bits, buf.data() + 12);
  return buf;
}

Status parse_kcb(ByteView raw, KeyControlBlock& out) {
  if (raw.size() != kKcbSize) return Status::LengthError;
  if (std::memcmp(raw.data(), kKcbMagic.data(), 4) != 0) {
    return Status::BadKcbMagic;
  }
  out.nonce = load_be32(raw.data() + 4);
  out.ttl = load_be32(raw.data() + 8);
  out.control_bits = load_be32(raw.data() + 12);
  return Status::Ok;
}

}  // namespace wvsim
