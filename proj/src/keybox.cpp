#include "wvsim/keybox.hpp"

#include <cstring>

#include "wvsim/crc32.hpp"
#include "wvsim/crypto.hpp"

namespace wvsim {

const char* to_string(KeyboxVerdict v) {
  switch (v) {
    case KeyboxVerdict::Ok: return "OK";
    case KeyboxVerdict::BadMagic: return "BadMagic";
    case KeyboxVerdict::BadCrc: return "BadCrc";
  }
  return "Unknown";
}

Status parse_keybox(ByteView raw, Keybox& out) {
  if (raw.size() != kKeyboxSize) return Status::LengthError;
  std::memcpy(out.device_id.data(), raw.data(), 32);
  std::memcpy(out.device_key.data(), raw.data() + 32, 16);
  std::memcpy(out.provisioning_token.data(), raw.data() + 48, 72);
  std::memcpy(out.magic.data(), raw.data() + 120, 4);
  out.crc = load_be32(raw.data() + 124);
  return Status::Ok;
}

std::array<uint8_t, kKeyboxSize> serialize_keybox(const Keybox& kb) {
  std::array<uint8_t, kKeyboxSize> buf{};
  std::memcpy(buf.data(), kb.device_id.data(), 32);
  std::memcpy(buf.data() + 32, kb.device_key.data(), 16);
  std::memcpy(buf.data() + 48, kb.provisioning_token.data(), 72);
  std::memcpy(buf.data() + 120, kb.magic.data(), 4);
  store_be32(kb.crc, buf.data() + 124);
  return buf;
}

KeyboxVerdict validate_keybox(const Keybox& kb) {
  if (kb.magic != kKeyboxMagic) return KeyboxVerdict::BadMagic;
  const auto buf = serialize_keybox(kb);
  if (crc32(ByteView(buf.data(), 124)) != kb.crc) return KeyboxVerdict::BadCrc;
  return KeyboxVerdict::Ok;
}

Status generate_keybox(RandomSource& rng, Keybox& out) {
  if (!rng.fill(out.device_id) || !rng.fill(out.device_key) ||
      !rng.fill(out.provisioning_token)) {
    return Status::EntropyError;
  }
  out.magic = kKeyboxMagic;
  out.crc = 0;
  const auto buf = serialize_keybox(out);
  out.crc = crc32(ByteView(buf.data(), 124));
  return Status::Ok;
}

Status wrap_keybox(const Keybox& kb, const Aes128Key& transport_key,
                   RandomSource& rng, Bytes& wrapped) {
  AesIv iv{};
  if (!rng.fill(iv)) return Status::EntropyError;
  const auto raw = serialize_keybox(kb);
  Bytes ct;
  Status st = crypto::aes128_cbc_encrypt(transport_key, iv,
                                         ByteView(raw.data(), raw.size()), ct);
  if (st != Status::Ok) return st;
  wrapped.clear();
  append(wrapped, ByteView(iv.data(), iv.size()));
  append(wrapped, ct);
  return Status::Ok;
}

Status install_keybox(ByteView wrapped, const Aes128Key& transport_key,
                      Keybox& out) {
  if (wrapped.size() < 16 + 16) return Status::IntegrityError;
  AesIv iv{};
  std::memcpy(iv.data(), wrapped.data(), 16);
  Bytes pt;
  if (crypto::aes128_cbc_decrypt(transport_key, iv, wrapped.subspan(16), pt) !=
      Status::Ok) {
    return Status::IntegrityError;
  }
  Keybox kb;
  if (parse_keybox(pt, kb) != Status::Ok) return Status::IntegrityError;
  if (validate_keybox(kb) != KeyboxVerdict::Ok) return Status::IntegrityError;
  out = kb;
  return Status::Ok;
}

}  // namespace wvsim
