#pragma once

#include "wvsim/bytes.hpp"
#include "wvsim/random.hpp"
#include "wvsim/status.hpp"

namespace wvsim {

// 128-byte root-of-trust record. Serialized layout:
//   device_id[32] | device_key[16] | provisioning_token[72] | magic[4] | crc[4]
// with the CRC-32 of the first 124 bytes stored big-endian.
struct Keybox {
  DeviceId device_id{};
  Aes128Key device_key{};
  std::array<uint8_t, 72> provisioning_token{};
  std::array<uint8_t, 4> magic{};
  uint32_t crc = 0;

  bool operator==(const Keybox&) const = default;
};

inline constexpr size_t kKeyboxSize = 128;
inline constexpr std::array<uint8_t, 4> kKeyboxMagic = {'k', 'b', 'o', 'x'};

enum class KeyboxVerdict { Ok, BadMagic, BadCrc };
const char* to_string(KeyboxVerdict v);

// Slices fields at fixed offsets; performs no magic/CRC validation.
Status parse_keybox(ByteView raw, Keybox& out);

std::array<uint8_t, kKeyboxSize> serialize_keybox(const Keybox& kb);

// Magic check first, then CRC over the first 124 serialized bytes.
KeyboxVerdict validate_keybox(const Keybox& kb);

// Fresh keybox with random id/key/token and a correct trailer.
Status generate_keybox(RandomSource& rng, Keybox& out);

// AES-128-CBC under a transport key, random IV prepended: IV | ciphertext.
Status wrap_keybox(const Keybox& kb, const Aes128Key& transport_key,
                   RandomSource& rng, Bytes& wrapped);

// Decrypts and re-validates; IntegrityError when the result is not a
// valid keybox (wrong transport key, garbled blob).
Status install_keybox(ByteView wrapped, const Aes128Key& transport_key,
                      Keybox& out);

}  // namespace wvsim
