#pragma once

#include <memory>

#include "wvsim/bytes.hpp"
#include "wvsim/status.hpp"

namespace wvsim::crypto {

// AES-128-CBC with PKCS#7 padding. Decrypt reports BadPadding on any
// padding inconsistency.
Status aes128_cbc_encrypt(const Aes128Key& key, const AesIv& iv, ByteView pt,
                          Bytes& ct);
Status aes128_cbc_decrypt(const Aes128Key& key, const AesIv& iv, ByteView ct,
                          Bytes& pt);

// Single-block AES-128, no padding. Used for CMAC and 16-byte control
// block wrapping.
Status aes128_encrypt_block(const Aes128Key& key, const uint8_t in[16],
                            uint8_t out[16]);
Status aes128_decrypt_block(const Aes128Key& key, const uint8_t in[16],
                            uint8_t out[16]);

// AES-128-CTR keystream with big-endian increment over the full 16-byte
// counter. One instance keeps keystream position across calls, so a
// buffer split into several transform() calls yields the same bytes as a
// single call.
class AesCtrStream {
 public:
  AesCtrStream(const Aes128Key& key, const AesIv& iv);
  ~AesCtrStream();

  AesCtrStream(const AesCtrStream&) = delete;
  AesCtrStream& operator=(const AesCtrStream&) = delete;

  bool valid() const { return ctx_ != nullptr; }
  Status transform(ByteView in, uint8_t* out);

 private:
  void* ctx_;
};

MacTag hmac_sha256(ByteView key, ByteView msg);

// AES-128-CMAC (RFC 4493 subkey schedule over the AES block).
std::array<uint8_t, 16> aes128_cmac(const Aes128Key& key, ByteView msg);

std::array<uint8_t, 20> sha1(ByteView data);

}  // namespace wvsim::crypto
