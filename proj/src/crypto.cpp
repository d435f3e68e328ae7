#include "wvsim/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>

#include <cstring>

namespace wvsim::crypto {

namespace {

struct CipherCtx {
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  ~CipherCtx() { EVP_CIPHER_CTX_free(ctx); }
};

Status cbc_run(const Aes128Key& key, const AesIv& iv, ByteView in, Bytes& out,
               bool encrypt) {
  CipherCtx c;
  if (!c.ctx) return Status::CryptoError;
  if (EVP_CipherInit_ex(c.ctx, EVP_aes_128_cbc(), nullptr, key.data(),
                        iv.data(), encrypt ? 1 : 0) != 1) {
    return Status::CryptoError;
  }
  out.resize(in.size() + 16);
  int len1 = 0;
  if (EVP_CipherUpdate(c.ctx, out.data(), &len1, in.data(),
                       static_cast<int>(in.size())) != 1) {
    return encrypt ? Status::CryptoError : Status::BadPadding;
  }
  int len2 = 0;
  if (EVP_CipherFinal_ex(c.ctx, out.data() + len1, &len2) != 1) {
    return encrypt ? Status::CryptoError : Status::BadPadding;
  }
  out.resize(static_cast<size_t>(len1) + static_cast<size_t>(len2));
  return Status::Ok;
}

Status ecb_block(const Aes128Key& key, const uint8_t in[16], uint8_t out[16],
                 bool encrypt) {
  CipherCtx c;
  if (!c.ctx) return Status::CryptoError;
  if (EVP_CipherInit_ex(c.ctx, EVP_aes_128_ecb(), nullptr, key.data(), nullptr,
                        encrypt ? 1 : 0) != 1) {
    return Status::CryptoError;
  }
  EVP_CIPHER_CTX_set_padding(c.ctx, 0);
  int len = 0;
  if (EVP_CipherUpdate(c.ctx, out, &len, in, 16) != 1 || len != 16) {
    return Status::CryptoError;
  }
  int fin = 0;
  if (EVP_CipherFinal_ex(c.ctx, out + len, &fin) != 1 || fin != 0) {
    return Status::CryptoError;
  }
  return Status::Ok;
}

// GF(2^128) doubling used by the CMAC subkey schedule.
void shift_left_xor(std::array<uint8_t, 16>& block) {
  const bool msb = block[0] & 0x80;
  for (size_t i = 0; i + 1 < block.size(); ++i) {
    block[i] = static_cast<uint8_t>(block[i] << 1 | block[i + 1] >> 7);
  }
  block[15] = static_cast<uint8_t>(block[15] << 1);
  if (msb) block[15] ^= 0x87;
}

void xor_into(uint8_t* dst, const uint8_t* src, size_t n) {
  for (size_t i = 0; i < n; ++i) dst[i] ^= src[i];
}

}  // namespace

Status aes128_cbc_encrypt(const Aes128Key& key, const AesIv& iv, ByteView pt,
                          Bytes& ct) {
  return cbc_run(key, iv, pt, ct, true);
}

Status aes128_cbc_decrypt(const Aes128Key& key, const AesIv& iv, ByteView ct,
                          Bytes& pt) {
  return cbc_run(key, iv, ct, pt, false);
}

Status aes128_encrypt_block(const Aes128Key& key, const uint8_t in[16],
                            uint8_t out[16]) {
  return ecb_block(key, in, out, true);
}

Status aes128_decrypt_block(const Aes128Key& key, const uint8_t in[16],
                            uint8_t out[16]) {
  return ecb_block(key, in, out, false);
}

AesCtrStream::AesCtrStream(const Aes128Key& key, const AesIv& iv) {
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  if (ctx &&
      EVP_EncryptInit_ex(ctx, EVP_aes_128_ctr(), nullptr, key.data(),
                         iv.data()) != 1) {
    EVP_CIPHER_CTX_free(ctx);
    ctx = nullptr;
  }
  ctx_ = ctx;
}

AesCtrStream::~AesCtrStream() {
  EVP_CIPHER_CTX_free(static_cast<EVP_CIPHER_CTX*>(ctx_));
}

Status AesCtrStream::transform(ByteView in, uint8_t* out) {
  if (!ctx_) return Status::CryptoError;
  if (in.empty()) return Status::Ok;
  int len = 0;
  if (EVP_EncryptUpdate(static_cast<EVP_CIPHER_CTX*>(ctx_), out, &len,
                        in.data(), static_cast<int>(in.size())) != 1 ||
      static_cast<size_t>(len) != in.size()) {
    return Status::CryptoError;
  }
  return Status::Ok;
}

MacTag hmac_sha256(ByteView key, ByteView msg) {
  MacTag tag{};
  unsigned int len = 0;
  HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()),
       msg.empty() ? reinterpret_cast<const uint8_t*>("") : msg.data(),
       msg.size(), tag.data(), &len);
  return tag;
}

std::array<uint8_t, 16> aes128_cmac(const Aes128Key& key, ByteView msg) {
  std::array<uint8_t, 16> k1{};
  aes128_encrypt_block(key, k1.data(), k1.data());
  shift_left_xor(k1);
  std::array<uint8_t, 16> k2 = k1;
  shift_left_xor(k2);

  std::array<uint8_t, 16> state{};
  const size_t n = msg.size();
  // Process all complete blocks except the final one.
  size_t pos = 0;
  while (pos + 16 < n) {
    xor_into(state.data(), msg.data() + pos, 16);
    aes128_encrypt_block(key, state.data(), state.data());
    pos += 16;
  }

  std::array<uint8_t, 16> last{};
  const size_t rem = n - pos;
  if (n > 0 && rem == 16) {
    std::memcpy(last.data(), msg.data() + pos, 16);
    xor_into(last.data(), k1.data(), 16);
  } else {
    if (rem > 0) std::memcpy(last.data(), msg.data() + pos, rem);
    last[rem] = 0x80;
    xor_into(last.data(), k2.data(), 16);
  }
  xor_into(state.data(), last.data(), 16);
  aes128_encrypt_block(key, state.data(), state.data());
  return state;
}

std::array<uint8_t, 20> sha1(ByteView data) {
  std::array<uint8_t, 20> out{};
  SHA1(data.empty() ? reinterpret_cast<const uint8_t*>("") : data.data(),
       data.size(), out.data());
  return out;
}

}  // namespace wvsim::crypto
