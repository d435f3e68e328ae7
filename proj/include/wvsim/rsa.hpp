#pragma once

#include <cstdint>

#include "wvsim/bytes.hpp"
#include "wvsim/random.hpp"
#include "wvsim/status.hpp"

typedef struct evp_pkey_st EVP_PKEY;

namespace wvsim::rsa {

enum class SigScheme : uint8_t {
  Pss = 1,
  Pkcs1v15 = 2,
};

const char* to_string(SigScheme s);

// Non-owning constants shared by the OAEP and PSS codecs (SHA-1 based).
inline constexpr size_t kHashLen = 20;

// RSA public key backed by an OpenSSL EVP_PKEY.  Copyable; copies share the
// underlying reference-counted key.
class RsaPublicKey {
 public:
  RsaPublicKey() = default;
  RsaPublicKey(const RsaPublicKey& other);
  RsaPublicKey& operator=(const RsaPublicKey& other);
  RsaPublicKey(RsaPublicKey&& other) noexcept;
  RsaPublicKey& operator=(RsaPublicKey&& other) noexcept;
  ~RsaPublicKey();

  static Status from_spki_der(ByteView der, RsaPublicKey& out);
  Status to_spki_der(Bytes& der) const;

  bool valid() const { return pkey_ != nullptr; }
  size_t modulus_bytes() const;

  // RSAES-OAEP with SHA-1 and MGF1-SHA1.  The seed is drawn from the
  // caller's RandomSource so the ciphertext is reproducible under a
  // deterministic source; the padding is assembled locally and only the raw
  // public-key operation is delegated to the library.
  Status encrypt_oaep_sha1(ByteView plaintext, RandomSource& rng,
                           Bytes& ciphertext) const;

  // Verifies a SHA-1 based signature (PSS or PKCS#1 v1.5) over msg using
  // the library's own padding checks.
  Status verify(SigScheme scheme, ByteView msg, ByteView sig) const;

  EVP_PKEY* handle() const { return pkey_; }

 private:
  friend class RsaKeyPair;
  explicit RsaPublicKey(EVP_PKEY* adopted) : pkey_(adopted) {}

  EVP_PKEY* pkey_ = nullptr;
};

// RSA private key (with its public half) backed by an OpenSSL EVP_PKEY.
class RsaKeyPair {
 public:
  RsaKeyPair() = default;
  RsaKeyPair(const RsaKeyPair& other);
  RsaKeyPair& operator=(const RsaKeyPair& other);
  RsaKeyPair(RsaKeyPair&& other) noexcept;
  RsaKeyPair& operator=(RsaKeyPair&& other) noexcept;
  ~RsaKeyPair();

  static Status generate(unsigned bits, RsaKeyPair& out);
  static Status from_pkcs8_der(ByteView der, RsaKeyPair& out);
  Status to_pkcs8_der(Bytes& der) const;

  bool valid() const { return pkey_ != nullptr; }
  size_t modulus_bytes() const;

  Status public_key(RsaPublicKey& out) const;

  // RSAES-OAEP-SHA1 decryption via the library code path.
  Status decrypt_oaep_sha1(ByteView ciphertext, Bytes& plaintext) const;

  // Signs SHA1(msg).  PSS salts are drawn from rng (the encoding is
  // assembled locally, then the raw private-key operation is applied);
  // PKCS#1 v1.5 is deterministic and ignores rng.
  Status sign(SigScheme scheme, ByteView msg, RandomSource& rng,
              Bytes& sig) const;

  EVP_PKEY* handle() const { return pkey_; }

 private:
  EVP_PKEY* pkey_ = nullptr;
};

}  // namespace wvsim::rsa
