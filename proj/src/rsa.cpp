#include "wvsim/rsa.hpp"

#include <openssl/evp.h>
#include <openssl/rsa.h>
#include <openssl/x509.h>

#include <cstring>
#include <memory>

#include "wvsim/crypto.hpp"

namespace wvsim::rsa {

namespace {

struct CtxFree {
  void operator()(EVP_PKEY_CTX* c) const { EVP_PKEY_CTX_free(c); }
};
using CtxPtr = std::unique_ptr<EVP_PKEY_CTX, CtxFree>;

CtxPtr make_ctx(EVP_PKEY* pkey) {
  return CtxPtr(EVP_PKEY_CTX_new_from_pkey(nullptr, pkey, nullptr));
}

Bytes mgf1_sha1(ByteView seed, size_t out_len) {
  Bytes out;
  out.reserve(out_len + kHashLen);
  Bytes block(seed.begin(), seed.end());
  block.resize(seed.size() + 4);
  for (uint32_t counter = 0; out.size() < out_len; ++counter) {
    store_be32(counter, block.data() + seed.size());
    const auto h = crypto::sha1(block);
    out.insert(out.end(), h.begin(), h.end());
  }
  out.resize(out_len);
  return out;
}

// m^e mod n on a full-width encoded block.
Status raw_public_op(EVP_PKEY* pkey, const Bytes& em, Bytes& out) {
  CtxPtr ctx = make_ctx(pkey);
  if (!ctx || EVP_PKEY_encrypt_init(ctx.get()) <= 0 ||
      EVP_PKEY_CTX_set_rsa_padding(ctx.get(), RSA_NO_PADDING) <= 0) {
    return Status::CryptoError;
  }
  size_t out_len = 0;
  if (EVP_PKEY_encrypt(ctx.get(), nullptr, &out_len, em.data(), em.size()) <=
      0) {
    return Status::CryptoError;
  }
  out.resize(out_len);
  if (EVP_PKEY_encrypt(ctx.get(), out.data(), &out_len, em.data(),
                       em.size()) <= 0) {
    return Status::CryptoError;
  }
  out.resize(out_len);
  return Status::Ok;
}

// m^d mod n on a full-width encoded block.
Status raw_private_op(EVP_PKEY* pkey, const Bytes& em, Bytes& out) {
  CtxPtr ctx = make_ctx(pkey);
  if (!ctx || EVP_PKEY_sign_init(ctx.get()) <= 0 ||
      EVP_PKEY_CTX_set_rsa_padding(ctx.get(), RSA_NO_PADDING) <= 0) {
    return Status::CryptoError;
  }
  size_t out_len = 0;
  if (EVP_PKEY_sign(ctx.get(), nullptr, &out_len, em.data(), em.size()) <= 0) {
    return Status::CryptoError;
  }
  out.resize(out_len);
  if (EVP_PKEY_sign(ctx.get(), out.data(), &out_len, em.data(), em.size()) <=
      0) {
    return Status::CryptoError;
  }
  out.resize(out_len);
  return Status::Ok;
}

}  // namespace

const char* to_string(SigScheme s) {
  switch (s) {
    case SigScheme::Pss: return "PSS";
    case SigScheme::Pkcs1v15: return "PKCS1v15";
  }
  return "Unknown";
}

RsaPublicKey::RsaPublicKey(const RsaPublicKey& other) : pkey_(other.pkey_) {
  if (pkey_) EVP_PKEY_up_ref(pkey_);
}

RsaPublicKey& RsaPublicKey::operator=(const RsaPublicKey& other) {
  if (this == &other) return *this;
  if (other.pkey_) EVP_PKEY_up_ref(other.pkey_);
  EVP_PKEY_free(pkey_);
  pkey_ = other.pkey_;
  return *this;
}

RsaPublicKey::RsaPublicKey(RsaPublicKey&& other) noexcept
    : pkey_(other.pkey_) {
  other.pkey_ = nullptr;
}

RsaPublicKey& RsaPublicKey::operator=(RsaPublicKey&& other) noexcept {
  if (this == &other) return *this;
  EVP_PKEY_free(pkey_);
  pkey_ = other.pkey_;
  other.pkey_ = nullptr;
  return *this;
}

RsaPublicKey::~RsaPublicKey() { EVP_PKEY_free(pkey_); }

Status RsaPublicKey::from_spki_der(ByteView der, RsaPublicKey& out) {
  const unsigned char* p = der.data();
  EVP_PKEY* pkey = d2i_PUBKEY(nullptr, &p, static_cast<long>(der.size()));
  if (!pkey) return Status::MalformedKey;
  if (p != der.data() + der.size() || !EVP_PKEY_is_a(pkey, "RSA")) {
    EVP_PKEY_free(pkey);
    return Status::MalformedKey;
  }
  out = RsaPublicKey(pkey);
  return Status::Ok;
}

Status RsaPublicKey::to_spki_der(Bytes& der) const {
  if (!pkey_) return Status::NoRsaKey;
  int len = i2d_PUBKEY(pkey_, nullptr);
  if (len <= 0) return Status::CryptoError;
  der.resize(static_cast<size_t>(len));
  unsigned char* p = der.data();
  if (i2d_PUBKEY(pkey_, &p) != len) return Status::CryptoError;
  return Status::Ok;
}

size_t RsaPublicKey::modulus_bytes() const {
  return pkey_ ? static_cast<size_t>(EVP_PKEY_get_size(pkey_)) : 0;
}

Status RsaPublicKey::encrypt_oaep_sha1(ByteView plaintext, RandomSource& rng,
                                       Bytes& ciphertext) const {
  if (!pkey_) return Status::NoRsaKey;
  const size_t k = modulus_bytes();
  if (k < 2 * kHashLen + 2 || plaintext.size() > k - 2 * kHashLen - 2) {
    return Status::KeyLengthError;
  }
  const size_t db_len = k - kHashLen - 1;

  Bytes db(db_len, 0);
  const auto lhash = crypto::sha1(ByteView{});
  std::memcpy(db.data(), lhash.data(), kHashLen);
  db[db_len - plaintext.size() - 1] = 0x01;
  if (!plaintext.empty()) {
    std::memcpy(db.data() + db_len - plaintext.size(), plaintext.data(),
                plaintext.size());
  }

  std::array<uint8_t, kHashLen> seed{};
  if (!rng.fill(seed)) return Status::EntropyError;

  const Bytes db_mask = mgf1_sha1(ByteView(seed.data(), seed.size()), db_len);
  for (size_t i = 0; i < db_len; ++i) db[i] ^= db_mask[i];
  const Bytes seed_mask = mgf1_sha1(db, kHashLen);
  for (size_t i = 0; i < kHashLen; ++i) seed[i] ^= seed_mask[i];

  Bytes em(k, 0);
  std::memcpy(em.data() + 1, seed.data(), kHashLen);
  std::memcpy(em.data() + 1 + kHashLen, db.data(), db_len);
  return raw_public_op(pkey_, em, ciphertext);
}

Status RsaPublicKey::verify(SigScheme scheme, ByteView msg,
                            ByteView sig) const {
  if (!pkey_) return Status::NoRsaKey;
  const auto digest = crypto::sha1(msg);
  CtxPtr ctx = make_ctx(pkey_);
  if (!ctx || EVP_PKEY_verify_init(ctx.get()) <= 0) {
    return Status::CryptoError;
  }
  if (scheme == SigScheme::Pss) {
    if (EVP_PKEY_CTX_set_rsa_padding(ctx.get(), RSA_PKCS1_PSS_PADDING) <= 0 ||
        EVP_PKEY_CTX_set_signature_md(ctx.get(), EVP_sha1()) <= 0 ||
        EVP_PKEY_CTX_set_rsa_mgf1_md(ctx.get(), EVP_sha1()) <= 0 ||
        EVP_PKEY_CTX_set_rsa_pss_saltlen(ctx.get(), RSA_PSS_SALTLEN_AUTO) <=
            0) {
      return Status::CryptoError;
    }
  } else {
    if (EVP_PKEY_CTX_set_rsa_padding(ctx.get(), RSA_PKCS1_PADDING) <= 0 ||
        EVP_PKEY_CTX_set_signature_md(ctx.get(), EVP_sha1()) <= 0) {
      return Status::CryptoError;
    }
  }
  const int rc = EVP_PKEY_verify(ctx.get(), sig.data(), sig.size(),
                                 digest.data(), digest.size());
  return rc == 1 ? Status::Ok : Status::BadSignature;
}

RsaKeyPair::RsaKeyPair(const RsaKeyPair& other) : pkey_(other.pkey_) {
  if (pkey_) EVP_PKEY_up_ref(pkey_);
}

RsaKeyPair& RsaKeyPair::operator=(const RsaKeyPair& other) {
  if (this == &other) return *this;
  if (other.pkey_) EVP_PKEY_up_ref(other.pkey_);
  EVP_PKEY_free(pkey_);
  pkey_ = other.pkey_;
  return *this;
}

RsaKeyPair::RsaKeyPair(RsaKeyPair&& other) noexcept : pkey_(other.pkey_) {
  other.pkey_ = nullptr;
}

RsaKeyPair& RsaKeyPair::operator=(RsaKeyPair&& other) noexcept {
  if (this == &other) return *this;
  EVP_PKEY_free(pkey_);
  pkey_ = other.pkey_;
  other.pkey_ = nullptr;
  return *this;
}

RsaKeyPair::~RsaKeyPair() { EVP_PKEY_free(pkey_); }

Status RsaKeyPair::generate(unsigned bits, RsaKeyPair& out) {
  EVP_PKEY* pkey = EVP_PKEY_Q_keygen(nullptr, nullptr, "RSA",
                                     static_cast<size_t>(bits));
  if (!pkey) return Status::CryptoError;
  EVP_PKEY_free(out.pkey_);
  out.pkey_ = pkey;
  return Status::Ok;
}

Status RsaKeyPair::from_pkcs8_der(ByteView der, RsaKeyPair& out) {
  const unsigned char* p = der.data();
  PKCS8_PRIV_KEY_INFO* p8 =
      d2i_PKCS8_PRIV_KEY_INFO(nullptr, &p, static_cast<long>(der.size()));
  if (!p8) return Status::MalformedKey;
  if (p != der.data() + der.size()) {
    PKCS8_PRIV_KEY_INFO_free(p8);
    return Status::MalformedKey;
  }
  EVP_PKEY* pkey = EVP_PKCS82PKEY(p8);
  PKCS8_PRIV_KEY_INFO_free(p8);
  if (!pkey) return Status::MalformedKey;
  if (!EVP_PKEY_is_a(pkey, "RSA")) {
    EVP_PKEY_free(pkey);
    return Status::MalformedKey;
  }
  EVP_PKEY_free(out.pkey_);
  out.pkey_ = pkey;
  return Status::Ok;
}

Status RsaKeyPair::to_pkcs8_der(Bytes& der) const {
  if (!pkey_) return Status::NoRsaKey;
  PKCS8_PRIV_KEY_INFO* p8 = EVP_PKEY2PKCS8(pkey_);
  if (!p8) return Status::CryptoError;
  int len = i2d_PKCS8_PRIV_KEY_INFO(p8, nullptr);
  if (len <= 0) {
    PKCS8_PRIV_KEY_INFO_free(p8);
    return Status::CryptoError;
  }
  der.resize(static_cast<size_t>(len));
  unsigned char* p = der.data();
  const int written = i2d_PKCS8_PRIV_KEY_INFO(p8, &p);
  PKCS8_PRIV_KEY_INFO_free(p8);
  return written == len ? Status::Ok : Status::CryptoError;
}

size_t RsaKeyPair::modulus_bytes() const {
  return pkey_ ? static_cast<size_t>(EVP_PKEY_get_size(pkey_)) : 0;
}

Status RsaKeyPair::public_key(RsaPublicKey& out) const {
  if (!pkey_) return Status::NoRsaKey;
  int len = i2d_PUBKEY(pkey_, nullptr);
  if (len <= 0) return Status::CryptoError;
  Bytes der(static_cast<size_t>(len));
  unsigned char* p = der.data();
  if (i2d_PUBKEY(pkey_, &p) != len) return Status::CryptoError;
  return RsaPublicKey::from_spki_der(der, out);
}

Status RsaKeyPair::decrypt_oaep_sha1(ByteView ciphertext,
                                     Bytes& plaintext) const {
  if (!pkey_) return Status::NoRsaKey;
  if (ciphertext.size() != modulus_bytes()) return Status::OaepError;
  CtxPtr ctx = make_ctx(pkey_);
  if (!ctx || EVP_PKEY_decrypt_init(ctx.get()) <= 0 ||
      EVP_PKEY_CTX_set_rsa_padding(ctx.get(), RSA_PKCS1_OAEP_PADDING) <= 0 ||
      EVP_PKEY_CTX_set_rsa_oaep_md(ctx.get(), EVP_sha1()) <= 0 ||
      EVP_PKEY_CTX_set_rsa_mgf1_md(ctx.get(), EVP_sha1()) <= 0) {
    return Status::CryptoError;
  }
  size_t len = 0;
  if (EVP_PKEY_decrypt(ctx.get(), nullptr, &len, ciphertext.data(),
                       ciphertext.size()) <= 0) {
    return Status::OaepError;
  }
  plaintext.resize(len);
  if (EVP_PKEY_decrypt(ctx.get(), plaintext.data(), &len, ciphertext.data(),
                       ciphertext.size()) <= 0) {
    plaintext.clear();
    return Status::OaepError;
  }
  plaintext.resize(len);
  return Status::Ok;
}

Status RsaKeyPair::sign(SigScheme scheme, ByteView msg, RandomSource& rng,
                        Bytes& sig) const {
  if (!pkey_) return Status::NoRsaKey;
  const auto digest = crypto::sha1(msg);

  if (scheme == SigScheme::Pkcs1v15) {
    CtxPtr ctx = make_ctx(pkey_);
    if (!ctx || EVP_PKEY_sign_init(ctx.get()) <= 0 ||
        EVP_PKEY_CTX_set_rsa_padding(ctx.get(), RSA_PKCS1_PADDING) <= 0 ||
        EVP_PKEY_CTX_set_signature_md(ctx.get(), EVP_sha1()) <= 0) {
      return Status::CryptoError;
    }
    size_t len = 0;
    if (EVP_PKEY_sign(ctx.get(), nullptr, &len, digest.data(),
                      digest.size()) <= 0) {
      return Status::CryptoError;
    }
    sig.resize(len);
    if (EVP_PKEY_sign(ctx.get(), sig.data(), &len, digest.data(),
                      digest.size()) <= 0) {
      return Status::CryptoError;
    }
    sig.resize(len);
    return Status::Ok;
  }

  // EMSA-PSS with SHA-1, MGF1-SHA1, salt length 20, assembled locally so
  // the salt comes from the caller's RandomSource.
  const size_t k = modulus_bytes();
  const size_t mod_bits = static_cast<size_t>(EVP_PKEY_get_bits(pkey_));
  const size_t em_bits = mod_bits - 1;
  const size_t em_len = (em_bits + 7) / 8;
  if (em_len < 2 * kHashLen + 2) return Status::KeyLengthError;

  std::array<uint8_t, kHashLen> salt{};
  if (!rng.fill(salt)) return Status::EntropyError;

  Bytes m_prime(8, 0);
  m_prime.insert(m_prime.end(), digest.begin(), digest.end());
  m_prime.insert(m_prime.end(), salt.begin(), salt.end());
  const auto h = crypto::sha1(m_prime);

  const size_t db_len = em_len - kHashLen - 1;
  Bytes db(db_len, 0);
  db[db_len - kHashLen - 1] = 0x01;
  std::memcpy(db.data() + db_len - kHashLen, salt.data(), kHashLen);

  const Bytes db_mask = mgf1_sha1(ByteView(h.data(), h.size()), db_len);
  for (size_t i = 0; i < db_len; ++i) db[i] ^= db_mask[i];
  db[0] &= static_cast<uint8_t>(0xFF >> (8 * em_len - em_bits));

  Bytes em;
  em.reserve(k);
  em.resize(k - em_len, 0);
  em.insert(em.end(), db.begin(), db.end());
  em.insert(em.end(), h.begin(), h.end());
  em.push_back(0xbc);
  return raw_private_op(pkey_, em, sig);
}

}  // namespace wvsim::rsa
