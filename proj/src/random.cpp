#include "wvsim/random.hpp"

#include <openssl/rand.h>

#include <cstring>

#include "wvsim/crypto.hpp"

namespace wvsim {

Bytes RandomSource::bytes(size_t n) {
  Bytes out(n);
  fill(out);
  return out;
}

uint32_t RandomSource::next_u32() {
  uint8_t buf[4] = {};
  fill(buf);
  return load_be32(buf);
}

Aes128Key RandomSource::key16() {
  Aes128Key k{};
  fill(k);
  return k;
}

AesIv RandomSource::iv16() {
  AesIv iv{};
  fill(iv);
  return iv;
}

bool SystemRandom::fill(std::span<uint8_t> out) {
  if (out.empty()) return true;
  return RAND_bytes(out.data(), static_cast<int>(out.size())) == 1;
}

struct DeterministicRandom::Impl {
  explicit Impl(const Aes128Key& seed) : stream(seed, AesIv{}) {}
  crypto::AesCtrStream stream;
};

DeterministicRandom::DeterministicRandom(const Aes128Key& seed)
    : impl_(std::make_unique<Impl>(seed)) {}

DeterministicRandom::DeterministicRandom(uint64_t seed) {
  Aes128Key key{};
  for (int i = 0; i < 8; ++i) {
    key[static_cast<size_t>(i)] = static_cast<uint8_t>(seed >> (56 - 8 * i));
  }
  impl_ = std::make_unique<Impl>(key);
}

DeterministicRandom::~DeterministicRandom() = default;

bool DeterministicRandom::fill(std::span<uint8_t> out) {
  if (out.empty()) return true;
  std::memset(out.data(), 0, out.size());
  return impl_->stream.transform(ByteView(out.data(), out.size()),
                                 out.data()) == Status::Ok;
}

}  // namespace wvsim
