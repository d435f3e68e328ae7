#pragma once

#include <cstdint>
#include <memory>
#include <span>

#include "wvsim/bytes.hpp"

namespace wvsim {

class RandomSource {
 public:
  virtual ~RandomSource() = default;

  // Fills `out`; false means the underlying entropy source failed.
  virtual bool fill(std::span<uint8_t> out) = 0;

  Bytes bytes(size_t n);
  uint32_t next_u32();
  Aes128Key key16();
  AesIv iv16();
};

// OS entropy via the crypto library RNG.
class SystemRandom final : public RandomSource {
 public:
  bool fill(std::span<uint8_t> out) override;
};

// AES-128-CTR keystream expanded from a 16-byte seed. Reproducible byte
// stream for fixtures, scripted runs, and cross-mode trace comparisons.
class DeterministicRandom final : public RandomSource {
 public:
  explicit DeterministicRandom(const Aes128Key& seed);
  explicit DeterministicRandom(uint64_t seed);
  ~DeterministicRandom() override;

  DeterministicRandom(const DeterministicRandom&) = delete;
  DeterministicRandom& operator=(const DeterministicRandom&) = delete;

  bool fill(std::span<uint8_t> out) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace wvsim
