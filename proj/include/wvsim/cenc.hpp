#pragma once

#include <span>
#include <vector>

#include "wvsim/bytes.hpp"
#include "wvsim/status.hpp"

namespace wvsim {

// One subsample: clear_len verbatim bytes followed by protected_len
// encrypted bytes.
struct SubsampleRange {
  uint32_t clear_len = 0;
  uint32_t protected_len = 0;

  bool operator==(const SubsampleRange&) const = default;
};

using SubsamplePlan = std::vector<SubsampleRange>;

// Encrypted media plus everything needed to decrypt it (except the key).
struct CencPackage {
  AesIv iv{};
  SubsamplePlan plan;
  Bytes data;
};

// AES-128-CTR over the protected ranges only, with one keystream spanning
// all protected ranges (big-endian increment over the 16-byte counter);
// clear ranges are copied verbatim.  Encrypt and decrypt are the same
// transform.  Fails with LengthError when the plan does not cover the data
// exactly.
Status cenc_transform(const Aes128Key& key, const AesIv& iv,
                      std::span<const SubsampleRange> plan, ByteView data,
                      Bytes& out);

// Covers `total` bytes by repeating the (clear_len, protected_len) pattern,
// clamping the final range.  A (0, 0) pattern yields one fully protected
// range.
SubsamplePlan make_subsamples(size_t total, uint32_t clear_len,
                              uint32_t protected_len);

}  // namespace wvsim
