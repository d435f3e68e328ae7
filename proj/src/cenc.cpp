#include "wvsim/cenc.hpp"

#include "wvsim/crypto.hpp"

namespace wvsim {

Status cenc_transform(const Aes128Key& key, const AesIv& iv,
                      std::span<const SubsampleRange> plan, ByteView data,
                      Bytes& out) {
  uint64_t total = 0;
  for (const auto& r : plan) {
    total += static_cast<uint64_t>(r.clear_len) + r.protected_len;
  }
  if (total != data.size()) return Status::LengthError;

  out.assign(data.begin(), data.end());
  crypto::AesCtrStream stream(key, iv);
  if (!stream.valid()) return Status::CryptoError;

  size_t pos = 0;
  for (const auto& r : plan) {
    pos += r.clear_len;
    if (r.protected_len > 0) {
      Status st =
          stream.transform(data.subspan(pos, r.protected_len), out.data() + pos);
      if (st != Status::Ok) return st;
      pos += r.protected_len;
    }
  }
  return Status::Ok;
}

SubsamplePlan make_subsamples(size_t total, uint32_t clear_len,
                              uint32_t protected_len) {
  SubsamplePlan plan;
  if (total == 0) return plan;
  if (clear_len == 0 && protected_len == 0) {
    plan.push_back({0, static_cast<uint32_t>(total)});
    return plan;
  }
  size_t remaining = total;
  while (remaining > 0) {
    SubsampleRange r;
    r.clear_len = static_cast<uint32_t>(
        std::min<size_t>(clear_len, remaining));
    remaining -= r.clear_len;
    r.protected_len = static_cast<uint32_t>(
        std::min<size_t>(protected_len, remaining));
    remaining -= r.protected_len;
    plan.push_back(r);
  }
  return plan;
}

}  // namespace wvsim
