#include "wvsim/derivation.hpp"

#include <cstring>

#include "wvsim/crypto.hpp"

namespace wvsim {

namespace {

constexpr std::string_view kEncryptionLabel = "ENCRYPTION";
constexpr std::string_view kAuthenticationLabel = "AUTHENTICATION";

void cmac_into(const Aes128Key& parent, ByteView msg, uint8_t* out16) {
  const auto mac = crypto::aes128_cmac(parent, msg);
  std::memcpy(out16, mac.data(), 16);
}

}  // namespace

Bytes DerivationContext::mac_context(char counter) const {
  Bytes ctx;
  ctx.reserve(1 + mac_context_base.size());
  ctx.push_back(static_cast<uint8_t>(counter));
  append(ctx, mac_context_base);
  return ctx;
}

DerivationContext build_contexts(ByteView blob) {
  DerivationContext ctx;
  ctx.encryption_context.reserve(1 + kEncryptionLabel.size() + blob.size());
  ctx.encryption_context.push_back('1');
  append(ctx.encryption_context, kEncryptionLabel);
  append(ctx.encryption_context, blob);

  ctx.mac_context_base.reserve(kAuthenticationLabel.size() + blob.size());
  append(ctx.mac_context_base, kAuthenticationLabel);
  append(ctx.mac_context_base, blob);
  return ctx;
}

Status derive_keys(const Aes128Key& parent, const DerivationContext& ctx,
                   DerivedKeySet& out) {
  // A context built from an empty blob still carries the labels; reject
  // only contexts that lack even those.
  if (ctx.encryption_context.empty() || ctx.mac_context_base.empty()) {
    return Status::EmptyBlob;
  }
  cmac_into(parent, ctx.encryption_context, out.asset_key.data());
  cmac_into(parent, ctx.mac_context('1'), out.mac_client_key.data());
  cmac_into(parent, ctx.mac_context('2'), out.mac_client_key.data() + 16);
  cmac_into(parent, ctx.mac_context('3'), out.mac_server_key.data());
  cmac_into(parent, ctx.mac_context('4'), out.mac_server_key.data() + 16);
  return Status::Ok;
}

Bytes provisioning_blob(ByteView provisioning_token, ByteView device_id) {
  Bytes blob;
  blob.reserve(provisioning_token.size() + device_id.size());
  append(blob, provisioning_token);
  append(blob, device_id);
  return blob;
}

Bytes device_info_blob(std::string_view model, std::string_view arch,
                       std::string_view cdm_version, std::string_view build) {
  Bytes blob;
  auto put = [&blob](std::string_view s) {
    append_be16(blob, static_cast<uint16_t>(s.size()));
    append(blob, s);
  };
  put(model);
  put(arch);
  put(cdm_version);
  put(build);
  return blob;
}

}  // namespace wvsim
