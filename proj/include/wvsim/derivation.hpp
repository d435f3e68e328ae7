#pragma once

#include <string_view>

#include "wvsim/bytes.hpp"
#include "wvsim/status.hpp"

namespace wvsim {

// Output of one key-ladder step: a 128-bit encryption key plus two 256-bit
// MAC keys, one per direction.
struct DerivedKeySet {
  Aes128Key asset_key{};
  MacKey mac_client_key{};
  MacKey mac_server_key{};

  bool operator==(const DerivedKeySet&) const = default;
};

// Derivation inputs.  Each CMAC invocation is run over an ASCII counter
// digit, a role label, and a caller-supplied context blob:
//
//   asset_key      = CMAC(parent, '1' | "ENCRYPTION"     | blob)
//   mac_client_key = CMAC(parent, '1' | "AUTHENTICATION" | blob) |
//                    CMAC(parent, '2' | "AUTHENTICATION" | blob)
//   mac_server_key = CMAC(parent, '3' | "AUTHENTICATION" | blob) |
//                    CMAC(parent, '4' | "AUTHENTICATION" | blob)
struct DerivationContext {
  Bytes encryption_context;  // '1' | "ENCRYPTION" | blob
  Bytes mac_context_base;    // "AUTHENTICATION" | blob

  Bytes mac_context(char counter) const;

  bool operator==(const DerivationContext&) const = default;
};

DerivationContext build_contexts(ByteView blob);

// Derives the full key set from a 128-bit parent key.  Fails only if the
// blob is empty (EmptyBlob); both sides must reject that case identically.
Status derive_keys(const Aes128Key& parent, const DerivationContext& ctx,
                   DerivedKeySet& out);

// Context blob for the provisioning phase: provisioning_token | device_id.
Bytes provisioning_blob(ByteView provisioning_token, ByteView device_id);

// Context blob for the license phase: four client properties, each prefixed
// with its 16-bit big-endian length.
Bytes device_info_blob(std::string_view model, std::string_view arch,
                       std::string_view cdm_version, std::string_view build);

}  // namespace wvsim
