#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "wvsim/bytes.hpp"
#include "wvsim/status.hpp"

namespace wvsim::wire {

inline constexpr std::array<uint8_t, 6> kFrameMagic = {'W', 'V', 'S',
                                                       'I', 'M', '1'};
inline constexpr size_t kFrameHeaderSize = 7;  // magic + msg_type

enum class MsgType : uint8_t {
  Error = 0,
  ProvReq = 1,
  ProvResp = 2,
  LicReq = 3,
  LicResp = 4,
  RefreshReq = 5,
  RefreshResp = 6,
};

const char* to_string(MsgType t);

// Tag registry.  Every field of every message type has exactly one tag.
// All integers are big-endian; fields are emitted in ascending tag order
// with one exception: hmac_tag, when present, is physically last so it can
// cover all preceding frame bytes.
namespace tag {
inline constexpr uint16_t kNonce = 0x0001;              // 4 B
inline constexpr uint16_t kDeviceId = 0x0002;           // 32 B
inline constexpr uint16_t kProvisioningToken = 0x0003;  // 72 B
inline constexpr uint16_t kDeviceBlob = 0x0004;
inline constexpr uint16_t kRequestId = 0x0005;
inline constexpr uint16_t kIv = 0x0006;  // 16 B
inline constexpr uint16_t kCiphertext = 0x0007;
inline constexpr uint16_t kHmacTag = 0x0008;  // 32 B
inline constexpr uint16_t kRsaSignature = 0x0009;
inline constexpr uint16_t kSigScheme = 0x000A;      // 1 B: 1=PSS, 2=PKCS1v15
inline constexpr uint16_t kEncSessionKey = 0x000B;  // 256 B
inline constexpr uint16_t kKeyEntry = 0x000C;       // nested TLV frame
inline constexpr uint16_t kNewServerMacKeyCt = 0x000D;  // IV(16) | ct
inline constexpr uint16_t kKeyId = 0x000E;
inline constexpr uint16_t kTtl = 0x000F;        // 4 B
inline constexpr uint16_t kErrorCode = 0x0010;  // 1 B

// Nested tags inside a key_entry value.  All five are required.
inline constexpr uint16_t kEntryKeyId = 0x0001;
inline constexpr uint16_t kEntryIv = 0x0002;        // 16 B
inline constexpr uint16_t kEntryEncKey = 0x0003;
inline constexpr uint16_t kEntryKcbBlob = 0x0004;   // 16 B
inline constexpr uint16_t kEntryKcbEncrypted = 0x0005;  // 1 B: 0 or 1
}  // namespace tag

// One licensed key: its id, the CBC-wrapped key material, and the key
// control block (raw, or one ECB block under the content key when the flag
// is set).
struct KeyEntry {
  Bytes key_id;
  AesIv iv{};
  Bytes enc_key;
  Bytes kcb_blob;
  bool kcb_encrypted = false;

  bool operator==(const KeyEntry&) const = default;
};

// Message structs.  Fields are optional at the codec level; semantic
// presence requirements belong to the protocol handlers.

struct ErrorResponse {
  std::optional<uint8_t> error_code;

  bool operator==(const ErrorResponse&) const = default;
};

struct ProvisioningRequest {
  std::optional<uint32_t> nonce;
  std::optional<DeviceId> device_id;
  std::optional<std::array<uint8_t, 72>> provisioning_token;
  std::optional<MacTag> hmac_tag;

  bool operator==(const ProvisioningRequest&) const = default;
};

struct ProvisioningResponse {
  std::optional<uint32_t> nonce;
  std::optional<AesIv> iv;
  std::optional<Bytes> ciphertext;
  std::optional<MacTag> hmac_tag;

  bool operator==(const ProvisioningResponse&) const = default;
};

struct LicenseRequest {
  std::optional<uint32_t> nonce;
  std::optional<DeviceId> device_id;
  std::optional<Bytes> device_blob;
  std::optional<Bytes> request_id;
  std::optional<Bytes> rsa_signature;
  std::optional<uint8_t> sig_scheme;
  // Serialized as one kKeyId field holding 16-bit length-prefixed entries.
  std::optional<std::vector<Bytes>> key_ids;

  bool operator==(const LicenseRequest&) const = default;
};

struct LicenseResponse {
  std::optional<uint32_t> nonce;
  std::optional<Bytes> request_id;
  std::optional<Bytes> enc_session_key;
  std::vector<KeyEntry> key_entries;
  std::optional<Bytes> new_server_mac_key_ct;
  std::optional<MacTag> hmac_tag;

  bool operator==(const LicenseResponse&) const = default;
};

struct RefreshRequest {
  std::optional<Bytes> request_id;
  std::optional<Bytes> key_id;
  std::optional<MacTag> hmac_tag;

  bool operator==(const RefreshRequest&) const = default;
};

struct RefreshResponse {
  std::optional<Bytes> key_id;
  std::optional<uint32_t> ttl;
  std::optional<MacTag> hmac_tag;

  bool operator==(const RefreshResponse&) const = default;
};

// Variant index equals the MsgType value.
using Message =
    std::variant<ErrorResponse, ProvisioningRequest, ProvisioningResponse,
                 LicenseRequest, LicenseResponse, RefreshRequest,
                 RefreshResponse>;

MsgType msg_type_of(const Message& m);

// Canonical encoding: unique byte representation per message value.
Bytes encode(const Message& m);

// Strict decode: rejects bad magic, truncation, unknown message types,
// unknown or duplicated tags, wrong fixed-field sizes, tag-order
// violations, and a non-final hmac_tag field.
Status decode(ByteView frame, Message& out);

// Frame bytes covered by the HMAC tag: the canonical encoding with the
// hmac_tag field removed.
Bytes mac_input(const Message& m);

// Frame bytes covered by the RSA signature: the request encoded without
// its rsa_signature field.
Bytes signing_input(const LicenseRequest& m);

// Byte-stream framing: 4-byte big-endian length prefix.
Bytes frame_with_length(ByteView frame);

// Error codes carried in ErrorResponse.error_code.
uint8_t wire_error_code(Status st);
Status status_from_wire(uint8_t code);

}  // namespace wvsim::wire
