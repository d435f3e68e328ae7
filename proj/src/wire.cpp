#include "wvsim/wire.hpp"

#include <cstring>

namespace wvsim::wire {

namespace {

void put_field(Bytes& out, uint16_t tag, ByteView value) {
  append_be16(out, tag);
  append_be32(out, static_cast<uint32_t>(value.size()));
  append(out, value);
}

void put_u32_field(Bytes& out, uint16_t tag, uint32_t v) {
  uint8_t buf[4];
  store_be32(v, buf);
  put_field(out, tag, ByteView(buf, 4));
}

void put_u8_field(Bytes& out, uint16_t tag, uint8_t v) {
  put_field(out, tag, ByteView(&v, 1));
}

Bytes frame_header(MsgType t) {
  Bytes out(kFrameMagic.begin(), kFrameMagic.end());
  out.push_back(static_cast<uint8_t>(t));
  return out;
}

Bytes encode_key_entry(const KeyEntry& e) {
  Bytes out;
  put_field(out, tag::kEntryKeyId, e.key_id);
  put_field(out, tag::kEntryIv, ByteView(e.iv.data(), e.iv.size()));
  put_field(out, tag::kEntryEncKey, e.enc_key);
  put_field(out, tag::kEntryKcbBlob, e.kcb_blob);
  put_u8_field(out, tag::kEntryKcbEncrypted, e.kcb_encrypted ? 1 : 0);
  return out;
}

Bytes encode_key_id_list(const std::vector<Bytes>& ids) {
  Bytes out;
  for (const auto& id : ids) {
    append_be16(out, static_cast<uint16_t>(id.size()));
    append(out, id);
  }
  return out;
}

struct Encoder {
  Bytes operator()(const ErrorResponse& m) const {
    Bytes out = frame_header(MsgType::Error);
    if (m.error_code) put_u8_field(out, tag::kErrorCode, *m.error_code);
    return out;
  }

  Bytes operator()(const ProvisioningRequest& m) const {
    Bytes out = frame_header(MsgType::ProvReq);
    if (m.nonce) put_u32_field(out, tag::kNonce, *m.nonce);
    if (m.device_id) {
      put_field(out, tag::kDeviceId,
                ByteView(m.device_id->data(), m.device_id->size()));
    }
    if (m.provisioning_token) {
      put_field(out, tag::kProvisioningToken,
                ByteView(m.provisioning_token->data(),
                         m.provisioning_token->size()));
    }
    if (m.hmac_tag) {
      put_field(out, tag::kHmacTag,
                ByteView(m.hmac_tag->data(), m.hmac_tag->size()));
    }
    return out;
  }

  Bytes operator()(const ProvisioningResponse& m) const {
    Bytes out = frame_header(MsgType::ProvResp);
    if (m.nonce) put_u32_field(out, tag::kNonce, *m.nonce);
    if (m.iv) put_field(out, tag::kIv, ByteView(m.iv->data(), m.iv->size()));
    if (m.ciphertext) put_field(out, tag::kCiphertext, *m.ciphertext);
    if (m.hmac_tag) {
      put_field(out, tag::kHmacTag,
                ByteView(m.hmac_tag->data(), m.hmac_tag->size()));
    }
    return out;
  }

  Bytes operator()(const LicenseRequest& m) const {
    Bytes out = frame_header(MsgType::LicReq);
    if (m.nonce) put_u32_field(out, tag::kNonce, *m.nonce);
    if (m.device_id) {
      put_field(out, tag::kDeviceId,
                ByteView(m.device_id->data(), m.device_id->size()));
    }
    if (m.device_blob) put_field(out, tag::kDeviceBlob, *m.device_blob);
    if (m.request_id) put_field(out, tag::kRequestId, *m.request_id);
    if (m.rsa_signature) put_field(out, tag::kRsaSignature, *m.rsa_signature);
    if (m.sig_scheme) put_u8_field(out, tag::kSigScheme, *m.sig_scheme);
    if (m.key_ids) put_field(out, tag::kKeyId, encode_key_id_list(*m.key_ids));
    return out;
  }

  Bytes operator()(const LicenseResponse& m) const {
    Bytes out = frame_header(MsgType::LicResp);
    if (m.nonce) put_u32_field(out, tag::kNonce, *m.nonce);
    if (m.request_id) put_field(out, tag::kRequestId, *m.request_id);
    if (m.enc_session_key) {
      put_field(out, tag::kEncSessionKey, *m.enc_session_key);
    }
    for (const auto& e : m.key_entries) {
      put_field(out, tag::kKeyEntry, encode_key_entry(e));
    }
    if (m.new_server_mac_key_ct) {
      put_field(out, tag::kNewServerMacKeyCt, *m.new_server_mac_key_ct);
    }
    if (m.hmac_tag) {
      put_field(out, tag::kHmacTag,
                ByteView(m.hmac_tag->data(), m.hmac_tag->size()));
    }
    return out;
  }

  Bytes operator()(const RefreshRequest& m) const {
    Bytes out = frame_header(MsgType::RefreshReq);
    if (m.request_id) put_field(out, tag::kRequestId, *m.request_id);
    if (m.key_id) put_field(out, tag::kKeyId, *m.key_id);
    if (m.hmac_tag) {
      put_field(out, tag::kHmacTag,
                ByteView(m.hmac_tag->data(), m.hmac_tag->size()));
    }
    return out;
  }

  Bytes operator()(const RefreshResponse& m) const {
    Bytes out = frame_header(MsgType::RefreshResp);
    if (m.key_id) put_field(out, tag::kKeyId, *m.key_id);
    if (m.ttl) put_u32_field(out, tag::kTtl, *m.ttl);
    if (m.hmac_tag) {
      put_field(out, tag::kHmacTag,
                ByteView(m.hmac_tag->data(), m.hmac_tag->size()));
    }
    return out;
  }
};

struct Tlv {
  uint16_t tag = 0;
  ByteView value;
};

Status parse_tlvs(ByteView body, std::vector<Tlv>& out) {
  size_t pos = 0;
  while (pos < body.size()) {
    if (body.size() - pos < 6) return Status::MalformedFrame;
    Tlv t;
    t.tag = load_be16(body.data() + pos);
    const uint32_t len = load_be32(body.data() + pos + 2);
    pos += 6;
    if (body.size() - pos < len) return Status::MalformedFrame;
    t.value = body.subspan(pos, len);
    pos += len;
    out.push_back(t);
  }
  return Status::Ok;
}

// Ascending tag order, hmac_tag only as the single final field, rep(s)
// only for key entries in a license response.
Status check_order(const std::vector<Tlv>& tlvs, MsgType type) {
  size_t body_n = tlvs.size();
  if (body_n > 0 && tlvs[body_n - 1].tag == tag::kHmacTag) --body_n;
  for (size_t i = 0; i < body_n; ++i) {
    if (tlvs[i].tag == tag::kHmacTag) return Status::MalformedFrame;
    if (i == 0) continue;
    const uint16_t prev = tlvs[i - 1].tag;
    const uint16_t cur = tlvs[i].tag;
    const bool repeat_ok =
        prev == cur && cur == tag::kKeyEntry && type == MsgType::LicResp;
    if (!(prev < cur || repeat_ok)) return Status::MalformedFrame;
  }
  return Status::Ok;
}

template <typename T>
Status set_once(std::optional<T>& slot, T v) {
  if (slot) return Status::MalformedFrame;
  slot = std::move(v);
  return Status::Ok;
}

template <size_t N>
Status take_array(ByteView v, std::array<uint8_t, N>& out) {
  if (v.size() != N) return Status::MalformedFrame;
  std::memcpy(out.data(), v.data(), N);
  return Status::Ok;
}

Status take_u32(ByteView v, uint32_t& out) {
  if (v.size() != 4) return Status::MalformedFrame;
  out = load_be32(v.data());
  return Status::Ok;
}

Status take_u8(ByteView v, uint8_t& out) {
  if (v.size() != 1) return Status::MalformedFrame;
  out = v[0];
  return Status::Ok;
}

Status take_bool(ByteView v, bool& out) {
  uint8_t b = 0;
  Status st = take_u8(v, b);
  if (st != Status::Ok) return st;
  if (b > 1) return Status::MalformedFrame;
  out = b == 1;
  return Status::Ok;
}

template <size_t N>
Status set_once_array(std::optional<std::array<uint8_t, N>>& slot,
                      ByteView v) {
  std::array<uint8_t, N> arr{};
  Status st = take_array(v, arr);
  if (st != Status::Ok) return st;
  return set_once(slot, arr);
}

Status set_once_u32(std::optional<uint32_t>& slot, ByteView v) {
  uint32_t value = 0;
  Status st = take_u32(v, value);
  if (st != Status::Ok) return st;
  return set_once(slot, value);
}

Status set_once_u8(std::optional<uint8_t>& slot, ByteView v) {
  uint8_t value = 0;
  Status st = take_u8(v, value);
  if (st != Status::Ok) return st;
  return set_once(slot, value);
}

Status set_once_bytes(std::optional<Bytes>& slot, ByteView v) {
  return set_once(slot, to_bytes(v));
}

Status decode_key_entry(ByteView raw, KeyEntry& out) {
  std::vector<Tlv> tlvs;
  Status st = parse_tlvs(raw, tlvs);
  if (st != Status::Ok) return st;
  constexpr uint16_t expected[] = {
      tag::kEntryKeyId, tag::kEntryIv, tag::kEntryEncKey, tag::kEntryKcbBlob,
      tag::kEntryKcbEncrypted};
  if (tlvs.size() != 5) return Status::MalformedFrame;
  for (size_t i = 0; i < 5; ++i) {
    if (tlvs[i].tag != expected[i]) return Status::MalformedFrame;
  }
  out.key_id = to_bytes(tlvs[0].value);
  st = take_array(tlvs[1].value, out.iv);
  if (st != Status::Ok) return st;
  out.enc_key = to_bytes(tlvs[2].value);
  if (tlvs[3].value.size() != 16) return Status::MalformedFrame;
  out.kcb_blob = to_bytes(tlvs[3].value);
  return take_bool(tlvs[4].value, out.kcb_encrypted);
}

Status decode_key_id_list(ByteView raw, std::vector<Bytes>& out) {
  size_t pos = 0;
  while (pos < raw.size()) {
    if (raw.size() - pos < 2) return Status::MalformedFrame;
    const uint16_t len = load_be16(raw.data() + pos);
    pos += 2;
    if (raw.size() - pos < len) return Status::MalformedFrame;
    out.push_back(to_bytes(raw.subspan(pos, len)));
    pos += len;
  }
  return Status::Ok;
}

Status decode_error(const std::vector<Tlv>& tlvs, ErrorResponse& out) {
  for (const auto& t : tlvs) {
    Status st = Status::MalformedFrame;
    if (t.tag == tag::kErrorCode) st = set_once_u8(out.error_code, t.value);
    if (st != Status::Ok) return st;
  }
  return Status::Ok;
}

Status decode_prov_req(const std::vector<Tlv>& tlvs,
                       ProvisioningRequest& out) {
  for (const auto& t : tlvs) {
    Status st = Status::MalformedFrame;
    switch (t.tag) {
      case tag::kNonce: st = set_once_u32(out.nonce, t.value); break;
      case tag::kDeviceId: st = set_once_array(out.device_id, t.value); break;
      case tag::kProvisioningToken:
        st = set_once_array(out.provisioning_token, t.value);
        break;
      case tag::kHmacTag: st = set_once_array(out.hmac_tag, t.value); break;
      default: break;
    }
    if (st != Status::Ok) return st;
  }
  return Status::Ok;
}

Status decode_prov_resp(const std::vector<Tlv>& tlvs,
                        ProvisioningResponse& out) {
  for (const auto& t : tlvs) {
    Status st = Status::MalformedFrame;
    switch (t.tag) {
      case tag::kNonce: st = set_once_u32(out.nonce, t.value); break;
      case tag::kIv: st = set_once_array(out.iv, t.value); break;
      case tag::kCiphertext: st = set_once_bytes(out.ciphertext, t.value); break;
      case tag::kHmacTag: st = set_once_array(out.hmac_tag, t.value); break;
      default: break;
    }
    if (st != Status::Ok) return st;
  }
  return Status::Ok;
}

Status decode_lic_req(const std::vector<Tlv>& tlvs, LicenseRequest& out) {
  for (const auto& t : tlvs) {
    Status st = Status::MalformedFrame;
    switch (t.tag) {
      case tag::kNonce: st = set_once_u32(out.nonce, t.value); break;
      case tag::kDeviceId: st = set_once_array(out.device_id, t.value); break;
      case tag::kDeviceBlob:
        st = set_once_bytes(out.device_blob, t.value);
        break;
      case tag::kRequestId: st = set_once_bytes(out.request_id, t.value); break;
      case tag::kRsaSignature:
        st = set_once_bytes(out.rsa_signature, t.value);
        break;
      case tag::kSigScheme: st = set_once_u8(out.sig_scheme, t.value); break;
      case tag::kKeyId: {
        if (out.key_ids) return Status::MalformedFrame;
        std::vector<Bytes> ids;
        st = decode_key_id_list(t.value, ids);
        if (st == Status::Ok) out.key_ids = std::move(ids);
        break;
      }
      default: break;
    }
    if (st != Status::Ok) return st;
  }
  return Status::Ok;
}

Status decode_lic_resp(const std::vector<Tlv>& tlvs, LicenseResponse& out) {
  for (const auto& t : tlvs) {
    Status st = Status::MalformedFrame;
    switch (t.tag) {
      case tag::kNonce: st = set_once_u32(out.nonce, t.value); break;
      case tag::kRequestId: st = set_once_bytes(out.request_id, t.value); break;
      case tag::kEncSessionKey:
        if (t.value.size() != 256) return Status::MalformedFrame;
        st = set_once_bytes(out.enc_session_key, t.value);
        break;
      case tag::kKeyEntry: {
        KeyEntry e;
        st = decode_key_entry(t.value, e);
        if (st == Status::Ok) out.key_entries.push_back(std::move(e));
        break;
      }
      case tag::kNewServerMacKeyCt:
        st = set_once_bytes(out.new_server_mac_key_ct, t.value);
        break;
      case tag::kHmacTag: st = set_once_array(out.hmac_tag, t.value); break;
      default: break;
    }
    if (st != Status::Ok) return st;
  }
  return Status::Ok;
}

Status decode_refresh_req(const std::vector<Tlv>& tlvs, RefreshRequest& out) {
  for (const auto& t : tlvs) {
    Status st = Status::MalformedFrame;
    switch (t.tag) {
      case tag::kRequestId: st = set_once_bytes(out.request_id, t.value); break;
      case tag::kKeyId: st = set_once_bytes(out.key_id, t.value); break;
      case tag::kHmacTag: st = set_once_array(out.hmac_tag, t.value); break;
      default: break;
    }
    if (st != Status::Ok) return st;
  }
  return Status::Ok;
}

Status decode_refresh_resp(const std::vector<Tlv>& tlvs,
                           RefreshResponse& out) {
  for (const auto& t : tlvs) {
    Status st = Status::MalformedFrame;
    switch (t.tag) {
      case tag::kKeyId: st = set_once_bytes(out.key_id, t.value); break;
      case tag::kTtl: st = set_once_u32(out.ttl, t.value); break;
      case tag::kHmacTag: st = set_once_array(out.hmac_tag, t.value); break;
      default: break;
    }
    if (st != Status::Ok) return st;
  }
  return Status::Ok;
}

}  // namespace

const char* to_string(MsgType t) {
  switch (t) {
    case MsgType::Error: return "Error";
    case MsgType::ProvReq: return "ProvReq";
    case MsgType::ProvResp: return "ProvResp";
    case MsgType::LicReq: return "LicReq";
    case MsgType::LicResp: return "LicResp";
    case MsgType::RefreshReq: return "RefreshReq";
    case MsgType::RefreshResp: return "RefreshResp";
  }
  return "Unknown";
}

MsgType msg_type_of(const Message& m) {
  return static_cast<MsgType>(m.index());
}

Bytes encode(const Message& m) { return std::visit(Encoder{}, m); }

Status decode(ByteView frame, Message& out) {
  if (frame.size() < kFrameHeaderSize) return Status::MalformedFrame;
  if (std::memcmp(frame.data(), kFrameMagic.data(), kFrameMagic.size()) != 0) {
    return Status::MalformedFrame;
  }
  const uint8_t type_byte = frame[6];
  if (type_byte > static_cast<uint8_t>(MsgType::RefreshResp)) {
    return Status::UnknownMsgType;
  }
  const MsgType type = static_cast<MsgType>(type_byte);

  std::vector<Tlv> tlvs;
  Status st = parse_tlvs(frame.subspan(kFrameHeaderSize), tlvs);
  if (st != Status::Ok) return st;
  st = check_order(tlvs, type);
  if (st != Status::Ok) return st;

  switch (type) {
    case MsgType::Error: {
      ErrorResponse m;
      st = decode_error(tlvs, m);
      if (st == Status::Ok) out = std::move(m);
      return st;
    }
    case MsgType::ProvReq: {
      ProvisioningRequest m;
      st = decode_prov_req(tlvs, m);
      if (st == Status::Ok) out = std::move(m);
      return st;
    }
    case MsgType::ProvResp: {
      ProvisioningResponse m;
      st = decode_prov_resp(tlvs, m);
      if (st == Status::Ok) out = std::move(m);
      return st;
    }
    case MsgType::LicReq: {
      LicenseRequest m;
      st = decode_lic_req(tlvs, m);
      if (st == Status::Ok) out = std::move(m);
      return st;
    }
    case MsgType::LicResp: {
      LicenseResponse m;
      st = decode_lic_resp(tlvs, m);
      if (st == Status::Ok) out = std::move(m);
      return st;
    }
    case MsgType::RefreshReq: {
      RefreshRequest m;
      st = decode_refresh_req(tlvs, m);
      if (st == Status::Ok) out = std::move(m);
      return st;
    }
    case MsgType::RefreshResp: {
      RefreshResponse m;
      st = decode_refresh_resp(tlvs, m);
      if (st == Status::Ok) out = std::move(m);
      return st;
    }
  }
  return Status::UnknownMsgType;
}

namespace {

template <typename T>
Bytes encode_without_hmac(const T& m) {
  T copy = m;
  copy.hmac_tag.reset();
  return encode(Message(std::move(copy)));
}

}  // namespace

Bytes mac_input(const Message& m) {
  return std::visit(
      [](const auto& msg) -> Bytes {
        using T = std::decay_t<decltype(msg)>;
        if constexpr (std::is_same_v<T, ErrorResponse> ||
                      std::is_same_v<T, LicenseRequest>) {
          return encode(Message(msg));
        } else {
          return encode_without_hmac(msg);
        }
      },
      m);
}

Bytes signing_input(const LicenseRequest& m) {
  LicenseRequest copy = m;
  copy.rsa_signature.reset();
  return encode(Message(std::move(copy)));
}

Bytes frame_with_length(ByteView frame) {
  Bytes out;
  out.reserve(4 + frame.size());
  append_be32(out, static_cast<uint32_t>(frame.size()));
  append(out, frame);
  return out;
}

uint8_t wire_error_code(Status st) {
  switch (st) {
    case Status::Ok: return 0;
    case Status::UnknownDevice: return 1;
    case Status::BadClientMac: return 2;
    case Status::BadSignature: return 3;
    case Status::UnknownKeyId: return 4;
    case Status::MalformedFrame: return 5;
    case Status::UnknownMsgType: return 6;
    default: return 255;
  }
}

Status status_from_wire(uint8_t code) {
  switch (code) {
    case 0: return Status::Ok;
    case 1: return Status::UnknownDevice;
    case 2: return Status::BadClientMac;
    case 3: return Status::BadSignature;
    case 4: return Status::UnknownKeyId;
    case 5: return Status::MalformedFrame;
    case 6: return Status::UnknownMsgType;
    default: return Status::CryptoError;
  }
}

}  // namespace wvsim::wire
