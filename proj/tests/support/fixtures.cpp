#include "support/fixtures.hpp"

namespace wvsim::testing {

namespace {

Bytes random_bytes(RandomSource& rng, size_t max_len, bool allow_empty) {
  size_t len = rng.next_u32() % (max_len + 1);
  if (!allow_empty && len == 0) len = 1;
  return rng.bytes(len);
}

template <size_t N>
std::array<uint8_t, N> random_array(RandomSource& rng) {
  std::array<uint8_t, N> out{};
  rng.fill(out);
  return out;
}

}  // namespace

wire::Message fixture_error() {
  wire::ErrorResponse m;
  m.error_code = 3;
  return m;
}

wire::Message fixture_prov_req() {
  wire::ProvisioningRequest m;
  m.nonce = 0x01020304u;
  DeviceId id{};
  for (size_t i = 0; i < id.size(); ++i) id[i] = static_cast<uint8_t>(i);
  m.device_id = id;
  std::array<uint8_t, 72> token{};
  for (size_t i = 0; i < token.size(); ++i) {
    token[i] = static_cast<uint8_t>(0x80 + i);
  }
  m.provisioning_token = token;
  MacTag tag{};
  tag.fill(0xaa);
  m.hmac_tag = tag;
  return m;
}

wire::Message fixture_prov_resp() {
  wire::ProvisioningResponse m;
  m.nonce = 0x01020304u;
  AesIv iv{};
  iv.fill(0x42);
  m.iv = iv;
  m.ciphertext = Bytes{0xde, 0xad, 0xbe, 0xef, 0x00, 0x11, 0x22, 0x33};
  MacTag tag{};
  tag.fill(0xbb);
  m.hmac_tag = tag;
  return m;
}

wire::Message fixture_lic_req() {
  wire::LicenseRequest m;
  m.nonce = 0x0a0b0c0du;
  DeviceId id{};
  id.fill(0x21);
  m.device_id = id;
  m.device_blob = Bytes{0x01, 0x02, 0x03};
  m.request_id = Bytes{0x52, 0x45, 0x51, 0x31};
  m.rsa_signature = Bytes(256, 0x5c);
  m.sig_scheme = 1;
  m.key_ids = std::vector<Bytes>{{0x6b, 0x31}, {0x6b, 0x32, 0x33}};
  return m;
}

wire::Message fixture_lic_resp() {
  wire::LicenseResponse m;
  m.nonce = 0x0a0b0c0du;
  m.request_id = Bytes{0x52, 0x45, 0x51, 0x31};
  m.enc_session_key = Bytes(256, 0x77);
  wire::KeyEntry e1;
  e1.key_id = Bytes{0x6b, 0x31};
  e1.iv.fill(0x10);
  e1.enc_key = Bytes(32, 0x20);
  e1.kcb_blob = Bytes(16, 0x30);
  e1.kcb_encrypted = true;
  wire::KeyEntry e2;
  e2.key_id = Bytes{0x6b, 0x32, 0x33};
  e2.iv.fill(0x11);
  e2.enc_key = Bytes(32, 0x21);
  e2.kcb_blob = Bytes(16, 0x31);
  e2.kcb_encrypted = false;
  m.key_entries = {e1, e2};
  m.new_server_mac_key_ct = Bytes(64, 0x44);
  MacTag tag{};
  tag.fill(0xcc);
  m.hmac_tag = tag;
  return m;
}

wire::Message fixture_refresh_req() {
  wire::RefreshRequest m;
  m.request_id = Bytes{0x52, 0x45, 0x51, 0x31};
  m.key_id = Bytes{0x6b, 0x31};
  MacTag tag{};
  tag.fill(0xdd);
  m.hmac_tag = tag;
  return m;
}

wire::Message fixture_refresh_resp() {
  wire::RefreshResponse m;
  m.key_id = Bytes{0x6b, 0x31};
  m.ttl = 7200;
  MacTag tag{};
  tag.fill(0xee);
  m.hmac_tag = tag;
  return m;
}

std::vector<WireFixture> wire_fixtures() {
  return {
      {"error.wvmsg", fixture_error()},
      {"prov_req.wvmsg", fixture_prov_req()},
      {"prov_resp.wvmsg", fixture_prov_resp()},
      {"lic_req.wvmsg", fixture_lic_req()},
      {"lic_resp.wvmsg", fixture_lic_resp()},
      {"refresh_req.wvmsg", fixture_refresh_req()},
      {"refresh_resp.wvmsg", fixture_refresh_resp()},
  };
}

std::string fixture_path(const char* name) {
  return std::string(WVSIM_FIXTURE_DIR) + "/" + name;
}

wire::Message random_wire_message(RandomSource& rng) {
  const uint32_t type = rng.next_u32() % 7;
  const auto maybe = [&rng]() { return rng.next_u32() % 4 != 0; };
  switch (type) {
    case 0: {
      wire::ErrorResponse m;
      if (maybe()) m.error_code = static_cast<uint8_t>(rng.next_u32());
      return m;
    }
    case 1: {
      wire::ProvisioningRequest m;
      if (maybe()) m.nonce = rng.next_u32();
      if (maybe()) m.device_id = random_array<32>(rng);
      if (maybe()) m.provisioning_token = random_array<72>(rng);
      if (maybe()) m.hmac_tag = random_array<32>(rng);
      return m;
    }
    case 2: {
      wire::ProvisioningResponse m;
      if (maybe()) m.nonce = rng.next_u32();
      if (maybe()) m.iv = random_array<16>(rng);
      if (maybe()) m.ciphertext = random_bytes(rng, 600, true);
      if (maybe()) m.hmac_tag = random_array<32>(rng);
      return m;
    }
    case 3: {
      wire::LicenseRequest m;
      if (maybe()) m.nonce = rng.next_u32();
      if (maybe()) m.device_id = random_array<32>(rng);
      if (maybe()) m.device_blob = random_bytes(rng, 100, true);
      if (maybe()) m.request_id = random_bytes(rng, 16, true);
      if (maybe()) m.rsa_signature = random_bytes(rng, 300, true);
      if (maybe()) m.sig_scheme = static_cast<uint8_t>(rng.next_u32());
      if (maybe()) {
        std::vector<Bytes> ids;
        const size_t n = rng.next_u32() % 4;
        for (size_t i = 0; i < n; ++i) {
          ids.push_back(random_bytes(rng, 24, false));
        }
        m.key_ids = std::move(ids);
      }
      return m;
    }
    case 4: {
      wire::LicenseResponse m;
      if (maybe()) m.nonce = rng.next_u32();
      if (maybe()) m.request_id = random_bytes(rng, 16, true);
      if (maybe()) m.enc_session_key = rng.bytes(256);
      const size_t entries = rng.next_u32() % 4;
      for (size_t i = 0; i < entries; ++i) {
        wire::KeyEntry e;
        e.key_id = random_bytes(rng, 24, false);
        e.iv = random_array<16>(rng);
        e.enc_key = random_bytes(rng, 48, false);
        e.kcb_blob = rng.bytes(16);
        e.kcb_encrypted = rng.next_u32() % 2 == 0;
        m.key_entries.push_back(std::move(e));
      }
      if (maybe()) m.new_server_mac_key_ct = random_bytes(rng, 80, true);
      if (maybe()) m.hmac_tag = random_array<32>(rng);
      return m;
    }
    case 5: {
      wire::RefreshRequest m;
      if (maybe()) m.request_id = random_bytes(rng, 16, true);
      if (maybe()) m.key_id = random_bytes(rng, 24, true);
      if (maybe()) m.hmac_tag = random_array<32>(rng);
      return m;
    }
    default: {
      wire::RefreshResponse m;
      if (maybe()) m.key_id = random_bytes(rng, 24, true);
      if (maybe()) m.ttl = rng.next_u32();
      if (maybe()) m.hmac_tag = random_array<32>(rng);
      return m;
    }
  }
}

}  // namespace wvsim::testing
