#include "wvsim/servers.hpp"

#include <cstring>

#include "wvsim/crypto.hpp"

namespace wvsim {

namespace {

ByteView key_view(const MacKey& k) { return ByteView(k.data(), k.size()); }

// PKCS#8 DER of the RSA-2048 key pair issued in deterministic mode.
constexpr const char* kFixedKeyPairHex =
    "308204bd020100300d06092a864886f70d0101010500048204a7308204a302010002820101009ef319b6b3dc143853c2"
    "840980d2cf55d55cec3b7ebc607c65b321f983ce6a506645acee6020a1d176abe1603254fc8c4361e16f864498337a77"
    "2bd3a66d26611dc9a9e9061883b86b3c3cdcb80711c8683aaa649b9e7268095c273b0cda3a782568a883a79e9161edb4"
    "0446fbe1cd4320363c9a52a52587c2ac8cad7a950443a34edaf7739e92b909d8ed6471f002f25ccacd123adcacc84b41"
    "729e7ecef23fea73d7114b633504c7f0dfb35d2471cc82eda00b706578f7c212b706f0dfd0fe700fc4abc848735a3bd9"
    "5f7ced5fcf496467cebe93c1934af4b8024e8057d1b09dd881a8ef1e0ddb2290d85bc806457eaa312f722e8bebecb3a5"
    "bd906ccd45e50203010001028201000368ea7f622136ee2a13d5427698ef2438fe743de6d487e05b4bd4b9d6289bdcc0"
    "d8e94d0d7db30da68aa8e6d2a597ebb2b805e949d0d7bab0fb9f527c1d417d1a071265f7eb6ce0a1acf4e44a4407e461"
    "4cb2e23e240fc71368fe997472365e0f4ab7ba12a2e2f25e1cfb6e2cbca06b3a7a17623b22cfa8e22afd4897c5871b70"
    "ac01a44c22d350bb719eb013840e5f362680d5da227bb6d0a57e6b3ed8cd19a472ed7c292b68c884315690a9ba933625"
    "3e7bac1dba92da2bb41d9aa47c9fd019264a4ca1dffa0f64f9f8c1706e1b12fb47aa9588569596cfbbf160aa00b72bf3"
    "bd0b35d96677be519b0260fe1a27cb1f8abccda065efc7bf20ccca37be76e902818100bb308921e5532565a3944438b1"
    "739306ea9d62f157535bf434495183ad976604cb1071e4c2fd8eacb062c79e792bc7a8971c678abd36c6704e8f6aca65"
    "7139cdb1f5dbc7d682c54fcd964cfb85a23433af9ad3dedd91caf70c527ddb2e96e410b3064d0ab5f0d1edfb945cc74e"
    "e4d69ad7c14eb427765d2994b76c6ca684dd2d02818100d9610b0d92b3fc0aa76054500e74c79395acfc1535d6f163fe"
    "a279bce3346e7c2dfceffc0619c2187cb36bacbe5b753fcdc79d9a9eb17f554a8578ec1f0a91e652344a9831d11a3d49"
    "85151229526a8701a906fa115c645d8f6e486339f3d1fe2234f3ad8384563b3c143b9b2efa93934b1c500d8c50b80466"
    "96cef584a32e99028181009d4f78af47adcc6bd240b3e4811c839ef86433d66670e38222becb0642484db011874c6fd7"
    "7e86fc916f321af7f1d6e4d3b9473acd30cf2b6a9a1440eb677010715210d5ac6c51ad7334b0956004a4a21b1d9e9858"
    "d44121c4f53e57889bbe265a8d1d09b7451ee744d9b5eeb95a8f0fa9ea065e581b9cc768f78ce2f23e0e310281803e79"
    "4066f73998ff2ad96981d495c561ea0b5c2b705cc4e55b2230e0935fd73d032e857e25f6b32cbc7208490e3054c3308d"
    "e502b2070b346505751a4f558756ed5b2ff10ba82fe55b42cf2a780bc2a7e8573eb511d63ed610c9be2e1e52af905d1e"
    "60c6065d3b372cee17af62d20b25b2d9813c538e4344a883411998b41949028180272f9458112e293372f374ee0e303f"
    "4215c6f948b883a695f667343e2c2802fa757134b4aa85051422227802e04e00ba3ef5b4f19b6e57f7bb90f941d945c6"
    "1cadeed6c8cef573fafca55028db4f85ac850e67663588ac00aa7c27b849fcb86d8a075ca677554b598fdd0fcfc7cb3a"
    "08c26d9db8df0245b70605f92f73584813";

}  // namespace

DerivedKeySet server_provisioning_derivation(const DeviceRecord& rec,
                                             const DeviceId& device_id) {
  const Bytes blob = provisioning_blob(
      ByteView(rec.provisioning_token.data(), rec.provisioning_token.size()),
      ByteView(device_id.data(), device_id.size()));
  DerivedKeySet out;
  derive_keys(rec.device_key, build_contexts(blob), out);
  return out;
}

rsa::RsaKeyPair deterministic_device_keypair() {
  const auto der = from_hex(kFixedKeyPairHex);
  rsa::RsaKeyPair kp;
  if (der) rsa::RsaKeyPair::from_pkcs8_der(*der, kp);
  return kp;
}

void ServerKeystore::register_device(const DeviceId& id,
                                     const DeviceRecord& rec) {
  std::lock_guard lk(mu_);
  devices_[id] = rec;
}

bool ServerKeystore::lookup_device(const DeviceId& id,
                                   DeviceRecord& out) const {
  std::lock_guard lk(mu_);
  auto it = devices_.find(id);
  if (it == devices_.end()) return false;
  out = it->second;
  return true;
}

void ServerKeystore::store_device_keypair(const DeviceId& id,
                                          rsa::RsaKeyPair kp) {
  std::lock_guard lk(mu_);
  device_keypairs_[id] = std::move(kp);
}

bool ServerKeystore::lookup_device_keypair(const DeviceId& id,
                                           rsa::RsaKeyPair& out) const {
  std::lock_guard lk(mu_);
  auto it = device_keypairs_.find(id);
  if (it == device_keypairs_.end()) return false;
  out = it->second;
  return true;
}

void ServerKeystore::add_content_key(const Bytes& key_id,
                                     const ContentKeyRecord& rec) {
  std::lock_guard lk(mu_);
  content_keys_[key_id] = rec;
}

bool ServerKeystore::lookup_content_key(const Bytes& key_id,
                                        ContentKeyRecord& out) const {
  std::lock_guard lk(mu_);
  auto it = content_keys_.find(key_id);
  if (it == content_keys_.end()) return false;
  out = it->second;
  return true;
}

std::vector<Bytes> ServerKeystore::content_key_ids() const {
  std::lock_guard lk(mu_);
  std::vector<Bytes> out;
  out.reserve(content_keys_.size());
  for (const auto& [id, rec] : content_keys_) out.push_back(id);
  return out;
}

Status ProvisioningServer::handle(const wire::ProvisioningRequest& req,
                                  wire::ProvisioningResponse& resp) {
  if (!req.nonce || !req.device_id || !req.provisioning_token ||
      !req.hmac_tag) {
    return Status::MalformedFrame;
  }
  DeviceRecord rec;
  if (!store_.lookup_device(*req.device_id, rec)) {
    return Status::UnknownDevice;
  }
  const DerivedKeySet derived =
      server_provisioning_derivation(rec, *req.device_id);

  const Bytes covered = wire::mac_input(wire::Message(req));
  const MacTag expect =
      crypto::hmac_sha256(key_view(derived.mac_client_key), covered);
  if (!ct_equal(expect, *req.hmac_tag)) return Status::BadClientMac;

  rsa::RsaKeyPair kp;
  if (!store_.lookup_device_keypair(*req.device_id, kp)) {
    if (cfg_.deterministic_rsa) {
      kp = deterministic_device_keypair();
    } else {
      Status st = rsa::RsaKeyPair::generate(2048, kp);
      if (st != Status::Ok) return st;
    }
    store_.store_device_keypair(*req.device_id, kp);
  }

  Bytes pkcs8;
  Status st = kp.to_pkcs8_der(pkcs8);
  if (st != Status::Ok) return st;

  AesIv iv{};
  if (!rng_.fill(iv)) return Status::EntropyError;
  Bytes ct;
  st = crypto::aes128_cbc_encrypt(derived.asset_key, iv, pkcs8, ct);
  wipe(pkcs8);
  if (st != Status::Ok) return st;

  resp = wire::ProvisioningResponse{};
  resp.nonce = *req.nonce;
  resp.iv = iv;
  resp.ciphertext = std::move(ct);
  resp.hmac_tag =
      crypto::hmac_sha256(key_view(derived.mac_server_key),
                          wire::mac_input(wire::Message(resp)));
  return Status::Ok;
}

Status LicenseServer::handle_license(const wire::LicenseRequest& req,
                                     wire::LicenseResponse& resp) {
  if (!req.nonce || !req.device_id || !req.device_blob || !req.request_id ||
      !req.rsa_signature || !req.sig_scheme || !req.key_ids) {
    return Status::MalformedFrame;
  }
  if (*req.sig_scheme != static_cast<uint8_t>(rsa::SigScheme::Pss) &&
      *req.sig_scheme != static_cast<uint8_t>(rsa::SigScheme::Pkcs1v15)) {
    return Status::MalformedFrame;
  }
  rsa::RsaKeyPair device_kp;
  if (!store_.lookup_device_keypair(*req.device_id, device_kp)) {
    // Deterministic runs share one well-known device keypair, so a registered
    // device that provisioned in an earlier process can still be licensed.
    DeviceRecord rec;
    if (!(cfg_.deterministic_rsa && store_.lookup_device(*req.device_id, rec))) {
      return Status::UnknownDevice;
    }
    device_kp = deterministic_device_keypair();
    store_.store_device_keypair(*req.device_id, device_kp);
  }
  rsa::RsaPublicKey device_pub;
  Status st = device_kp.public_key(device_pub);
  if (st != Status::Ok) return st;

  const Bytes signed_bytes = wire::signing_input(req);
  st = device_pub.verify(static_cast<rsa::SigScheme>(*req.sig_scheme),
                         signed_bytes, *req.rsa_signature);
  if (st != Status::Ok) return Status::BadSignature;

  std::vector<ContentKeyRecord> records;
  records.reserve(req.key_ids->size());
  for (const auto& id : *req.key_ids) {
    ContentKeyRecord rec;
    if (!store_.lookup_content_key(id, rec)) return Status::UnknownKeyId;
    records.push_back(rec);
  }

  const Aes128Key session_key = rng_.key16();
  Bytes enc_session_key;
  st = device_pub.encrypt_oaep_sha1(
      ByteView(session_key.data(), session_key.size()), rng_,
      enc_session_key);
  if (st != Status::Ok) return st;

  DerivedKeySet derived;
  st = derive_keys(session_key, build_contexts(*req.device_blob), derived);
  if (st != Status::Ok) return st;

  resp = wire::LicenseResponse{};
  resp.nonce = *req.nonce;
  resp.request_id = *req.request_id;
  resp.enc_session_key = std::move(enc_session_key);

  for (size_t i = 0; i < records.size(); ++i) {
    const ContentKeyRecord& rec = records[i];
    wire::KeyEntry entry;
    entry.key_id = (*req.key_ids)[i];
    if (!rng_.fill(entry.iv)) return Status::EntropyError;
    st = crypto::aes128_cbc_encrypt(
        derived.asset_key, entry.iv,
        ByteView(rec.key.data(), rec.key.size()), entry.enc_key);
    if (st != Status::Ok) return st;

    KeyControlBlock kcb;
    kcb.nonce = *req.nonce;
    kcb.ttl = rec.ttl;
    // The nonce binding is protocol-level; usage rights come from the
    // catalogue.
    kcb.control_bits = rec.control_bits | kcb_bits::kNonceRequired;
    const auto kcb_raw = serialize_kcb(kcb);
    if (cfg_.encrypt_kcb) {
      uint8_t block[16];
      st = crypto::aes128_encrypt_block(rec.key, kcb_raw.data(), block);
      if (st != Status::Ok) return st;
      entry.kcb_blob.assign(block, block + 16);
      entry.kcb_encrypted = true;
    } else {
      entry.kcb_blob.assign(kcb_raw.begin(), kcb_raw.end());
      entry.kcb_encrypted = false;
    }
    resp.key_entries.push_back(std::move(entry));
  }

  DerivedKeySet session_derived = derived;
  if (cfg_.rotate_server_mac_key) {
    MacKey rotated{};
    if (!rng_.fill(rotated)) return Status::EntropyError;
    AesIv iv{};
    if (!rng_.fill(iv)) return Status::EntropyError;
    Bytes ct;
    st = crypto::aes128_cbc_encrypt(derived.asset_key, iv,
                                    ByteView(rotated.data(), rotated.size()),
                                    ct);
    if (st != Status::Ok) return st;
    Bytes value(iv.begin(), iv.end());
    append(value, ct);
    resp.new_server_mac_key_ct = std::move(value);
    session_derived.mac_server_key = rotated;
  }

  resp.hmac_tag = crypto::hmac_sha256(key_view(derived.mac_server_key),
                                      wire::mac_input(wire::Message(resp)));

  {
    std::lock_guard lk(mu_);
    sessions_[*req.request_id] = SessionRecord{session_derived};
  }
  return Status::Ok;
}

Status LicenseServer::handle_refresh(const wire::RefreshRequest& req,
                                     wire::RefreshResponse& resp) {
  if (!req.request_id || !req.key_id || !req.hmac_tag) {
    return Status::MalformedFrame;
  }
  SessionRecord record;
  {
    std::lock_guard lk(mu_);
    auto it = sessions_.find(*req.request_id);
    if (it == sessions_.end()) return Status::BadClientMac;
    record = it->second;
  }
  const Bytes covered = wire::mac_input(wire::Message(req));
  const MacTag expect =
      crypto::hmac_sha256(key_view(record.derived.mac_client_key), covered);
  if (!ct_equal(expect, *req.hmac_tag)) return Status::BadClientMac;

  ContentKeyRecord rec;
  if (!store_.lookup_content_key(*req.key_id, rec)) {
    return Status::UnknownKeyId;
  }

  uint32_t granted = rec.ttl;
  {
    std::lock_guard lk(mu_);
    if (refresh_ttl_override_) granted = *refresh_ttl_override_;
  }

  resp = wire::RefreshResponse{};
  resp.key_id = *req.key_id;
  resp.ttl = granted;
  resp.hmac_tag =
      crypto::hmac_sha256(key_view(record.derived.mac_server_key),
                          wire::mac_input(wire::Message(resp)));
  return Status::Ok;
}

Status LicenseServer::encrypt_content(const Bytes& key_id, ByteView plaintext,
                                      const SubsamplePlan& plan,
                                      CencPackage& out) {
  ContentKeyRecord rec;
  if (!store_.lookup_content_key(key_id, rec)) return Status::UnknownKeyId;
  out = CencPackage{};
  if (!rng_.fill(out.iv)) return Status::EntropyError;
  out.plan = plan;
  return cenc_transform(rec.key, out.iv, plan, plaintext, out.data);
}

void LicenseServer::set_refresh_ttl_override(std::optional<uint32_t> ttl) {
  std::lock_guard lk(mu_);
  refresh_ttl_override_ = ttl;
}

wire::Message dispatch_request(ProvisioningServer& prov, LicenseServer& lic,
                               const wire::Message& req) {
  Status st = Status::UnknownMsgType;
  if (const auto* p = std::get_if<wire::ProvisioningRequest>(&req)) {
    wire::ProvisioningResponse resp;
    st = prov.handle(*p, resp);
    if (st == Status::Ok) return resp;
  } else if (const auto* l = std::get_if<wire::LicenseRequest>(&req)) {
    wire::LicenseResponse resp;
    st = lic.handle_license(*l, resp);
    if (st == Status::Ok) return resp;
  } else if (const auto* r = std::get_if<wire::RefreshRequest>(&req)) {
    wire::RefreshResponse resp;
    st = lic.handle_refresh(*r, resp);
    if (st == Status::Ok) return resp;
  }
  wire::ErrorResponse err;
  err.error_code = wire::wire_error_code(st);
  return err;
}

}  // namespace wvsim
