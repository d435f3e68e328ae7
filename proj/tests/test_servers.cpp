#include "doctest.h"
#include "support/env.hpp"
#include "support/oracles.hpp"
#include "wvsim/crypto.hpp"

using namespace wvsim;
using namespace wvsim::testing;

namespace {

ByteView mk(const MacKey& k) { return ByteView(k.data(), k.size()); }

struct ServerRig {
  ServerKeystore store;
  DeterministicRandom rng{31337};
  Keybox kb;
  Bytes kid{0x6b, 0x30};
  Aes128Key content_key{};
  ServerConfig cfg;

  explicit ServerRig(bool encrypt_kcb = true, bool rotate = false) {
    REQUIRE(generate_keybox(rng, kb) == Status::Ok);
    store.register_device(kb.device_id,
                          DeviceRecord{kb.device_key, kb.provisioning_token});
    content_key.fill(0xd4);
    store.add_content_key(
        kid, ContentKeyRecord{content_key, kcb_bits::kAllowContentDecrypt, 300});
    cfg.deterministic_rsa = false;
    cfg.encrypt_kcb = encrypt_kcb;
    cfg.rotate_server_mac_key = rotate;
  }

  wire::ProvisioningRequest prov_request(uint32_t nonce) const {
    wire::ProvisioningRequest req;
    req.nonce = nonce;
    req.device_id = kb.device_id;
    req.provisioning_token = kb.provisioning_token;
    const DerivedKeySet derived = client_provisioning_derivation(kb);
    req.hmac_tag = crypto::hmac_sha256(mk(derived.mac_client_key),
                                       wire::mac_input(wire::Message(req)));
    return req;
  }

  wire::LicenseRequest license_request(const rsa::RsaKeyPair& kp,
                                       uint32_t nonce,
                                       const std::vector<Bytes>& key_ids) {
    wire::LicenseRequest req;
    req.nonce = nonce;
    req.device_id = kb.device_id;
    req.device_blob = device_info_blob("m", "a", "v", "b");
    req.request_id = Bytes{0x09, 0x09};
    req.sig_scheme = static_cast<uint8_t>(rsa::SigScheme::Pss);
    req.key_ids = key_ids;
    Bytes sig;
    REQUIRE(kp.sign(rsa::SigScheme::Pss, wire::signing_input(req), rng, sig) ==
            Status::Ok);
    req.rsa_signature = std::move(sig);
    return req;
  }
};

// Recovers the license-phase key set the way the client would.
DerivedKeySet recover_license_keys(const rsa::RsaKeyPair& kp,
                                   const wire::LicenseRequest& req,
                                   const wire::LicenseResponse& resp) {
  Bytes sk;
  REQUIRE(kp.decrypt_oaep_sha1(view(*resp.enc_session_key), sk) == Status::Ok);
  REQUIRE(sk.size() == 16);
  Aes128Key session_key{};
  std::copy(sk.begin(), sk.end(), session_key.begin());
  DerivedKeySet derived;
  REQUIRE(derive_keys(session_key, build_contexts(view(*req.device_blob)),
                      derived) == Status::Ok);
  return derived;
}

}  // namespace

TEST_SUITE("servers") {

TEST_CASE("provisioning issues a wrapped key to a known device") {
  ServerRig rig;
  ProvisioningServer prov(rig.store, rig.cfg, rig.rng);

  const wire::ProvisioningRequest req = rig.prov_request(0xaabbccdd);
  wire::ProvisioningResponse resp;
  REQUIRE(prov.handle(req, resp) == Status::Ok);

  CHECK(*resp.nonce == 0xaabbccdd);
  REQUIRE(resp.iv.has_value());
  REQUIRE(resp.ciphertext.has_value());
  REQUIRE(resp.hmac_tag.has_value());

  const DerivedKeySet derived = client_provisioning_derivation(rig.kb);
  const MacTag expect = crypto::hmac_sha256(
      mk(derived.mac_server_key), wire::mac_input(wire::Message(resp)));
  CHECK(expect == *resp.hmac_tag);

  Bytes pkcs8;
  REQUIRE(crypto::aes128_cbc_decrypt(derived.asset_key, *resp.iv,
                                     *resp.ciphertext, pkcs8) == Status::Ok);
  rsa::RsaKeyPair kp;
  CHECK(rsa::RsaKeyPair::from_pkcs8_der(pkcs8, kp) == Status::Ok);

  // The key pair now on file matches what went over the wire.
  rsa::RsaKeyPair stored;
  REQUIRE(rig.store.lookup_device_keypair(rig.kb.device_id, stored));
  Bytes stored_der;
  REQUIRE(stored.to_pkcs8_der(stored_der) == Status::Ok);
  CHECK(stored_der == pkcs8);
}

TEST_CASE("provisioning twice hands out the same key pair") {
  ServerRig rig;
  ProvisioningServer prov(rig.store, rig.cfg, rig.rng);
  const DerivedKeySet derived = client_provisioning_derivation(rig.kb);

  Bytes first, second;
  for (Bytes* out : {&first, &second}) {
    wire::ProvisioningResponse resp;
    REQUIRE(prov.handle(rig.prov_request(rig.rng.next_u32()), resp) ==
            Status::Ok);
    REQUIRE(crypto::aes128_cbc_decrypt(derived.asset_key, *resp.iv,
                                       *resp.ciphertext, *out) == Status::Ok);
  }
  CHECK(first == second);
}

TEST_CASE("provisioning rejects unknown devices and bad MACs") {
  ServerRig rig;
  ProvisioningServer prov(rig.store, rig.cfg, rig.rng);
  wire::ProvisioningResponse resp;

  wire::ProvisioningRequest unknown = rig.prov_request(1);
  (*unknown.device_id)[0] ^= 0x01;
  CHECK(prov.handle(unknown, resp) == Status::UnknownDevice);

  wire::ProvisioningRequest bad_mac = rig.prov_request(2);
  (*bad_mac.hmac_tag)[7] ^= 0x01;
  CHECK(prov.handle(bad_mac, resp) == Status::BadClientMac);

  wire::ProvisioningRequest tampered = rig.prov_request(3);
  (*tampered.provisioning_token)[0] ^= 0x01;
  CHECK(prov.handle(tampered, resp) == Status::BadClientMac);

  wire::ProvisioningRequest incomplete = rig.prov_request(4);
  incomplete.provisioning_token.reset();
  CHECK(prov.handle(incomplete, resp) == Status::MalformedFrame);
}

TEST_CASE("license issue round trip checks out against the catalogue") {
  ServerRig rig;
  LicenseServer lic(rig.store, rig.cfg, rig.rng);
  const rsa::RsaKeyPair kp = deterministic_device_keypair();
  rig.store.store_device_keypair(rig.kb.device_id, kp);

  const wire::LicenseRequest req =
      rig.license_request(kp, 0x31415926, {rig.kid});
  wire::LicenseResponse resp;
  REQUIRE(lic.handle_license(req, resp) == Status::Ok);

  CHECK(*resp.nonce == 0x31415926);
  CHECK(*resp.request_id == *req.request_id);
  CHECK(resp.enc_session_key->size() == 256);
  REQUIRE(resp.key_entries.size() == 1);
  CHECK_FALSE(resp.new_server_mac_key_ct.has_value());

  const DerivedKeySet derived = recover_license_keys(kp, req, resp);
  const MacTag expect = crypto::hmac_sha256(
      mk(derived.mac_server_key), wire::mac_input(wire::Message(resp)));
  CHECK(expect == *resp.hmac_tag);

  const wire::KeyEntry& entry = resp.key_entries[0];
  CHECK(entry.key_id == rig.kid);
  Bytes key_raw;
  REQUIRE(crypto::aes128_cbc_decrypt(derived.asset_key, entry.iv,
                                     entry.enc_key, key_raw) == Status::Ok);
  CHECK(key_raw == Bytes(rig.content_key.begin(), rig.content_key.end()));

  REQUIRE(entry.kcb_encrypted);
  REQUIRE(entry.kcb_blob.size() == 16);
  uint8_t block[16];
  REQUIRE(crypto::aes128_decrypt_block(rig.content_key, entry.kcb_blob.data(),
                                       block) == Status::Ok);
  KeyControlBlock kcb;
  REQUIRE(parse_kcb(ByteView(block, 16), kcb) == Status::Ok);
  CHECK(kcb.nonce == 0x31415926);
  CHECK(kcb.ttl == 300);
  CHECK(kcb.control_bits ==
        (kcb_bits::kAllowContentDecrypt | kcb_bits::kNonceRequired));
}

TEST_CASE("license with plaintext control blocks when so configured") {
  ServerRig rig(/*encrypt_kcb=*/false);
  LicenseServer lic(rig.store, rig.cfg, rig.rng);
  const rsa::RsaKeyPair kp = deterministic_device_keypair();
  rig.store.store_device_keypair(rig.kb.device_id, kp);

  wire::LicenseResponse resp;
  REQUIRE(lic.handle_license(rig.license_request(kp, 5, {rig.kid}), resp) ==
          Status::Ok);
  REQUIRE(resp.key_entries.size() == 1);
  CHECK_FALSE(resp.key_entries[0].kcb_encrypted);
  KeyControlBlock kcb;
  CHECK(parse_kcb(view(resp.key_entries[0].kcb_blob), kcb) == Status::Ok);
  CHECK(kcb.nonce == 5);
}

TEST_CASE("license requests are screened before any key leaves") {
  ServerRig rig;
  LicenseServer lic(rig.store, rig.cfg, rig.rng);
  const rsa::RsaKeyPair kp = deterministic_device_keypair();

  wire::LicenseResponse resp;

  // Registered device, but never provisioned: no key pair to verify with.
  CHECK(lic.handle_license(rig.license_request(kp, 1, {rig.kid}), resp) ==
        Status::UnknownDevice);

  rig.store.store_device_keypair(rig.kb.device_id, kp);

  wire::LicenseRequest bad_sig = rig.license_request(kp, 2, {rig.kid});
  (*bad_sig.rsa_signature)[0] ^= 0x01;
  CHECK(lic.handle_license(bad_sig, resp) == Status::BadSignature);

  wire::LicenseRequest resigned = rig.license_request(kp, 3, {rig.kid});
  resigned.nonce = 4;  // signature no longer covers the message
  CHECK(lic.handle_license(resigned, resp) == Status::BadSignature);

  wire::LicenseRequest unknown_key =
      rig.license_request(kp, 5, {Bytes{0x7a, 0x7b}});
  CHECK(lic.handle_license(unknown_key, resp) == Status::UnknownKeyId);

  wire::LicenseRequest bad_scheme = rig.license_request(kp, 6, {rig.kid});
  bad_scheme.sig_scheme = 7;
  CHECK(lic.handle_license(bad_scheme, resp) == Status::MalformedFrame);

  wire::LicenseRequest incomplete = rig.license_request(kp, 7, {rig.kid});
  incomplete.device_blob.reset();
  CHECK(lic.handle_license(incomplete, resp) == Status::MalformedFrame);

  // Unregistered device id fails even in deterministic mode.
  ServerConfig det = rig.cfg;
  det.deterministic_rsa = true;
  LicenseServer det_lic(rig.store, det, rig.rng);
  wire::LicenseRequest ghost = rig.license_request(kp, 8, {rig.kid});
  (*ghost.device_id)[0] ^= 0x01;
  CHECK(det_lic.handle_license(ghost, resp) == Status::UnknownDevice);
}

TEST_CASE("deterministic mode licenses a registered device without state") {
  ServerRig rig;
  rig.cfg.deterministic_rsa = true;
  LicenseServer lic(rig.store, rig.cfg, rig.rng);
  const rsa::RsaKeyPair kp = deterministic_device_keypair();

  // No stored key pair: the server falls back to the fixed pair for a
  // device it knows, as if provisioning had happened in another process.
  rsa::RsaKeyPair probe;
  REQUIRE_FALSE(rig.store.lookup_device_keypair(rig.kb.device_id, probe));
  wire::LicenseResponse resp;
  CHECK(lic.handle_license(rig.license_request(kp, 9, {rig.kid}), resp) ==
        Status::Ok);
  CHECK(rig.store.lookup_device_keypair(rig.kb.device_id, probe));
}

TEST_CASE("refresh extends a session it can authenticate") {
  ServerRig rig;
  LicenseServer lic(rig.store, rig.cfg, rig.rng);
  const rsa::RsaKeyPair kp = deterministic_device_keypair();
  rig.store.store_device_keypair(rig.kb.device_id, kp);

  const wire::LicenseRequest req = rig.license_request(kp, 10, {rig.kid});
  wire::LicenseResponse lresp;
  REQUIRE(lic.handle_license(req, lresp) == Status::Ok);
  const DerivedKeySet derived = recover_license_keys(kp, req, lresp);

  wire::RefreshRequest rreq;
  rreq.request_id = *req.request_id;
  rreq.key_id = rig.kid;
  rreq.hmac_tag = crypto::hmac_sha256(mk(derived.mac_client_key),
                                      wire::mac_input(wire::Message(rreq)));

  wire::RefreshResponse rresp;
  REQUIRE(lic.handle_refresh(rreq, rresp) == Status::Ok);
  CHECK(*rresp.key_id == rig.kid);
  CHECK(*rresp.ttl == 300);
  const MacTag expect = crypto::hmac_sha256(
      mk(derived.mac_server_key), wire::mac_input(wire::Message(rresp)));
  CHECK(expect == *rresp.hmac_tag);

  // The grant override steers what the next refresh hands out.
  lic.set_refresh_ttl_override(42);
  REQUIRE(lic.handle_refresh(rreq, rresp) == Status::Ok);
  CHECK(*rresp.ttl == 42);
  lic.set_refresh_ttl_override(std::nullopt);
  REQUIRE(lic.handle_refresh(rreq, rresp) == Status::Ok);
  CHECK(*rresp.ttl == 300);

  // Unknown license session and wrong MAC are indistinguishable.
  wire::RefreshRequest ghost = rreq;
  ghost.request_id = Bytes{0x00};
  CHECK(lic.handle_refresh(ghost, rresp) == Status::BadClientMac);

  wire::RefreshRequest forged = rreq;
  (*forged.hmac_tag)[0] ^= 0x01;
  CHECK(lic.handle_refresh(forged, rresp) == Status::BadClientMac);

  wire::RefreshRequest unknown_key = rreq;
  unknown_key.key_id = Bytes{0x7a};
  unknown_key.hmac_tag =
      crypto::hmac_sha256(mk(derived.mac_client_key),
                          wire::mac_input(wire::Message(unknown_key)));
  CHECK(lic.handle_refresh(unknown_key, rresp) == Status::UnknownKeyId);

  wire::RefreshRequest incomplete = rreq;
  incomplete.key_id.reset();
  CHECK(lic.handle_refresh(incomplete, rresp) == Status::MalformedFrame);
}

TEST_CASE("MAC key rotation signs now and swaps for later") {
  ServerRig rig(/*encrypt_kcb=*/true, /*rotate=*/true);
  LicenseServer lic(rig.store, rig.cfg, rig.rng);
  const rsa::RsaKeyPair kp = deterministic_device_keypair();
  rig.store.store_device_keypair(rig.kb.device_id, kp);

  const wire::LicenseRequest req = rig.license_request(kp, 11, {rig.kid});
  wire::LicenseResponse resp;
  REQUIRE(lic.handle_license(req, resp) == Status::Ok);
  const DerivedKeySet derived = recover_license_keys(kp, req, resp);

  // The response itself is signed under the pre-rotation key.
  const MacTag old_mac = crypto::hmac_sha256(
      mk(derived.mac_server_key), wire::mac_input(wire::Message(resp)));
  CHECK(old_mac == *resp.hmac_tag);

  // The embedded field unwraps to the rotated 32-byte key.
  REQUIRE(resp.new_server_mac_key_ct.has_value());
  const Bytes& field = *resp.new_server_mac_key_ct;
  REQUIRE(field.size() >= 32);
  AesIv iv{};
  std::copy(field.begin(), field.begin() + 16, iv.begin());
  Bytes rotated_raw;
  REQUIRE(crypto::aes128_cbc_decrypt(derived.asset_key, iv,
                                     ByteView(field).subspan(16),
                                     rotated_raw) == Status::Ok);
  REQUIRE(rotated_raw.size() == 32);
  MacKey rotated{};
  std::copy(rotated_raw.begin(), rotated_raw.end(), rotated.begin());

  // Refresh responses for this session are signed under the rotated key.
  wire::RefreshRequest rreq;
  rreq.request_id = *req.request_id;
  rreq.key_id = rig.kid;
  rreq.hmac_tag = crypto::hmac_sha256(mk(derived.mac_client_key),
                                      wire::mac_input(wire::Message(rreq)));
  wire::RefreshResponse rresp;
  REQUIRE(lic.handle_refresh(rreq, rresp) == Status::Ok);
  const MacTag under_old = crypto::hmac_sha256(
      mk(derived.mac_server_key), wire::mac_input(wire::Message(rresp)));
  const MacTag under_new = crypto::hmac_sha256(
      mk(rotated), wire::mac_input(wire::Message(rresp)));
  CHECK(under_new == *rresp.hmac_tag);
  CHECK_FALSE(under_old == *rresp.hmac_tag);
}

TEST_CASE("content packaging uses the catalogue key") {
  ServerRig rig;
  LicenseServer lic(rig.store, rig.cfg, rig.rng);

  const Bytes plain(300, 0x6e);
  const SubsamplePlan plan = make_subsamples(plain.size(), 32, 96);
  CencPackage package;
  REQUIRE(lic.encrypt_content(rig.kid, view(plain), plan, package) ==
          Status::Ok);
  CHECK(package.data.size() == plain.size());
  CHECK(package.plan == plan);
  CHECK_FALSE(package.data == plain);

  const Bytes back =
      cenc_oracle(rig.content_key, package.iv, plan, view(package.data));
  CHECK(back == plain);

  CHECK(lic.encrypt_content(Bytes{0x00}, view(plain), plan, package) ==
        Status::UnknownKeyId);
}

TEST_CASE("dispatch answers failures with coded error frames") {
  ServerRig rig;
  ProvisioningServer prov(rig.store, rig.cfg, rig.rng);
  LicenseServer lic(rig.store, rig.cfg, rig.rng);

  // A healthy request dispatches to its handler.
  wire::Message ok =
      dispatch_request(prov, lic, wire::Message(rig.prov_request(21)));
  CHECK(std::holds_alternative<wire::ProvisioningResponse>(ok));

  // Handler failures come back as coded errors.
  wire::ProvisioningRequest ghost = rig.prov_request(22);
  (*ghost.device_id)[0] ^= 0x01;
  wire::Message err = dispatch_request(prov, lic, wire::Message(ghost));
  auto* e = std::get_if<wire::ErrorResponse>(&err);
  REQUIRE(e != nullptr);
  CHECK(*e->error_code == wire::wire_error_code(Status::UnknownDevice));
  CHECK(wire::status_from_wire(*e->error_code) == Status::UnknownDevice);

  // A response type is not a request.
  wire::Message misdirected =
      dispatch_request(prov, lic, wire::Message(wire::RefreshResponse{}));
  auto* u = std::get_if<wire::ErrorResponse>(&misdirected);
  REQUIRE(u != nullptr);
  CHECK(wire::status_from_wire(*u->error_code) == Status::UnknownMsgType);
}

TEST_CASE("keystore lists the catalogue") {
  ServerRig rig;
  rig.store.add_content_key(Bytes{0x01}, ContentKeyRecord{});
  const auto ids = rig.store.content_key_ids();
  CHECK(ids.size() == 2);
  ContentKeyRecord rec;
  CHECK(rig.store.lookup_content_key(rig.kid, rec));
  CHECK(rec.ttl == 300);
  CHECK_FALSE(rig.store.lookup_content_key(Bytes{0x02}, rec));
}

}  // TEST_SUITE
