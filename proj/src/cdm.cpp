#include "wvsim/cdm.hpp"

#include <algorithm>
#include <cstring>
#include <set>

#include "wvsim/crypto.hpp"

namespace wvsim {

namespace {

constexpr std::string_view kStorageLabel = "rsa-key-storage";
constexpr uint64_t kNonceWindowMs = 1000;
constexpr size_t kNonceRateLimit = 20;

ByteView key_view(const MacKey& k) { return ByteView(k.data(), k.size()); }

}  // namespace

DerivedKeySet client_provisioning_derivation(const Keybox& kb) {
  const Bytes blob = provisioning_blob(
      ByteView(kb.provisioning_token.data(), kb.provisioning_token.size()),
      ByteView(kb.device_id.data(), kb.device_id.size()));
  DerivedKeySet out;
  derive_keys(kb.device_key, build_contexts(blob), out);
  return out;
}

Aes128Key credential_storage_key(const Aes128Key& device_key) {
  DerivedKeySet set;
  derive_keys(device_key, build_contexts(to_bytes(kStorageLabel)), set);
  return set.asset_key;
}

bool NonceTable::contains(uint32_t nonce) const {
  return std::find(queue_.begin(), queue_.end(), nonce) != queue_.end();
}

void NonceTable::insert(uint32_t nonce) {
  if (queue_.size() >= capacity_) queue_.pop_front();
  queue_.push_back(nonce);
}

bool NonceTable::consume(uint32_t nonce) {
  auto it = std::find(queue_.begin(), queue_.end(), nonce);
  if (it == queue_.end()) return false;
  queue_.erase(it);
  return true;
}

Cdm::Cdm(CdmConfig cfg, Clock& clock, RandomSource& rng, TraceSink& trace)
    : cfg_(std::move(cfg)), clock_(clock), rng_(rng), trace_(trace) {}

Status Cdm::finish(Oecc op, std::optional<uint32_t> session, Status st,
                   ByteView in, ByteView out, std::string note) {
  TraceEvent ev;
  ev.op = op;
  ev.session = session;
  ev.status = st;
  ev.in = make_payload(in);
  ev.out = make_payload(out);
  ev.note = std::move(note);
  trace_.write(ev);
  return st;
}

Status Cdm::usage_stub(Oecc op) {
  std::lock_guard lk(mu_);
  return finish(op, std::nullopt, Status::Unsupported, {}, {});
}

Cdm::SessionState* Cdm::find_session(uint32_t session_id) {
  auto it = sessions_.find(session_id);
  return it == sessions_.end() ? nullptr : &it->second;
}

Status Cdm::install_keybox(ByteView wrapped, const Aes128Key& transport_key) {
  std::lock_guard lk(mu_);
  Keybox kb;
  Status st = wvsim::install_keybox(wrapped, transport_key, kb);
  if (st == Status::Ok) keybox_ = kb;
  return finish(Oecc::InstallKeybox, std::nullopt, st, wrapped, {});
}

Status Cdm::wrap_keybox(const Keybox& kb, const Aes128Key& transport_key,
                        Bytes& wrapped) {
  std::lock_guard lk(mu_);
  Status st = wvsim::wrap_keybox(kb, transport_key, rng_, wrapped);
  return finish(Oecc::WrapKeybox, std::nullopt, st, {}, wrapped);
}

Status Cdm::is_keybox_valid() {
  std::lock_guard lk(mu_);
  Status st = Status::NoKeybox;
  if (keybox_) {
    switch (validate_keybox(*keybox_)) {
      case KeyboxVerdict::Ok: st = Status::Ok; break;
      case KeyboxVerdict::BadMagic: st = Status::BadMagic; break;
      case KeyboxVerdict::BadCrc: st = Status::BadCrc; break;
    }
  }
  return finish(Oecc::IsKeyboxValid, std::nullopt, st, {}, {});
}

Status Cdm::get_device_id(DeviceId& out) {
  std::lock_guard lk(mu_);
  if (!keybox_) {
    return finish(Oecc::GetDeviceID, std::nullopt, Status::NoKeybox, {}, {});
  }
  out = keybox_->device_id;
  return finish(Oecc::GetDeviceID, std::nullopt, Status::Ok, {},
                ByteView(out.data(), out.size()));
}

Status Cdm::get_key_data(std::array<uint8_t, 72>& out) {
  std::lock_guard lk(mu_);
  if (!keybox_) {
    return finish(Oecc::GetKeyData, std::nullopt, Status::NoKeybox, {}, {});
  }
  out = keybox_->provisioning_token;
  return finish(Oecc::GetKeyData, std::nullopt, Status::Ok, {},
                ByteView(out.data(), out.size()));
}

Status Cdm::get_random(size_t n, Bytes& out) {
  std::lock_guard lk(mu_);
  out.resize(n);
  Status st = rng_.fill(out) ? Status::Ok : Status::EntropyError;
  if (st != Status::Ok) out.clear();
  return finish(Oecc::GetRandom, std::nullopt, st, {}, out);
}

Status Cdm::api_version(std::string& out) {
  std::lock_guard lk(mu_);
  out = cfg_.api_version;
  return finish(Oecc::ApiVersion, std::nullopt, Status::Ok, {},
                to_bytes(std::string_view(out)));
}

Status Cdm::security_level(std::string& out) {
  std::lock_guard lk(mu_);
  out = cfg_.security_level;
  return finish(Oecc::GetSecurityLevel, std::nullopt, Status::Ok, {},
                to_bytes(std::string_view(out)));
}

Status Cdm::open_session(uint32_t& session_id) {
  std::lock_guard lk(mu_);
  if (sessions_.size() >= cfg_.max_sessions) {
    return finish(Oecc::OpenSession, std::nullopt, Status::TooManySessions,
                  {}, {});
  }
  uint32_t id = 0;
  do {
    id = rng_.next_u32();
  } while (sessions_.count(id) != 0);
  SessionState s;
  s.id = id;
  sessions_.emplace(id, std::move(s));
  session_id = id;
  return finish(Oecc::OpenSession, id, Status::Ok, {}, {});
}

Status Cdm::close_session(uint32_t session_id) {
  std::lock_guard lk(mu_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    return finish(Oecc::CloseSession, session_id, Status::UnknownSession, {},
                  {});
  }
  SessionState& s = it->second;
  for (auto& [id, entry] : s.key_table) {
    wipe(std::span<uint8_t>(entry.key.data(), entry.key.size()));
  }
  if (s.derived) {
    wipe(std::span<uint8_t>(s.derived->asset_key.data(), 16));
    wipe(std::span<uint8_t>(s.derived->mac_client_key.data(), 32));
    wipe(std::span<uint8_t>(s.derived->mac_server_key.data(), 32));
  }
  sessions_.erase(it);
  return finish(Oecc::CloseSession, session_id, Status::Ok, {}, {});
}

Status Cdm::generate_nonce(uint32_t session_id, uint32_t& nonce) {
  std::lock_guard lk(mu_);
  if (!find_session(session_id)) {
    return finish(Oecc::GenerateNonce, session_id, Status::UnknownSession, {},
                  {});
  }
  const uint64_t now = clock_.now_ms();
  while (!nonce_times_ms_.empty() &&
         nonce_times_ms_.front() + kNonceWindowMs <= now) {
    nonce_times_ms_.pop_front();
  }
  if (nonce_times_ms_.size() >= kNonceRateLimit) {
    return finish(Oecc::GenerateNonce, session_id, Status::RateLimited, {},
                  {});
  }
  uint32_t n = 0;
  do {
    n = rng_.next_u32();
  } while (nonces_.contains(n));
  nonces_.insert(n);
  nonce_times_ms_.push_back(now);
  nonce = n;
  uint8_t buf[4];
  store_be32(n, buf);
  return finish(Oecc::GenerateNonce, session_id, Status::Ok, {},
                ByteView(buf, 4));
}

Status Cdm::generate_derived_keys(uint32_t session_id, const Keybox& kb) {
  std::lock_guard lk(mu_);
  SessionState* s = find_session(session_id);
  if (!s) {
    return finish(Oecc::GenerateDerivedKeys, session_id,
                  Status::UnknownSession, {}, {});
  }
  s->derived = client_provisioning_derivation(kb);
  return finish(Oecc::GenerateDerivedKeys, session_id, Status::Ok, {}, {});
}

Status Cdm::generate_signature(uint32_t session_id, ByteView message,
                               MacTag& tag) {
  std::lock_guard lk(mu_);
  SessionState* s = find_session(session_id);
  if (!s) {
    return finish(Oecc::GenerateSignature, session_id, Status::UnknownSession,
                  message, {});
  }
  if (!s->derived) {
    return finish(Oecc::GenerateSignature, session_id, Status::NoDerivedKeys,
                  message, {});
  }
  tag = crypto::hmac_sha256(key_view(s->derived->mac_client_key), message);
  return finish(Oecc::GenerateSignature, session_id, Status::Ok, message,
                ByteView(tag.data(), tag.size()));
}

Status Cdm::rewrap_device_rsa_key(uint32_t session_id,
                                  const wire::ProvisioningResponse& resp,
                                  const Aes128Key& storage_key,
                                  Bytes& wrapped) {
  std::lock_guard lk(mu_);
  const Bytes frame = wire::encode(wire::Message(resp));
  SessionState* s = find_session(session_id);
  auto fail = [&](Status st) {
    return finish(Oecc::RewrapDeviceRSAKey, session_id, st, frame, {});
  };
  if (!s) return fail(Status::UnknownSession);
  if (!s->derived) return fail(Status::NoDerivedKeys);
  if (!resp.nonce || !resp.iv || !resp.ciphertext || !resp.hmac_tag) {
    return fail(Status::MalformedFrame);
  }
  if (!nonces_.contains(*resp.nonce)) return fail(Status::StaleNonce);

  const Bytes covered = wire::mac_input(wire::Message(resp));
  const MacTag expect =
      crypto::hmac_sha256(key_view(s->derived->mac_server_key), covered);
  if (!ct_equal(expect, *resp.hmac_tag)) return fail(Status::BadServerMac);

  Bytes pkcs8;
  Status st = crypto::aes128_cbc_decrypt(s->derived->asset_key, *resp.iv,
                                         *resp.ciphertext, pkcs8);
  if (st != Status::Ok) return fail(st);

  rsa::RsaKeyPair key;
  st = rsa::RsaKeyPair::from_pkcs8_der(pkcs8, key);
  if (st != Status::Ok) {
    wipe(pkcs8);
    return fail(Status::MalformedKey);
  }

  AesIv iv{};
  if (!rng_.fill(iv)) {
    wipe(pkcs8);
    return fail(Status::EntropyError);
  }
  Bytes body(iv.begin(), iv.end());
  Bytes ct;
  st = crypto::aes128_cbc_encrypt(storage_key, iv, pkcs8, ct);
  wipe(pkcs8);
  if (st != Status::Ok) return fail(st);
  append(body, ct);
  const MacTag tag = crypto::hmac_sha256(
      ByteView(storage_key.data(), storage_key.size()), body);
  wrapped = std::move(body);
  wrapped.insert(wrapped.end(), tag.begin(), tag.end());

  nonces_.consume(*resp.nonce);
  return finish(Oecc::RewrapDeviceRSAKey, session_id, Status::Ok, frame,
                wrapped);
}

Status Cdm::load_device_rsa_key(uint32_t session_id, ByteView wrapped,
                                const Aes128Key& storage_key) {
  std::lock_guard lk(mu_);
  SessionState* s = find_session(session_id);
  auto fail = [&](Status st) {
    return finish(Oecc::LoadDeviceRSAKey, session_id, st, wrapped, {});
  };
  if (!s) return fail(Status::UnknownSession);
  if (wrapped.size() < 16 + 16 + 32) return fail(Status::MalformedKey);

  const ByteView body = wrapped.first(wrapped.size() - 32);
  const ByteView tag = wrapped.last(32);
  const MacTag expect = crypto::hmac_sha256(
      ByteView(storage_key.data(), storage_key.size()), body);
  if (!ct_equal(expect, tag)) return fail(Status::BadStorageMac);

  AesIv iv{};
  std::memcpy(iv.data(), body.data(), 16);
  Bytes pkcs8;
  Status st =
      crypto::aes128_cbc_decrypt(storage_key, iv, body.subspan(16), pkcs8);
  if (st != Status::Ok) return fail(Status::MalformedKey);
  rsa::RsaKeyPair key;
  st = rsa::RsaKeyPair::from_pkcs8_der(pkcs8, key);
  wipe(pkcs8);
  if (st != Status::Ok) return fail(Status::MalformedKey);
  s->rsa_key = std::move(key);
  return finish(Oecc::LoadDeviceRSAKey, session_id, Status::Ok, wrapped, {});
}

Status Cdm::generate_rsa_signature(uint32_t session_id, ByteView message,
                                   rsa::SigScheme scheme, Bytes& sig) {
  std::lock_guard lk(mu_);
  SessionState* s = find_session(session_id);
  std::string note = std::string("scheme=") + rsa::to_string(scheme);
  if (!s) {
    return finish(Oecc::GenerateRSASignature, session_id,
                  Status::UnknownSession, message, {}, std::move(note));
  }
  if (!s->rsa_key) {
    return finish(Oecc::GenerateRSASignature, session_id, Status::NoRsaKey,
                  message, {}, std::move(note));
  }
  Status st = s->rsa_key->sign(scheme, message, rng_, sig);
  return finish(Oecc::GenerateRSASignature, session_id, st, message, sig,
                std::move(note));
}

Status Cdm::derive_keys_from_session_key(uint32_t session_id,
                                         ByteView enc_session_key,
                                         ByteView device_blob) {
  std::lock_guard lk(mu_);
  SessionState* s = find_session(session_id);
  auto fail = [&](Status st) {
    return finish(Oecc::DeriveKeysFromSessionKey, session_id, st,
                  enc_session_key, {});
  };
  if (!s) return fail(Status::UnknownSession);
  if (!s->rsa_key) return fail(Status::NoRsaKey);

  Bytes sk;
  Status st = s->rsa_key->decrypt_oaep_sha1(enc_session_key, sk);
  if (st != Status::Ok) return fail(Status::OaepError);
  if (sk.size() != 16) {
    wipe(sk);
    return fail(Status::OaepError);
  }
  Aes128Key session_key{};
  std::memcpy(session_key.data(), sk.data(), 16);
  wipe(sk);

  DerivedKeySet derived;
  st = derive_keys(session_key, build_contexts(device_blob), derived);
  wipe(std::span<uint8_t>(session_key.data(), session_key.size()));
  if (st != Status::Ok) return fail(st);
  s->derived = derived;
  return finish(Oecc::DeriveKeysFromSessionKey, session_id, Status::Ok,
                enc_session_key, {});
}

Status Cdm::load_keys(uint32_t session_id, const wire::LicenseResponse& resp,
                      size_t& loaded) {
  std::lock_guard lk(mu_);
  const Bytes frame = wire::encode(wire::Message(resp));
  SessionState* s = find_session(session_id);
  auto fail = [&](Status st) {
    return finish(Oecc::LoadKeys, session_id, st, frame, {});
  };
  if (!s) return fail(Status::UnknownSession);
  if (!s->derived) return fail(Status::NoDerivedKeys);
  if (!resp.hmac_tag) return fail(Status::MalformedFrame);

  const Bytes covered = wire::mac_input(wire::Message(resp));
  const MacTag expect =
      crypto::hmac_sha256(key_view(s->derived->mac_server_key), covered);
  if (!ct_equal(expect, *resp.hmac_tag)) return fail(Status::BadServerMac);

  // Stage everything; commit only when the whole response is acceptable.
  std::vector<ContentKeyEntry> staged;
  std::set<uint32_t> required_nonces;
  bool anti_rollback_seen = false;
  const uint64_t now = clock_.now_ms();
  for (const auto& e : resp.key_entries) {
    Bytes key_raw;
    Status st = crypto::aes128_cbc_decrypt(s->derived->asset_key, e.iv,
                                           e.enc_key, key_raw);
    if (st != Status::Ok) return fail(st);
    if (key_raw.size() != 16) {
      wipe(key_raw);
      return fail(Status::MalformedKey);
    }
    ContentKeyEntry entry;
    entry.key_id = e.key_id;
    std::memcpy(entry.key.data(), key_raw.data(), 16);
    wipe(key_raw);
    entry.loaded_at_ms = now;

    Bytes kcb_raw = e.kcb_blob;
    if (e.kcb_encrypted) {
      uint8_t block[16];
      st = crypto::aes128_decrypt_block(entry.key, e.kcb_blob.data(), block);
      if (st != Status::Ok) return fail(st);
      kcb_raw.assign(block, block + 16);
    }
    st = parse_kcb(kcb_raw, entry.kcb);
    if (st != Status::Ok) return fail(st);

    if (entry.kcb.control_bits & kcb_bits::kNonceRequired) {
      if (!nonces_.contains(entry.kcb.nonce)) return fail(Status::StaleNonce);
      required_nonces.insert(entry.kcb.nonce);
    }
    if (entry.kcb.control_bits & kcb_bits::kAntiRollbackRequired) {
      anti_rollback_seen = true;
    }
    staged.push_back(std::move(entry));
  }

  std::optional<MacKey> new_server_mac;
  if (resp.new_server_mac_key_ct) {
    const Bytes& v = *resp.new_server_mac_key_ct;
    if (v.size() < 16 + 16) return fail(Status::MalformedKey);
    AesIv iv{};
    std::memcpy(iv.data(), v.data(), 16);
    Bytes mk;
    Status st = crypto::aes128_cbc_decrypt(s->derived->asset_key, iv,
                                           ByteView(v).subspan(16), mk);
    if (st != Status::Ok) return fail(st);
    if (mk.size() != 32) {
      wipe(mk);
      return fail(Status::MalformedKey);
    }
    MacKey m{};
    std::memcpy(m.data(), mk.data(), 32);
    wipe(mk);
    new_server_mac = m;
  }

  for (auto& entry : staged) {
    s->key_table[entry.key_id] = std::move(entry);
  }
  for (uint32_t n : required_nonces) nonces_.consume(n);
  if (new_server_mac) s->derived->mac_server_key = *new_server_mac;

  loaded = resp.key_entries.size();
  uint8_t count_buf[4];
  store_be32(static_cast<uint32_t>(loaded), count_buf);
  return finish(Oecc::LoadKeys, session_id, Status::Ok, frame,
                ByteView(count_buf, 4),
                anti_rollback_seen ? "anti_rollback_unenforced" : "");
}

Status Cdm::refresh_keys(uint32_t session_id,
                         const wire::RefreshResponse& resp) {
  std::lock_guard lk(mu_);
  const Bytes frame = wire::encode(wire::Message(resp));
  SessionState* s = find_session(session_id);
  auto fail = [&](Status st) {
    return finish(Oecc::RefreshKeys, session_id, st, frame, {});
  };
  if (!s) return fail(Status::UnknownSession);
  if (!s->derived) return fail(Status::NoDerivedKeys);
  if (!resp.key_id || !resp.ttl || !resp.hmac_tag) {
    return fail(Status::MalformedFrame);
  }

  const Bytes covered = wire::mac_input(wire::Message(resp));
  const MacTag expect =
      crypto::hmac_sha256(key_view(s->derived->mac_server_key), covered);
  if (!ct_equal(expect, *resp.hmac_tag)) return fail(Status::BadServerMac);

  auto it = s->key_table.find(*resp.key_id);
  if (it == s->key_table.end()) return fail(Status::UnknownKeyId);
  it->second.kcb.ttl = *resp.ttl;
  it->second.loaded_at_ms = clock_.now_ms();
  return finish(Oecc::RefreshKeys, session_id, Status::Ok, frame, {});
}

Status Cdm::select_key(uint32_t session_id, ByteView key_id) {
  std::lock_guard lk(mu_);
  SessionState* s = find_session(session_id);
  if (!s) {
    return finish(Oecc::SelectKey, session_id, Status::UnknownSession, key_id,
                  {});
  }
  Bytes id = to_bytes(key_id);
  if (s->key_table.find(id) == s->key_table.end()) {
    return finish(Oecc::SelectKey, session_id, Status::UnknownKeyId, key_id,
                  {});
  }
  s->selected_key = std::move(id);
  return finish(Oecc::SelectKey, session_id, Status::Ok, key_id, {});
}

Status Cdm::decrypt_cenc(uint32_t session_id,
                         std::span<const SubsampleRange> plan,
                         const AesIv& iv, ByteView data, Bytes& out) {
  std::lock_guard lk(mu_);
  SessionState* s = find_session(session_id);
  auto fail = [&](Status st) {
    return finish(Oecc::DecryptCenc, session_id, st, data, {});
  };
  if (!s) return fail(Status::UnknownSession);
  if (!s->selected_key) return fail(Status::NoKeySelected);
  const ContentKeyEntry& e = s->key_table.at(*s->selected_key);
  if (e.kcb.ttl > 0 &&
      clock_.now_ms() >
          e.loaded_at_ms + static_cast<uint64_t>(e.kcb.ttl) * 1000) {
    return fail(Status::KeyExpired);
  }
  if (!(e.kcb.control_bits & kcb_bits::kAllowContentDecrypt)) {
    return fail(Status::UsageDenied);
  }
  Status st = cenc_transform(e.key, iv, plan, data, out);
  return finish(Oecc::DecryptCenc, session_id, st, data, out);
}

Status Cdm::generic_encrypt(uint32_t session_id, ByteView payload,
                            const AesIv& iv, Bytes& out) {
  std::lock_guard lk(mu_);
  SessionState* s = find_session(session_id);
  auto fail = [&](Status st) {
    return finish(Oecc::GenericEncrypt, session_id, st, payload, {});
  };
  if (!s) return fail(Status::UnknownSession);
  if (!s->selected_key) return fail(Status::NoKeySelected);
  const ContentKeyEntry& e = s->key_table.at(*s->selected_key);
  if (!(e.kcb.control_bits & kcb_bits::kAllowGenericEncrypt)) {
    return fail(Status::UsageDenied);
  }
  Status st = crypto::aes128_cbc_encrypt(e.key, iv, payload, out);
  return finish(Oecc::GenericEncrypt, session_id, st, payload, out);
}

Status Cdm::generic_decrypt(uint32_t session_id, ByteView payload,
                            const AesIv& iv, Bytes& out) {
  std::lock_guard lk(mu_);
  SessionState* s = find_session(session_id);
  auto fail = [&](Status st) {
    return finish(Oecc::GenericDecrypt, session_id, st, payload, {});
  };
  if (!s) return fail(Status::UnknownSession);
  if (!s->selected_key) return fail(Status::NoKeySelected);
  const ContentKeyEntry& e = s->key_table.at(*s->selected_key);
  if (!(e.kcb.control_bits & kcb_bits::kAllowGenericDecrypt)) {
    return fail(Status::UsageDenied);
  }
  Status st = crypto::aes128_cbc_decrypt(e.key, iv, payload, out);
  return finish(Oecc::GenericDecrypt, session_id, st, payload, out);
}

Status Cdm::generic_sign(uint32_t session_id, ByteView payload, MacTag& tag) {
  std::lock_guard lk(mu_);
  SessionState* s = find_session(session_id);
  auto fail = [&](Status st) {
    return finish(Oecc::GenericSign, session_id, st, payload, {});
  };
  if (!s) return fail(Status::UnknownSession);
  if (!s->selected_key) return fail(Status::NoKeySelected);
  const ContentKeyEntry& e = s->key_table.at(*s->selected_key);
  if (!(e.kcb.control_bits & kcb_bits::kAllowGenericSign)) {
    return fail(Status::UsageDenied);
  }
  tag = crypto::hmac_sha256(ByteView(e.key.data(), e.key.size()), payload);
  return finish(Oecc::GenericSign, session_id, Status::Ok, payload,
                ByteView(tag.data(), tag.size()));
}

Status Cdm::generic_verify(uint32_t session_id, ByteView payload,
                           const MacTag& tag, bool& valid) {
  std::lock_guard lk(mu_);
  SessionState* s = find_session(session_id);
  auto fail = [&](Status st) {
    return finish(Oecc::GenericVerify, session_id, st, payload, {});
  };
  if (!s) return fail(Status::UnknownSession);
  if (!s->selected_key) return fail(Status::NoKeySelected);
  const ContentKeyEntry& e = s->key_table.at(*s->selected_key);
  if (!(e.kcb.control_bits & kcb_bits::kAllowGenericVerify)) {
    return fail(Status::UsageDenied);
  }
  const MacTag expect =
      crypto::hmac_sha256(ByteView(e.key.data(), e.key.size()), payload);
  valid = ct_equal(expect, tag);
  const uint8_t verdict = valid ? 1 : 0;
  return finish(Oecc::GenericVerify, session_id, Status::Ok, payload,
                ByteView(&verdict, 1));
}

Status Cdm::query_key_control(uint32_t session_id, ByteView key_id,
                              KeyControlBlock& kcb, uint64_t& loaded_at_ms) {
  std::lock_guard lk(mu_);
  SessionState* s = find_session(session_id);
  if (!s) {
    return finish(Oecc::QueryKeyControl, session_id, Status::UnknownSession,
                  key_id, {});
  }
  auto it = s->key_table.find(to_bytes(key_id));
  if (it == s->key_table.end()) {
    return finish(Oecc::QueryKeyControl, session_id, Status::UnknownKeyId,
                  key_id, {});
  }
  kcb = it->second.kcb;
  loaded_at_ms = it->second.loaded_at_ms;
  const auto raw = serialize_kcb(kcb);
  return finish(Oecc::QueryKeyControl, session_id, Status::Ok, key_id,
                ByteView(raw.data(), raw.size()));
}

Bytes Cdm::device_blob() const {
  return device_info_blob(cfg_.model, cfg_.arch, cfg_.cdm_version,
                          cfg_.build);
}

size_t Cdm::open_session_count() const {
  std::lock_guard lk(mu_);
  return sessions_.size();
}

}  // namespace wvsim
