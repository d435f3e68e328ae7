#pragma once

#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "wvsim/bytes.hpp"
#include "wvsim/cenc.hpp"
#include "wvsim/clock.hpp"
#include "wvsim/derivation.hpp"
#include "wvsim/kcb.hpp"
#include "wvsim/keybox.hpp"
#include "wvsim/random.hpp"
#include "wvsim/rsa.hpp"
#include "wvsim/status.hpp"
#include "wvsim/trace.hpp"
#include "wvsim/wire.hpp"

namespace wvsim {

// Client-side derivation for the provisioning phase; the same function the
// CDM runs in generate_derived_keys.  The server mirrors it from its device
// records.
DerivedKeySet client_provisioning_derivation(const Keybox& kb);

// Convention for protecting the persisted RSA credential: a dedicated key
// derived from the device key under a fixed storage label.
Aes128Key credential_storage_key(const Aes128Key& device_key);

struct CdmConfig {
  size_t max_sessions = 16;
  std::string api_version = "15";
  std::string security_level = "L_SIM";
  // Client properties serialized into the license-phase device blob.
  std::string model = "simdev-01";
  std::string arch = "arm64";
  std::string cdm_version = "14.0.0";
  std::string build = "sim-release-1";
};

// FIFO table of live nonces with bounded generation rate.
class NonceTable {
 public:
  explicit NonceTable(size_t capacity = 16) : capacity_(capacity) {}

  bool contains(uint32_t nonce) const;
  // Inserts, evicting the oldest entry when full.
  void insert(uint32_t nonce);
  // Removes the nonce; false when absent.
  bool consume(uint32_t nonce);
  size_t size() const { return queue_.size(); }

 private:
  std::deque<uint32_t> queue_;
  size_t capacity_;
};

struct ContentKeyEntry {
  Bytes key_id;
  Aes128Key key{};
  KeyControlBlock kcb;
  uint64_t loaded_at_ms = 0;
};

class Cdm {
 public:
  Cdm(CdmConfig cfg, Clock& clock, RandomSource& rng, TraceSink& trace);

  Cdm(const Cdm&) = delete;
  Cdm& operator=(const Cdm&) = delete;

  // Device-level operations.
  Status install_keybox(ByteView wrapped, const Aes128Key& transport_key);
  Status wrap_keybox(const Keybox& kb, const Aes128Key& transport_key,
                     Bytes& wrapped);
  Status is_keybox_valid();
  Status get_device_id(DeviceId& out);
  Status get_key_data(std::array<uint8_t, 72>& out);
  Status get_random(size_t n, Bytes& out);
  Status api_version(std::string& out);
  Status security_level(std::string& out);

  // Session lifecycle.
  Status open_session(uint32_t& session_id);
  Status close_session(uint32_t session_id);
  Status generate_nonce(uint32_t session_id, uint32_t& nonce);

  // Provisioning phase.
  Status generate_derived_keys(uint32_t session_id, const Keybox& kb);
  Status generate_signature(uint32_t session_id, ByteView message,
                            MacTag& tag);
  Status rewrap_device_rsa_key(uint32_t session_id,
                               const wire::ProvisioningResponse& resp,
                               const Aes128Key& storage_key, Bytes& wrapped);
  Status load_device_rsa_key(uint32_t session_id, ByteView wrapped,
                             const Aes128Key& storage_key);

  // License phase.
  Status generate_rsa_signature(uint32_t session_id, ByteView message,
                                rsa::SigScheme scheme, Bytes& sig);
  Status derive_keys_from_session_key(uint32_t session_id,
                                      ByteView enc_session_key,
                                      ByteView device_blob);
  Status load_keys(uint32_t session_id, const wire::LicenseResponse& resp,
                   size_t& loaded);
  Status refresh_keys(uint32_t session_id, const wire::RefreshResponse& resp);

  // Content phase.
  Status select_key(uint32_t session_id, ByteView key_id);
  Status decrypt_cenc(uint32_t session_id,
                      std::span<const SubsampleRange> plan, const AesIv& iv,
                      ByteView data, Bytes& out);

  // Generic crypto API over the selected key.
  Status generic_encrypt(uint32_t session_id, ByteView payload,
                         const AesIv& iv, Bytes& out);
  Status generic_decrypt(uint32_t session_id, ByteView payload,
                         const AesIv& iv, Bytes& out);
  Status generic_sign(uint32_t session_id, ByteView payload, MacTag& tag);
  Status generic_verify(uint32_t session_id, ByteView payload,
                        const MacTag& tag, bool& valid);

  // Key inspection.
  Status query_key_control(uint32_t session_id, ByteView key_id,
                           KeyControlBlock& kcb, uint64_t& loaded_at_ms);

  // Usage-table API: present in the vocabulary, not implemented here.
  Status supports_usage_table() { return usage_stub(Oecc::SupportsUsageTable); }
  Status update_usage_table() { return usage_stub(Oecc::UpdateUsageTable); }
  Status deactivate_usage_entry() {
    return usage_stub(Oecc::DeactivateUsageEntry);
  }
  Status report_usage() { return usage_stub(Oecc::ReportUsage); }
  Status delete_usage_entry() { return usage_stub(Oecc::DeleteUsageEntry); }
  Status delete_usage_table() { return usage_stub(Oecc::DeleteUsageTable); }
  Status force_delete_usage_entry() {
    return usage_stub(Oecc::ForceDeleteUsageEntry);
  }

  // License-phase device blob built from the configured client properties.
  Bytes device_blob() const;

  size_t open_session_count() const;

 private:
  struct SessionState {
    uint32_t id = 0;
    std::optional<DerivedKeySet> derived;
    std::optional<rsa::RsaKeyPair> rsa_key;
    std::map<Bytes, ContentKeyEntry> key_table;
    std::optional<Bytes> selected_key;
  };

  Status finish(Oecc op, std::optional<uint32_t> session, Status st,
                ByteView in, ByteView out, std::string note = {});
  Status usage_stub(Oecc op);
  SessionState* find_session(uint32_t session_id);
  Status rate_limited_now();

  CdmConfig cfg_;
  Clock& clock_;
  RandomSource& rng_;
  TraceSink& trace_;

  mutable std::mutex mu_;
  std::optional<Keybox> keybox_;
  std::map<uint32_t, SessionState> sessions_;
  NonceTable nonces_;
  std::deque<uint64_t> nonce_times_ms_;
};

}  // namespace wvsim
