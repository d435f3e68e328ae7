#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <vector>

#include "wvsim/bytes.hpp"
#include "wvsim/cenc.hpp"
#include "wvsim/derivation.hpp"
#include "wvsim/kcb.hpp"
#include "wvsim/random.hpp"
#include "wvsim/rsa.hpp"
#include "wvsim/status.hpp"
#include "wvsim/wire.hpp"

namespace wvsim {

struct DeviceRecord {
  Aes128Key device_key{};
  std::array<uint8_t, 72> provisioning_token{};
};

struct ContentKeyRecord {
  Aes128Key key{};
  uint32_t control_bits = 0;
  uint32_t ttl = 0;
};

// Server-side mirror of the client provisioning derivation, computed from
// the stored device record.
DerivedKeySet server_provisioning_derivation(const DeviceRecord& rec,
                                             const DeviceId& device_id);

// Shared server-side state: registered devices, their issued RSA key pairs,
// and the content key catalogue.
class ServerKeystore {
 public:
  void register_device(const DeviceId& id, const DeviceRecord& rec);
  bool lookup_device(const DeviceId& id, DeviceRecord& out) const;

  void store_device_keypair(const DeviceId& id, rsa::RsaKeyPair kp);
  bool lookup_device_keypair(const DeviceId& id, rsa::RsaKeyPair& out) const;

  void add_content_key(const Bytes& key_id, const ContentKeyRecord& rec);
  bool lookup_content_key(const Bytes& key_id, ContentKeyRecord& out) const;
  std::vector<Bytes> content_key_ids() const;

 private:
  mutable std::mutex mu_;
  std::map<DeviceId, DeviceRecord> devices_;
  std::map<DeviceId, rsa::RsaKeyPair> device_keypairs_;
  std::map<Bytes, ContentKeyRecord> content_keys_;
};

struct ServerConfig {
  // Issue the fixed embedded RSA key pair instead of generating one, so
  // fixtures and traces are reproducible.
  bool deterministic_rsa = false;
  // Embed a rotated server MAC key in license responses.
  bool rotate_server_mac_key = false;
  // Wrap each KCB in one AES-ECB block under its content key.
  bool encrypt_kcb = true;
};

// The fixed RSA key pair used in deterministic mode.
rsa::RsaKeyPair deterministic_device_keypair();

class ProvisioningServer {
 public:
  ProvisioningServer(ServerKeystore& store, ServerConfig cfg,
                     RandomSource& rng)
      : store_(store), cfg_(cfg), rng_(rng) {}

  Status handle(const wire::ProvisioningRequest& req,
                wire::ProvisioningResponse& resp);

 private:
  ServerKeystore& store_;
  ServerConfig cfg_;
  RandomSource& rng_;
};

class LicenseServer {
 public:
  LicenseServer(ServerKeystore& store, ServerConfig cfg, RandomSource& rng)
      : store_(store), cfg_(cfg), rng_(rng) {}

  Status handle_license(const wire::LicenseRequest& req,
                        wire::LicenseResponse& resp);
  Status handle_refresh(const wire::RefreshRequest& req,
                        wire::RefreshResponse& resp);

  // CDN-side helper: package plaintext for later decryption under key_id.
  Status encrypt_content(const Bytes& key_id, ByteView plaintext,
                         const SubsamplePlan& plan, CencPackage& out);

  // TTL granted by subsequent refreshes instead of the configured one.
  void set_refresh_ttl_override(std::optional<uint32_t> ttl);

 private:
  struct SessionRecord {
    DerivedKeySet derived;
  };

  ServerKeystore& store_;
  ServerConfig cfg_;
  RandomSource& rng_;
  std::mutex mu_;
  std::map<Bytes, SessionRecord> sessions_;  // keyed by request_id
  std::optional<uint32_t> refresh_ttl_override_;
};

// Routes a decoded request to its handler.  Returns the response message;
// failures come back as an ErrorResponse carrying the wire error code.
wire::Message dispatch_request(ProvisioningServer& prov, LicenseServer& lic,
                               const wire::Message& req);

}  // namespace wvsim
