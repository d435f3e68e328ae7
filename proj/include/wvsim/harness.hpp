#pragma once

#include <memory>
#include <string>
#include <vector>

#include "wvsim/cdm.hpp"
#include "wvsim/cenc.hpp"
#include "wvsim/clock.hpp"
#include "wvsim/config.hpp"
#include "wvsim/keybox.hpp"
#include "wvsim/random.hpp"
#include "wvsim/servers.hpp"
#include "wvsim/trace.hpp"
#include "wvsim/transport.hpp"

namespace wvsim {

// Owns every moving part of one simulator run: clock, RNG streams, trace
// sinks, the client CDM, the in-process servers and the channel that connects
// them. Members are declared in dependency order; the CDM holds references
// into the environment, so it is declared last and destroyed first.
struct SimEnvironment {
  RunConfig cfg;

  std::unique_ptr<Clock> clock;
  std::unique_ptr<RandomSource> client_rng;
  std::unique_ptr<RandomSource> server_rng;

  std::unique_ptr<MemoryTraceSink> memory_trace;
  std::unique_ptr<FileTraceSink> file_trace;
  std::unique_ptr<TraceSink> trace;

  Keybox keybox;

  std::unique_ptr<ServerKeystore> keystore;
  std::unique_ptr<ProvisioningServer> prov_server;
  std::unique_ptr<LicenseServer> lic_server;
  std::unique_ptr<MessageChannel> channel;

  std::unique_ptr<Cdm> cdm;

  // Scripted-clock runs expose the clock for test-controlled time travel.
  ScriptedClock* scripted_clock = nullptr;
};

// Builds a full environment from a config. Loads and validates the keybox,
// registers devices and content keys with the in-process servers, and opens
// the channel. `error` carries a diagnostic on failure.
Status build_environment(const RunConfig& cfg, SimEnvironment& env, std::string& error);

// Result of an end-to-end run.
struct E2eReport {
  bool provisioned_now = false;
  uint32_t session_id = 0;
  Bytes request_id;
  Bytes decrypted;
};

// Wraps and installs the keybox into the CDM, then verifies it.
Status setup_device(SimEnvironment& env);

// Loads the device RSA credential into the session. If no usable credential
// file exists, runs the certificate provisioning exchange first and persists
// the freshly wrapped credential. `provisioned_now` reports which path ran.
Status ensure_provisioned(SimEnvironment& env, uint32_t session_id,
                          bool& provisioned_now, std::string& phase);

// Runs the license exchange for `key_ids` and loads the returned keys into
// the session. `request_id` identifies the license session server-side.
Status acquire_license(SimEnvironment& env, uint32_t session_id,
                       const std::vector<Bytes>& key_ids, Bytes& request_id,
                       std::string& phase);

// Runs the refresh exchange for one loaded key and applies the new lifetime.
Status refresh_license(SimEnvironment& env, uint32_t session_id,
                       const Bytes& request_id, const Bytes& key_id,
                       std::string& phase);

// Full protocol run: device setup, provisioning (or credential reuse),
// license acquisition, content encryption server-side and decryption through
// the CDM. `phase` names the step that failed.
Status run_e2e(SimEnvironment& env, ByteView plaintext, const SubsamplePlan& plan,
               const Bytes& key_id, E2eReport& report, std::string& phase);

// Two-session run: one license session that decrypts content, plus a second
// session holding a generic-rights key that encrypts, decrypts, signs and
// verifies an application payload.
Status run_generic_session(SimEnvironment& env, ByteView payload,
                           const Bytes& content_key_id, const Bytes& generic_key_id,
                           std::string& phase);

}  // namespace wvsim
