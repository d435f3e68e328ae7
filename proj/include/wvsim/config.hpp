#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wvsim/bytes.hpp"
#include "wvsim/rsa.hpp"
#include "wvsim/status.hpp"

namespace wvsim {

enum class ClockMode : uint8_t {
  Real = 0,
  Scripted = 1,
};

// One catalogue entry: a content key the license server may hand out,
// together with the usage rights and lifetime baked into its control block.
struct ContentKeyConfig {
  Bytes key_id;
  Aes128Key key{};
  uint32_t control_bits = 0;
  uint32_t ttl_seconds = 0;
};

// Everything a client or server run needs. Loaded from a JSON file; the
// harness and CLI subcommands consume the same schema.
struct RunConfig {
  std::string keybox_path;
  std::string credential_path;
  std::string trace_path;

  // Either the in-process pair of servers or a remote endpoint.
  bool in_process = true;
  std::string server_host = "127.0.0.1";
  uint16_t server_port = 0;

  // Extra keybox files registered server-side in addition to keybox_path.
  std::vector<std::string> device_paths;

  std::vector<ContentKeyConfig> content_keys;

  rsa::SigScheme sig_scheme = rsa::SigScheme::Pss;
  ClockMode clock_mode = ClockMode::Real;

  // Deterministic mode: seeded RNG streams and a fixed server RSA keypair,
  // so repeated runs produce identical bytes on the wire and in traces.
  bool deterministic = false;
  uint64_t client_seed = 1;
  uint64_t server_seed = 2;

  bool rotate_server_mac_key = false;
  bool encrypt_kcb = true;
};

// Parses and validates a JSON config file. On failure returns ConfigError
// (schema or invariant violations) or IoError (unreadable file) and leaves a
// human-readable explanation in `error`.
Status load_run_config(const std::string& path, RunConfig& out, std::string& error);

// Validates cross-field invariants (for configs assembled in code).
Status validate_run_config(const RunConfig& cfg, std::string& error);

}  // namespace wvsim
