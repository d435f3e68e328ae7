#include "wvsim/config.hpp"

#include <cstdlib>
#include <fstream>
#include <optional>

#include "json.hpp"

namespace wvsim {

namespace {

using nlohmann::json;

// Environment variables take precedence over the corresponding file paths in
// the config, so scripts can redirect artifacts without editing the file.
void apply_env_overrides(RunConfig& cfg) {
  if (const char* v = std::getenv("WVSIM_KEYBOX")) cfg.keybox_path = v;
  if (const char* v = std::getenv("WVSIM_CREDENTIAL")) cfg.credential_path = v;
  if (const char* v = std::getenv("WVSIM_TRACE")) cfg.trace_path = v;
}

std::optional<Bytes> parse_hex_field(const json& node) {
  if (!node.is_string()) {
    return std::nullopt;
  }
  return from_hex(node.get<std::string>());
}

Status parse_content_key(const json& node, ContentKeyConfig& out, std::string& error) {
  if (!node.is_object()) {
    error = "content_keys entries must be objects";
    return Status::ConfigError;
  }
  if (!node.contains("key_id") || !node.contains("key")) {
    error = "content key entry needs key_id and key";
    return Status::ConfigError;
  }
  auto key_id = parse_hex_field(node.at("key_id"));
  if (!key_id || key_id->empty()) {
    error = "content key_id must be a non-empty hex string";
    return Status::ConfigError;
  }
  auto key = parse_hex_field(node.at("key"));
  if (!key || key->size() != 16) {
    error = "content key must be 16 bytes of hex";
    return Status::ConfigError;
  }
  out.key_id = *key_id;
  std::copy(key->begin(), key->end(), out.key.begin());
  out.control_bits = node.value("control_bits", 0u);
  out.ttl_seconds = node.value("ttl", 0u);
  return Status::Ok;
}

}  // namespace

Status validate_run_config(const RunConfig& cfg, std::string& error) {
  if (cfg.keybox_path.empty()) {
    error = "keybox path is required";
    return Status::ConfigError;
  }
  if (cfg.clock_mode == ClockMode::Scripted && !cfg.in_process) {
    error = "scripted clock is only valid with in-process servers";
    return Status::ConfigError;
  }
  if (!cfg.in_process && cfg.server_port == 0) {
    error = "remote server endpoint needs a port";
    return Status::ConfigError;
  }
  for (const auto& ck : cfg.content_keys) {
    if (ck.key_id.empty()) {
      error = "content key id must not be empty";
      return Status::ConfigError;
    }
  }
  return Status::Ok;
}

Status load_run_config(const std::string& path, RunConfig& out, std::string& error) {
  std::ifstream in(path);
  if (!in) {
    error = "cannot open config file: " + path;
    return Status::IoError;
  }
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    error = "config file is not a JSON object";
    return Status::ConfigError;
  }

  RunConfig cfg;
  cfg.keybox_path = doc.value("keybox", "");
  cfg.credential_path = doc.value("credential", "");
  cfg.trace_path = doc.value("trace", "");

  if (doc.contains("server")) {
    const json& srv = doc.at("server");
    if (!srv.is_object() || !srv.contains("mode") || !srv.at("mode").is_string()) {
      error = "server section needs a mode of in-process or remote";
      return Status::ConfigError;
    }
    const std::string mode = srv.at("mode").get<std::string>();
    if (mode == "in-process") {
      cfg.in_process = true;
    } else if (mode == "remote") {
      cfg.in_process = false;
      cfg.server_host = srv.value("host", "127.0.0.1");
      const unsigned port = srv.value("port", 0u);
      if (port == 0 || port > 65535) {
        error = "remote server port must be 1..65535";
        return Status::ConfigError;
      }
      cfg.server_port = static_cast<uint16_t>(port);
    } else {
      error = "unknown server mode: " + mode;
      return Status::ConfigError;
    }
  }

  if (doc.contains("devices")) {
    const json& devs = doc.at("devices");
    if (!devs.is_array()) {
      error = "devices must be an array of keybox file paths";
      return Status::ConfigError;
    }
    for (const auto& d : devs) {
      if (!d.is_string()) {
        error = "devices entries must be strings";
        return Status::ConfigError;
      }
      cfg.device_paths.push_back(d.get<std::string>());
    }
  }

  if (doc.contains("content_keys")) {
    const json& keys = doc.at("content_keys");
    if (!keys.is_array()) {
      error = "content_keys must be an array";
      return Status::ConfigError;
    }
    for (const auto& entry : keys) {
      ContentKeyConfig ck;
      Status st = parse_content_key(entry, ck, error);
      if (st != Status::Ok) {
        return st;
      }
      cfg.content_keys.push_back(std::move(ck));
    }
  }

  const std::string scheme = doc.value("signature_scheme", "pss");
  if (scheme == "pss") {
    cfg.sig_scheme = rsa::SigScheme::Pss;
  } else if (scheme == "pkcs1v15") {
    cfg.sig_scheme = rsa::SigScheme::Pkcs1v15;
  } else {
    error = "signature_scheme must be pss or pkcs1v15";
    return Status::ConfigError;
  }

  const std::string clock = doc.value("clock", "real");
  if (clock == "real") {
    cfg.clock_mode = ClockMode::Real;
  } else if (clock == "scripted") {
    cfg.clock_mode = ClockMode::Scripted;
  } else {
    error = "clock must be real or scripted";
    return Status::ConfigError;
  }

  cfg.deterministic = doc.value("deterministic", false);
  cfg.client_seed = doc.value("client_seed", static_cast<uint64_t>(1));
  cfg.server_seed = doc.value("server_seed", static_cast<uint64_t>(2));
  cfg.rotate_server_mac_key = doc.value("rotate_server_mac_key", false);
  cfg.encrypt_kcb = doc.value("encrypt_kcb", true);

  apply_env_overrides(cfg);
  Status st = validate_run_config(cfg, error);
  if (st != Status::Ok) {
    return st;
  }
  out = std::move(cfg);
  return Status::Ok;
}

}  // namespace wvsim
