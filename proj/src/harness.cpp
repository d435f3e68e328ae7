#include "wvsim/harness.hpp"

#include <filesystem>
#include <utility>
#include <variant>

#include "wvsim/io.hpp"

namespace wvsim {

namespace {

// Maps a server Error frame (or an unexpected message type) to a Status.
Status response_error(const wire::Message& m) {
  if (const auto* err = std::get_if<wire::ErrorResponse>(&m)) {
    return wire::status_from_wire(err->error_code.value_or(
        wire::wire_error_code(Status::CryptoError)));
  }
  return Status::UnknownMsgType;
}

template <typename Resp>
Status expect_response(wire::Message& m, Resp& out) {
  if (auto* resp = std::get_if<Resp>(&m)) {
    out = std::move(*resp);
    return Status::Ok;
  }
  return response_error(m);
}

Status register_device_file(const std::string& path, ServerKeystore& store,
                            std::string& error) {
  Bytes raw;
  Status st = read_file(path, raw);
  if (st != Status::Ok) {
    error = "cannot read keybox file: " + path;
    return st;
  }
  Keybox kb;
  st = parse_keybox(raw, kb);
  if (st != Status::Ok || validate_keybox(kb) != KeyboxVerdict::Ok) {
    error = "not a valid keybox: " + path;
    return Status::ConfigError;
  }
  store.register_device(kb.device_id,
                        DeviceRecord{kb.device_key, kb.provisioning_token});
  return Status::Ok;
}

}  // namespace

Status build_environment(const RunConfig& cfg, SimEnvironment& env,
                         std::string& error) {
  Status st = validate_run_config(cfg, error);
  if (st != Status::Ok) return st;
  env.cfg = cfg;

  if (cfg.clock_mode == ClockMode::Scripted) {
    auto scripted = std::make_unique<ScriptedClock>(0);
    env.scripted_clock = scripted.get();
    env.clock = std::move(scripted);
  } else {
    env.scripted_clock = nullptr;
    env.clock = std::make_unique<SteadyClock>();
  }

  if (cfg.deterministic) {
    env.client_rng = std::make_unique<DeterministicRandom>(cfg.client_seed);
    env.server_rng = std::make_unique<DeterministicRandom>(cfg.server_seed);
  } else {
    env.client_rng = std::make_unique<SystemRandom>();
    env.server_rng = std::make_unique<SystemRandom>();
  }

  env.memory_trace = std::make_unique<MemoryTraceSink>();
  TraceSink* sink = env.memory_trace.get();
  if (!cfg.trace_path.empty()) {
    auto file = std::make_unique<FileTraceSink>(cfg.trace_path);
    if (!file->ok()) {
      error = "cannot open trace file: " + cfg.trace_path;
      return Status::IoError;
    }
    env.file_trace = std::move(file);
    env.trace = std::make_unique<TeeTraceSink>(env.memory_trace.get(),
                                               env.file_trace.get());
    sink = env.trace.get();
  }

  Bytes raw;
  st = read_file(cfg.keybox_path, raw);
  if (st != Status::Ok) {
    error = "cannot read keybox file: " + cfg.keybox_path;
    return st;
  }
  st = parse_keybox(raw, env.keybox);
  if (st != Status::Ok || validate_keybox(env.keybox) != KeyboxVerdict::Ok) {
    error = "keybox file is not valid: " + cfg.keybox_path;
    return Status::ConfigError;
  }

  env.keystore = std::make_unique<ServerKeystore>();
  env.keystore->register_device(
      env.keybox.device_id,
      DeviceRecord{env.keybox.device_key, env.keybox.provisioning_token});
  for (const auto& path : cfg.device_paths) {
    st = register_device_file(path, *env.keystore, error);
    if (st != Status::Ok) return st;
  }
  for (const auto& ck : cfg.content_keys) {
    env.keystore->add_content_key(
        ck.key_id, ContentKeyRecord{ck.key, ck.control_bits, ck.ttl_seconds});
  }

  ServerConfig server_cfg;
  server_cfg.deterministic_rsa = cfg.deterministic;
  server_cfg.rotate_server_mac_key = cfg.rotate_server_mac_key;
  server_cfg.encrypt_kcb = cfg.encrypt_kcb;
  env.prov_server = std::make_unique<ProvisioningServer>(
      *env.keystore, server_cfg, *env.server_rng);
  env.lic_server = std::make_unique<LicenseServer>(*env.keystore, server_cfg,
                                                   *env.server_rng);

  if (cfg.in_process) {
    env.channel =
        std::make_unique<InProcessChannel>(*env.prov_server, *env.lic_server);
  } else {
    std::unique_ptr<TcpChannel> tcp;
    st = TcpChannel::connect(cfg.server_host, cfg.server_port, tcp);
    if (st != Status::Ok) {
      error = "cannot connect to " + cfg.server_host + ":" +
              std::to_string(cfg.server_port);
      return st;
    }
    env.channel = std::move(tcp);
  }

  env.cdm = std::make_unique<Cdm>(CdmConfig{}, *env.clock, *env.client_rng,
                                  *sink);
  return Status::Ok;
}

Status setup_device(SimEnvironment& env) {
  const Aes128Key transport_key = env.client_rng->key16();
  Bytes wrapped;
  Status st = env.cdm->wrap_keybox(env.keybox, transport_key, wrapped);
  if (st != Status::Ok) return st;
  st = env.cdm->install_keybox(wrapped, transport_key);
  if (st != Status::Ok) return st;
  st = env.cdm->is_keybox_valid();
  if (st != Status::Ok) return st;
  std::string info;
  st = env.cdm->api_version(info);
  if (st != Status::Ok) return st;
  return env.cdm->security_level(info);
}

Status ensure_provisioned(SimEnvironment& env, uint32_t session_id,
                          bool& provisioned_now, std::string& phase) {
  phase = "provisioning";
  provisioned_now = false;
  const Aes128Key storage_key = credential_storage_key(env.keybox.device_key);

  if (!env.cfg.credential_path.empty() && file_exists(env.cfg.credential_path)) {
    Bytes wrapped;
    if (read_file(env.cfg.credential_path, wrapped) == Status::Ok &&
        env.cdm->load_device_rsa_key(session_id, wrapped, storage_key) ==
            Status::Ok) {
      return Status::Ok;
    }
    // Unreadable or corrupt credential: fall through and provision again.
  }
  provisioned_now = true;

  uint32_t nonce = 0;
  Status st = env.cdm->generate_nonce(session_id, nonce);
  if (st != Status::Ok) return st;
  st = env.cdm->generate_derived_keys(session_id, env.keybox);
  if (st != Status::Ok) return st;

  wire::ProvisioningRequest req;
  req.nonce = nonce;
  DeviceId device_id{};
  st = env.cdm->get_device_id(device_id);
  if (st != Status::Ok) return st;
  req.device_id = device_id;
  std::array<uint8_t, 72> token{};
  st = env.cdm->get_key_data(token);
  if (st != Status::Ok) return st;
  req.provisioning_token = token;

  MacTag tag{};
  st = env.cdm->generate_signature(session_id,
                                   wire::mac_input(wire::Message(req)), tag);
  if (st != Status::Ok) return st;
  req.hmac_tag = tag;

  wire::Message reply;
  st = env.channel->roundtrip(wire::Message(req), reply);
  if (st != Status::Ok) return st;
  wire::ProvisioningResponse resp;
  st = expect_response(reply, resp);
  if (st != Status::Ok) return st;

  Bytes wrapped;
  st = env.cdm->rewrap_device_rsa_key(session_id, resp, storage_key, wrapped);
  if (st != Status::Ok) return st;
  if (!env.cfg.credential_path.empty()) {
    st = write_file(env.cfg.credential_path, wrapped);
    if (st != Status::Ok) return st;
  }
  return env.cdm->load_device_rsa_key(session_id, wrapped, storage_key);
}

Status acquire_license(SimEnvironment& env, uint32_t session_id,
                       const std::vector<Bytes>& key_ids, Bytes& request_id,
                       std::string& phase) {
  phase = "license";
  uint32_t nonce = 0;
  Status st = env.cdm->generate_nonce(session_id, nonce);
  if (st != Status::Ok) return st;
  Bytes rid;
  st = env.cdm->get_random(8, rid);
  if (st != Status::Ok) return st;

  wire::LicenseRequest req;
  req.nonce = nonce;
  DeviceId device_id{};
  st = env.cdm->get_device_id(device_id);
  if (st != Status::Ok) return st;
  req.device_id = device_id;
  const Bytes device_blob = env.cdm->device_blob();
  req.device_blob = device_blob;
  req.request_id = rid;
  req.sig_scheme = static_cast<uint8_t>(env.cfg.sig_scheme);
  req.key_ids = key_ids;

  Bytes sig;
  st = env.cdm->generate_rsa_signature(session_id, wire::signing_input(req),
                                       env.cfg.sig_scheme, sig);
  if (st != Status::Ok) return st;
  req.rsa_signature = std::move(sig);

  wire::Message reply;
  st = env.channel->roundtrip(wire::Message(req), reply);
  if (st != Status::Ok) return st;
  wire::LicenseResponse resp;
  st = expect_response(reply, resp);
  if (st != Status::Ok) return st;

  if (!resp.enc_session_key) return Status::MalformedFrame;
  st = env.cdm->derive_keys_from_session_key(session_id, view(*resp.enc_session_key),
                                             view(device_blob));
  if (st != Status::Ok) return st;

  size_t loaded = 0;
  st = env.cdm->load_keys(session_id, resp, loaded);
  if (st != Status::Ok) return st;
  request_id = rid;
  return Status::Ok;
}

Status refresh_license(SimEnvironment& env, uint32_t session_id,
                       const Bytes& request_id, const Bytes& key_id,
                       std::string& phase) {
  phase = "refresh";
  wire::RefreshRequest req;
  req.request_id = request_id;
  req.key_id = key_id;
  MacTag tag{};
  Status st = env.cdm->generate_signature(
      session_id, wire::mac_input(wire::Message(req)), tag);
  if (st != Status::Ok) return st;
  req.hmac_tag = tag;

  wire::Message reply;
  st = env.channel->roundtrip(wire::Message(req), reply);
  if (st != Status::Ok) return st;
  wire::RefreshResponse resp;
  st = expect_response(reply, resp);
  if (st != Status::Ok) return st;
  return env.cdm->refresh_keys(session_id, resp);
}

namespace {

// Provisioning plus licensing, with one recovery path: a cached credential
// can hold a certificate this server instance has never issued (server-side
// provisioning state does not survive the process in non-deterministic
// runs). The server then rejects the license request with UnknownDevice;
// discard the stale credential, provision again and retry once.
Status license_with_reprovision(SimEnvironment& env, uint32_t session_id,
                                const std::vector<Bytes>& key_ids,
                                bool& provisioned_now, Bytes& request_id,
                                std::string& phase) {
  Status st = ensure_provisioned(env, session_id, provisioned_now, phase);
  if (st != Status::Ok) return st;
  st = acquire_license(env, session_id, key_ids, request_id, phase);
  if (st != Status::UnknownDevice || provisioned_now) return st;

  if (!env.cfg.credential_path.empty()) {
    std::error_code ec;
    std::filesystem::remove(env.cfg.credential_path, ec);
  }
  st = ensure_provisioned(env, session_id, provisioned_now, phase);
  if (st != Status::Ok) return st;
  return acquire_license(env, session_id, key_ids, request_id, phase);
}

}  // namespace

Status run_e2e(SimEnvironment& env, ByteView plaintext,
               const SubsamplePlan& plan, const Bytes& key_id,
               E2eReport& report, std::string& phase) {
  phase = "setup";
  Status st = setup_device(env);
  if (st != Status::Ok) return st;

  uint32_t session_id = 0;
  st = env.cdm->open_session(session_id);
  if (st != Status::Ok) return st;
  report.session_id = session_id;

  st = license_with_reprovision(env, session_id, {key_id},
                                report.provisioned_now, report.request_id,
                                phase);
  if (st != Status::Ok) return st;

  phase = "content";
  CencPackage package;
  st = env.lic_server->encrypt_content(key_id, plaintext, plan, package);
  if (st != Status::Ok) return st;

  st = env.cdm->select_key(session_id, view(key_id));
  if (st != Status::Ok) return st;

  KeyControlBlock kcb;
  uint64_t loaded_at = 0;
  st = env.cdm->query_key_control(session_id, view(key_id), kcb, loaded_at);
  if (st != Status::Ok) return st;

  st = env.cdm->decrypt_cenc(session_id, package.plan, package.iv,
                             view(package.data), report.decrypted);
  if (st != Status::Ok) return st;

  phase = "teardown";
  return env.cdm->close_session(session_id);
}

Status run_generic_session(SimEnvironment& env, ByteView payload,
                           const Bytes& content_key_id,
                           const Bytes& generic_key_id, std::string& phase) {
  phase = "setup";
  Status st = setup_device(env);
  if (st != Status::Ok) return st;

  uint32_t license_session = 0;
  st = env.cdm->open_session(license_session);
  if (st != Status::Ok) return st;

  bool provisioned_now = false;
  Bytes request_id;
  st = license_with_reprovision(env, license_session, {content_key_id},
                                provisioned_now, request_id, phase);
  if (st != Status::Ok) return st;

  phase = "content";
  CencPackage package;
  st = env.lic_server->encrypt_content(content_key_id, payload,
                                       make_subsamples(payload.size(), 16, 48),
                                       package);
  if (st != Status::Ok) return st;
  st = env.cdm->select_key(license_session, view(content_key_id));
  if (st != Status::Ok) return st;
  Bytes media;
  st = env.cdm->decrypt_cenc(license_session, package.plan, package.iv,
                             view(package.data), media);
  if (st != Status::Ok) return st;
  if (media != to_bytes(payload)) return Status::CryptoError;

  // Second session: generic-rights key for application crypto.
  phase = "generic";
  uint32_t generic_session = 0;
  st = env.cdm->open_session(generic_session);
  if (st != Status::Ok) return st;
  st = ensure_provisioned(env, generic_session, provisioned_now, phase);
  if (st != Status::Ok) return st;
  phase = "generic";
  Bytes generic_request;
  st = acquire_license(env, generic_session, {generic_key_id}, generic_request,
                       phase);
  if (st != Status::Ok) return st;
  phase = "generic";
  st = env.cdm->select_key(generic_session, view(generic_key_id));
  if (st != Status::Ok) return st;

  const AesIv iv = env.client_rng->iv16();
  Bytes wrapped;
  st = env.cdm->generic_encrypt(generic_session, payload, iv, wrapped);
  if (st != Status::Ok) return st;
  Bytes unwrapped;
  st = env.cdm->generic_decrypt(generic_session, view(wrapped), iv, unwrapped);
  if (st != Status::Ok) return st;
  if (unwrapped != to_bytes(payload)) return Status::CryptoError;

  MacTag tag{};
  st = env.cdm->generic_sign(generic_session, payload, tag);
  if (st != Status::Ok) return st;
  bool valid = false;
  st = env.cdm->generic_verify(generic_session, payload, tag, valid);
  if (st != Status::Ok) return st;
  if (!valid) return Status::IntegrityError;

  phase = "teardown";
  st = env.cdm->close_session(generic_session);
  if (st != Status::Ok) return st;
  return env.cdm->close_session(license_session);
}

}  // namespace wvsim
