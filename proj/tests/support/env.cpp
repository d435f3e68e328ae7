#include "support/env.hpp"

#include <unistd.h>

#include <atomic>
#include <cassert>

#include "wvsim/crypto.hpp"
#include "wvsim/io.hpp"

namespace wvsim::testing {

namespace {

std::filesystem::path unique_temp_dir() {
  static std::atomic<uint64_t> counter{0};
  const auto base = std::filesystem::temp_directory_path();
  const auto dir = base / ("wvsim-test-" + std::to_string(::getpid()) + "-" +
                           std::to_string(counter.fetch_add(1)));
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TempDir::TempDir() : path_(unique_temp_dir()) {}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

Keybox write_keybox_file(const std::string& path, uint64_t seed) {
  DeterministicRandom rng(seed);
  Keybox kb;
  const Status st = generate_keybox(rng, kb);
  assert(st == Status::Ok);
  (void)st;
  const auto raw = serialize_keybox(kb);
  const Status wst = write_file(path, ByteView(raw.data(), raw.size()));
  assert(wst == Status::Ok);
  (void)wst;
  return kb;
}

void make_bench_env(SimEnvironment& env, const BenchOptions& opts) {
  env.cfg = RunConfig{};
  env.cfg.keybox_path = "<in-memory>";
  env.cfg.credential_path = opts.credential_path;
  env.cfg.in_process = true;
  env.cfg.sig_scheme = opts.scheme;
  env.cfg.clock_mode = ClockMode::Scripted;
  env.cfg.deterministic = true;
  env.cfg.client_seed = opts.client_seed;
  env.cfg.server_seed = opts.server_seed;
  env.cfg.rotate_server_mac_key = opts.rotate_server_mac_key;
  env.cfg.encrypt_kcb = opts.encrypt_kcb;
  env.cfg.content_keys = opts.content_keys;
  if (env.cfg.content_keys.empty()) {
    env.cfg.content_keys.push_back(ContentKeyConfig{
        kDefaultKeyId, kDefaultContentKey, kcb_bits::kAllowContentDecrypt, 0});
  }

  auto scripted = std::make_unique<ScriptedClock>(0);
  env.scripted_clock = scripted.get();
  env.clock = std::move(scripted);
  env.client_rng = std::make_unique<DeterministicRandom>(opts.client_seed);
  env.server_rng = std::make_unique<DeterministicRandom>(opts.server_seed);
  env.memory_trace = std::make_unique<MemoryTraceSink>();

  DeterministicRandom keybox_rng(opts.client_seed ^ 0x6b657962u);
  const Status st = generate_keybox(keybox_rng, env.keybox);
  assert(st == Status::Ok);
  (void)st;

  env.keystore = std::make_unique<ServerKeystore>();
  env.keystore->register_device(
      env.keybox.device_id,
      DeviceRecord{env.keybox.device_key, env.keybox.provisioning_token});
  for (const auto& ck : env.cfg.content_keys) {
    env.keystore->add_content_key(
        ck.key_id, ContentKeyRecord{ck.key, ck.control_bits, ck.ttl_seconds});
  }

  ServerConfig server_cfg;
  server_cfg.deterministic_rsa = opts.deterministic_rsa;
  server_cfg.rotate_server_mac_key = opts.rotate_server_mac_key;
  server_cfg.encrypt_kcb = opts.encrypt_kcb;
  env.prov_server = std::make_unique<ProvisioningServer>(
      *env.keystore, server_cfg, *env.server_rng);
  env.lic_server = std::make_unique<LicenseServer>(*env.keystore, server_cfg,
                                                   *env.server_rng);
  env.channel =
      std::make_unique<InProcessChannel>(*env.prov_server, *env.lic_server);
  env.cdm = std::make_unique<Cdm>(CdmConfig{}, *env.clock, *env.client_rng,
                                  *env.memory_trace);
}

uint32_t provision_bench(SimEnvironment& env) {
  Status st = setup_device(env);
  assert(st == Status::Ok);
  uint32_t session = 0;
  st = env.cdm->open_session(session);
  assert(st == Status::Ok);
  bool provisioned_now = false;
  std::string phase;
  st = ensure_provisioned(env, session, provisioned_now, phase);
  assert(st == Status::Ok);
  (void)st;
  return session;
}

Status run_prov_exchange(SimEnvironment& env, uint32_t session,
                         wire::ProvisioningResponse& resp) {
  uint32_t nonce = 0;
  Status st = env.cdm->generate_nonce(session, nonce);
  if (st != Status::Ok) return st;
  st = env.cdm->generate_derived_keys(session, env.keybox);
  if (st != Status::Ok) return st;

  wire::ProvisioningRequest req;
  req.nonce = nonce;
  DeviceId id{};
  st = env.cdm->get_device_id(id);
  if (st != Status::Ok) return st;
  req.device_id = id;
  std::array<uint8_t, 72> token{};
  st = env.cdm->get_key_data(token);
  if (st != Status::Ok) return st;
  req.provisioning_token = token;

  MacTag tag{};
  st = env.cdm->generate_signature(session,
                                   wire::mac_input(wire::Message(req)), tag);
  if (st != Status::Ok) return st;
  req.hmac_tag = tag;

  wire::Message reply;
  st = env.channel->roundtrip(wire::Message(req), reply);
  if (st != Status::Ok) return st;
  auto* r = std::get_if<wire::ProvisioningResponse>(&reply);
  if (!r) return Status::UnknownMsgType;
  resp = std::move(*r);
  return Status::Ok;
}

Status craft_license(const rsa::RsaPublicKey& device_pub, ByteView device_blob,
                     uint32_t nonce, ByteView request_id,
                     const std::vector<CraftSpec>& entries, RandomSource& rng,
                     CraftedLicense& out) {
  out.session_key = rng.key16();
  Bytes enc_session_key;
  Status st = device_pub.encrypt_oaep_sha1(
      ByteView(out.session_key.data(), out.session_key.size()), rng,
      enc_session_key);
  if (st != Status::Ok) return st;

  st = derive_keys(out.session_key, build_contexts(device_blob), out.derived);
  if (st != Status::Ok) return st;

  out.resp = wire::LicenseResponse{};
  out.resp.nonce = nonce;
  out.resp.request_id = to_bytes(request_id);
  out.resp.enc_session_key = enc_session_key;

  for (const auto& spec : entries) {
    wire::KeyEntry entry;
    entry.key_id = spec.key_id;
    entry.iv = rng.iv16();
    st = crypto::aes128_cbc_encrypt(
        out.derived.asset_key, entry.iv,
        ByteView(spec.key.data(), spec.key.size()), entry.enc_key);
    if (st != Status::Ok) return st;

    auto kcb_raw = serialize_kcb(spec.kcb);
    if (spec.break_kcb_magic) kcb_raw[0] ^= 0xff;
    if (spec.encrypt_kcb) {
      std::array<uint8_t, 16> enc{};
      st = crypto::aes128_encrypt_block(spec.key, kcb_raw.data(), enc.data());
      if (st != Status::Ok) return st;
      entry.kcb_blob.assign(enc.begin(), enc.end());
    } else {
      entry.kcb_blob.assign(kcb_raw.begin(), kcb_raw.end());
    }
    entry.kcb_encrypted = spec.encrypt_kcb;
    out.resp.key_entries.push_back(std::move(entry));
  }

  out.resp.hmac_tag = crypto::hmac_sha256(
      ByteView(out.derived.mac_server_key.data(),
               out.derived.mac_server_key.size()),
      wire::mac_input(wire::Message(out.resp)));
  return Status::Ok;
}

}  // namespace wvsim::testing
