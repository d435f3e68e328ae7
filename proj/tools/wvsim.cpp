// wvsim: command-line front end for the DRM protocol simulator.
//
// Subcommands cover keybox management (gen-keybox, validate), full protocol
// runs (e2e, generic-session), a standalone license/provisioning server
// (serve) and trace inspection (trace-dump).
//
// Exit codes: 0 success, 2 protocol error, 3 I/O error, 4 config error.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "wvsim/harness.hpp"
#include "wvsim/io.hpp"
#include "wvsim/trace.hpp"
#include "wvsim/transport.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitProtocol = 2;
constexpr int kExitIo = 3;
constexpr int kExitConfig = 4;

int exit_code_for(wvsim::Status st) {
  switch (st) {
    case wvsim::Status::Ok:
      return kExitOk;
    case wvsim::Status::IoError:
      return kExitIo;
    case wvsim::Status::ConfigError:
      return kExitConfig;
    default:
      return kExitProtocol;
  }
}

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

int cmd_gen_keybox(const std::string& out_path) {
  wvsim::SystemRandom rng;
  wvsim::Keybox kb;
  wvsim::Status st = wvsim::generate_keybox(rng, kb);
  if (st != wvsim::Status::Ok) {
    std::cerr << "keybox generation failed: " << wvsim::to_string(st) << "\n";
    return exit_code_for(st);
  }
  const auto raw = wvsim::serialize_keybox(kb);
  st = wvsim::write_file(out_path, wvsim::ByteView(raw.data(), raw.size()));
  if (st != wvsim::Status::Ok) {
    std::cerr << "cannot write " << out_path << "\n";
    return kExitIo;
  }
  std::cout << "wrote " << out_path << "\n"
            << "device_id " << wvsim::to_hex(kb.device_id) << "\n";
  return kExitOk;
}

int cmd_validate(const std::string& path) {
  wvsim::Bytes raw;
  if (wvsim::read_file(path, raw) != wvsim::Status::Ok) {
    std::cerr << "cannot read " << path << "\n";
    return kExitIo;
  }
  wvsim::Keybox kb;
  wvsim::Status st = wvsim::parse_keybox(wvsim::view(raw), kb);
  if (st != wvsim::Status::Ok) {
    std::cout << "invalid: " << wvsim::to_string(st) << " (size "
              << raw.size() << ", want " << wvsim::kKeyboxSize << ")\n";
    return kExitProtocol;
  }
  const wvsim::KeyboxVerdict verdict = wvsim::validate_keybox(kb);
  if (verdict != wvsim::KeyboxVerdict::Ok) {
    std::cout << "invalid: " << wvsim::to_string(verdict) << "\n";
    return kExitProtocol;
  }
  std::cout << "valid keybox\n"
            << "device_id " << wvsim::to_hex(kb.device_id) << "\n";
  return kExitOk;
}

// Shared flags for the protocol-running subcommands.
struct RunArgs {
  std::string config_path;
  std::string in_path;
  std::string out_path;
  std::string key_id_hex;
  std::string generic_key_id_hex;
  size_t sample_size = 131072;
  size_t clear_len = 256;
  size_t protected_len = 3840;
};

int load_config_or_fail(const std::string& path, wvsim::RunConfig& cfg) {
  std::string error;
  wvsim::Status st = wvsim::load_run_config(path, cfg, error);
  if (st != wvsim::Status::Ok) {
    std::cerr << "config error: " << error << "\n";
    return exit_code_for(st);
  }
  return kExitOk;
}

// Sample content: file contents when given, generated bytes otherwise.
int make_plaintext(const RunArgs& args, const wvsim::RunConfig& cfg,
                   wvsim::Bytes& plaintext) {
  if (!args.in_path.empty()) {
    if (wvsim::read_file(args.in_path, plaintext) != wvsim::Status::Ok) {
      std::cerr << "cannot read " << args.in_path << "\n";
      return kExitIo;
    }
    return kExitOk;
  }
  if (cfg.deterministic) {
    wvsim::DeterministicRandom rng(cfg.client_seed ^ 0x636f6e74u);
    plaintext = rng.bytes(args.sample_size);
  } else {
    wvsim::SystemRandom rng;
    plaintext = rng.bytes(args.sample_size);
  }
  return kExitOk;
}

int pick_key_id(const std::string& hex, const wvsim::RunConfig& cfg,
                wvsim::Bytes& key_id) {
  if (!hex.empty()) {
    auto parsed = wvsim::from_hex(hex);
    if (!parsed || parsed->empty()) {
      std::cerr << "config error: key id must be non-empty hex\n";
      return kExitConfig;
    }
    key_id = *parsed;
    return kExitOk;
  }
  if (cfg.content_keys.empty()) {
    std::cerr << "config error: config defines no content keys\n";
    return kExitConfig;
  }
  key_id = cfg.content_keys.front().key_id;
  return kExitOk;
}

int cmd_e2e(const RunArgs& args) {
  wvsim::RunConfig cfg;
  int rc = load_config_or_fail(args.config_path, cfg);
  if (rc != kExitOk) return rc;

  wvsim::SimEnvironment env;
  std::string error;
  wvsim::Status st = wvsim::build_environment(cfg, env, error);
  if (st != wvsim::Status::Ok) {
    std::cerr << "environment error: " << error << "\n";
    return exit_code_for(st);
  }

  wvsim::Bytes plaintext;
  rc = make_plaintext(args, cfg, plaintext);
  if (rc != kExitOk) return rc;
  wvsim::Bytes key_id;
  rc = pick_key_id(args.key_id_hex, cfg, key_id);
  if (rc != kExitOk) return rc;

  const wvsim::SubsamplePlan plan = wvsim::make_subsamples(
      plaintext.size(), args.clear_len, args.protected_len);

  wvsim::E2eReport report;
  std::string phase;
  st = wvsim::run_e2e(env, wvsim::view(plaintext), plan, key_id, report,
                      phase);
  if (st != wvsim::Status::Ok) {
    std::cerr << "e2e failed in " << phase << " phase: "
              << wvsim::to_string(st) << "\n";
    return exit_code_for(st);
  }

  if (report.decrypted != plaintext) {
    std::cerr << "e2e failed: decrypted content differs from source\n";
    return kExitProtocol;
  }
  if (!args.out_path.empty()) {
    if (wvsim::write_file(args.out_path, wvsim::view(report.decrypted)) !=
        wvsim::Status::Ok) {
      std::cerr << "cannot write " << args.out_path << "\n";
      return kExitIo;
    }
  }

  std::cout << "e2e ok: " << plaintext.size() << " bytes decrypted, "
            << (report.provisioned_now ? "provisioned new device credential"
                                       : "reused persisted credential")
            << "\n";
  if (!cfg.trace_path.empty()) {
    std::cout << "trace written to " << cfg.trace_path << "\n";
  }
  return kExitOk;
}

int cmd_generic_session(const RunArgs& args) {
  wvsim::RunConfig cfg;
  int rc = load_config_or_fail(args.config_path, cfg);
  if (rc != kExitOk) return rc;

  wvsim::SimEnvironment env;
  std::string error;
  wvsim::Status st = wvsim::build_environment(cfg, env, error);
  if (st != wvsim::Status::Ok) {
    std::cerr << "environment error: " << error << "\n";
    return exit_code_for(st);
  }

  wvsim::Bytes payload;
  rc = make_plaintext(args, cfg, payload);
  if (rc != kExitOk) return rc;

  wvsim::Bytes content_key_id;
  rc = pick_key_id(args.key_id_hex, cfg, content_key_id);
  if (rc != kExitOk) return rc;
  wvsim::Bytes generic_key_id;
  if (args.generic_key_id_hex.empty()) {
    // Fall back to the first catalogue key granting the generic rights.
    bool found = false;
    for (const auto& ck : cfg.content_keys) {
      const uint32_t generic_bits =
          wvsim::kcb_bits::kAllowGenericEncrypt |
          wvsim::kcb_bits::kAllowGenericDecrypt |
          wvsim::kcb_bits::kAllowGenericSign |
          wvsim::kcb_bits::kAllowGenericVerify;
      if ((ck.control_bits & generic_bits) == generic_bits) {
        generic_key_id = ck.key_id;
        found = true;
        break;
      }
    }
    if (!found) {
      std::cerr << "config error: no content key grants generic rights\n";
      return kExitConfig;
    }
  } else {
    rc = pick_key_id(args.generic_key_id_hex, cfg, generic_key_id);
    if (rc != kExitOk) return rc;
  }

  std::string phase;
  st = wvsim::run_generic_session(env, wvsim::view(payload), content_key_id,
                                  generic_key_id, phase);
  if (st != wvsim::Status::Ok) {
    std::cerr << "generic-session failed in " << phase << " phase: "
              << wvsim::to_string(st) << "\n";
    return exit_code_for(st);
  }
  std::cout << "generic-session ok: license session decrypted "
            << payload.size()
            << " bytes; generic session round-tripped encrypt/decrypt and "
               "sign/verify\n";
  if (!cfg.trace_path.empty()) {
    std::cout << "trace written to " << cfg.trace_path << "\n";
  }
  return kExitOk;
}

int cmd_serve(const std::string& config_path, uint16_t port_override) {
  wvsim::RunConfig cfg;
  int rc = load_config_or_fail(config_path, cfg);
  if (rc != kExitOk) return rc;

  // The serve command only needs the server half of the environment, but the
  // shared builder validates the keybox and registers devices and keys.
  wvsim::SimEnvironment env;
  std::string error;
  wvsim::RunConfig local = cfg;
  local.in_process = true;  // never dial out of a server process
  local.trace_path.clear();
  wvsim::Status st = wvsim::build_environment(local, env, error);
  if (st != wvsim::Status::Ok) {
    std::cerr << "environment error: " << error << "\n";
    return exit_code_for(st);
  }

  wvsim::FrameServer server(*env.prov_server, *env.lic_server);
  server.set_logger([](const std::string& msg) {
    std::cout << "serve: " << msg << "\n" << std::flush;
  });
  uint16_t port = port_override != 0 ? port_override : cfg.server_port;
  uint16_t bound = 0;
  st = server.start(port, bound);
  if (st != wvsim::Status::Ok) {
    std::cerr << "cannot listen on port " << port << "\n";
    return kExitIo;
  }
  std::cout << "serve: listening on 127.0.0.1:" << bound << "\n"
            << std::flush;

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  while (!g_stop.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  server.stop();
  std::cout << "serve: stopped\n";
  return kExitOk;
}

int cmd_trace_dump(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot read " << path << "\n";
    return kExitIo;
  }
  std::map<std::string, size_t> per_op;
  size_t total = 0;
  size_t errors = 0;
  size_t malformed = 0;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    wvsim::ParsedTraceLine parsed;
    if (!wvsim::parse_trace_line(line, parsed)) {
      std::cerr << "line " << line_no << ": malformed trace line\n";
      ++malformed;
      continue;
    }
    ++total;
    ++per_op[parsed.name];
    if (parsed.status != "OK") ++errors;
    std::cout << line << "\n";
  }
  std::cout << "----\n"
            << total << " operations, " << errors << " errors, " << malformed
            << " malformed lines\n";
  for (const auto& [name, count] : per_op) {
    std::cout << "  " << name << ": " << count << "\n";
  }
  return malformed == 0 ? kExitOk : kExitProtocol;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DRM protocol simulator"};
  app.require_subcommand(1);

  std::string gen_out;
  auto* gen = app.add_subcommand("gen-keybox", "Generate a fresh keybox file");
  gen->add_option("output", gen_out, "Output path")->required();

  std::string validate_path;
  auto* val = app.add_subcommand("validate", "Validate a keybox file");
  val->add_option("keybox", validate_path, "Keybox path")->required();

  RunArgs e2e_args;
  auto* e2e = app.add_subcommand(
      "e2e", "Run provisioning, licensing and content decryption");
  e2e->add_option("-c,--config", e2e_args.config_path, "Config file")
      ->required();
  e2e->add_option("--in", e2e_args.in_path, "Plaintext sample file");
  e2e->add_option("--out", e2e_args.out_path, "Write decrypted bytes here");
  e2e->add_option("--key-id", e2e_args.key_id_hex, "Content key id (hex)");
  e2e->add_option("--size", e2e_args.sample_size,
                  "Generated sample size when --in is absent");
  e2e->add_option("--clear", e2e_args.clear_len,
                  "Clear bytes per subsample");
  e2e->add_option("--protected", e2e_args.protected_len,
                  "Protected bytes per subsample");

  RunArgs gs_args;
  auto* gs = app.add_subcommand(
      "generic-session",
      "Run a license session plus a generic-crypto session");
  gs->add_option("-c,--config", gs_args.config_path, "Config file")
      ->required();
  gs->add_option("--payload", gs_args.in_path, "Application payload file");
  gs->add_option("--size", gs_args.sample_size,
                 "Generated payload size when --payload is absent");
  gs->add_option("--key-id", gs_args.key_id_hex, "Content key id (hex)");
  gs->add_option("--generic-key-id", gs_args.generic_key_id_hex,
                 "Generic-rights key id (hex)");

  std::string serve_config;
  uint16_t serve_port = 0;
  auto* serve = app.add_subcommand("serve", "Run the servers over TCP");
  serve->add_option("-c,--config", serve_config, "Config file")->required();
  serve->add_option("-p,--port", serve_port,
                    "Listen port (0 picks an ephemeral port)");

  std::string dump_path;
  auto* dump = app.add_subcommand("trace-dump", "Pretty-print a trace file");
  dump->add_option("trace", dump_path, "Trace file path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  if (gen->parsed()) return cmd_gen_keybox(gen_out);
  if (val->parsed()) return cmd_validate(validate_path);
  if (e2e->parsed()) return cmd_e2e(e2e_args);
  if (gs->parsed()) return cmd_generic_session(gs_args);
  if (serve->parsed()) return cmd_serve(serve_config, serve_port);
  if (dump->parsed()) return cmd_trace_dump(dump_path);
  return kExitConfig;
}
