#include <algorithm>

#include "doctest.h"
#include "support/env.hpp"
#include "wvsim/io.hpp"
#include "wvsim/trace.hpp"

using namespace wvsim;

TEST_SUITE("trace") {

TEST_CASE("payloads keep a 64-byte prefix and the true length") {
  Bytes big(200, 0);
  for (size_t i = 0; i < big.size(); ++i) big[i] = static_cast<uint8_t>(i);
  const TracePayload p = make_payload(view(big));
  CHECK(p.prefix.size() == kTracePrefixCap);
  CHECK(p.total_len == 200);

  const std::string hex = hex_prefix(p);
  CHECK(hex.size() == 2 * kTracePrefixCap + std::string("..(len=200)").size());
  CHECK(hex.substr(hex.size() - 11) == "..(len=200)");

  const TracePayload small = make_payload(view(Bytes{0xab, 0xcd}));
  CHECK(hex_prefix(small) == "abcd");
  CHECK(hex_prefix(make_payload(ByteView{})) == "-");
}

TEST_CASE("line format covers every field") {
  TraceEvent ev;
  ev.op = Oecc::GenerateNonce;
  ev.session = 0x1234abcdu;
  ev.status = Status::Ok;
  ev.in = make_payload(ByteView{});
  ev.out = make_payload(view(Bytes{0xde, 0xad}));
  CHECK(format_trace_line(ev) ==
        "oecc14 GenerateNonce session=1234abcd status=OK in=- out=dead");

  ev.status = Status::StaleNonce;
  ev.session.reset();
  ev.note = "replayed";
  CHECK(format_trace_line(ev) ==
        "oecc14 GenerateNonce session=- status=Error:StaleNonce in=- "
        "out=dead note=replayed");
}

TEST_CASE("operation numbers render zero-padded") {
  TraceEvent ev;
  ev.op = Oecc::InstallKeybox;
  const std::string line = format_trace_line(ev);
  CHECK(line.substr(0, 6) == "oecc03");
  ev.op = Oecc::DecryptCenc;
  CHECK(format_trace_line(ev).substr(0, 6) == "oecc48");
}

TEST_CASE("formatted lines parse back") {
  TraceEvent ev;
  ev.op = Oecc::LoadKeys;
  ev.session = 0x00000001u;
  ev.status = Status::Ok;
  ev.in = make_payload(view(Bytes(100, 0x11)));
  ev.out = make_payload(view(Bytes{0x00, 0x00, 0x00, 0x02}));
  ev.note = "anti_rollback_unenforced";

  ParsedTraceLine parsed;
  REQUIRE(parse_trace_line(format_trace_line(ev), parsed));
  CHECK(parsed.op == 35);
  CHECK(parsed.name == "LoadKeys");
  REQUIRE(parsed.session.has_value());
  CHECK(*parsed.session == 1);
  CHECK(parsed.status == "OK");
  CHECK(parsed.out == "00000002");
  CHECK(parsed.note == "anti_rollback_unenforced");
}

TEST_CASE("parser rejects malformed lines") {
  ParsedTraceLine p;
  CHECK_FALSE(parse_trace_line("", p));
  CHECK_FALSE(parse_trace_line("oecc14", p));
  CHECK_FALSE(parse_trace_line("oecc14 GenerateNonce", p));
  CHECK_FALSE(parse_trace_line(
      "oecc14 WrongName session=- status=OK in=- out=-", p));
  CHECK_FALSE(parse_trace_line(
      "oecc14 GenerateNonce session=xyz status=OK in=- out=-", p));
  CHECK_FALSE(parse_trace_line(
      "oecc14 GenerateNonce session=- status=Maybe in=- out=-", p));
  CHECK_FALSE(parse_trace_line(
      "oecc14 GenerateNonce session=- status=OK in=zz out=-", p));
  CHECK_FALSE(parse_trace_line(
      "oecc14 GenerateNonce session=- status=OK in=- out=- late=1", p));
  // A valid line round-trips.
  CHECK(parse_trace_line(
      "oecc14 GenerateNonce session=0000abcd status=OK in=- out=a39143f8", p));
}

TEST_CASE("memory sink records events in order") {
  MemoryTraceSink sink;
  TraceEvent a;
  a.op = Oecc::OpenSession;
  TraceEvent b;
  b.op = Oecc::CloseSession;
  sink.write(a);
  sink.write(b);
  REQUIRE(sink.events().size() == 2);
  CHECK(sink.events()[0].op == Oecc::OpenSession);
  CHECK(sink.events()[1].op == Oecc::CloseSession);
  CHECK(sink.lines().size() == 2);
  sink.clear();
  CHECK(sink.events().empty());
}

TEST_CASE("file sink writes one line per event") {
  testing::TempDir dir;
  const std::string path = dir.file("trace.log");
  {
    FileTraceSink sink(path);
    REQUIRE(sink.ok());
    TraceEvent ev;
    ev.op = Oecc::GenerateNonce;
    ev.session = 7;
    sink.write(ev);
    sink.write(ev);
  }
  Bytes raw;
  REQUIRE(read_file(path, raw) == Status::Ok);
  const std::string content(raw.begin(), raw.end());
  CHECK(content ==
        "oecc14 GenerateNonce session=00000007 status=OK in=- out=-\n"
        "oecc14 GenerateNonce session=00000007 status=OK in=- out=-\n");
}

TEST_CASE("tee sink forwards to both targets") {
  MemoryTraceSink a, b;
  TeeTraceSink tee(&a, &b);
  TraceEvent ev;
  ev.op = Oecc::SelectKey;
  tee.write(ev);
  CHECK(a.events().size() == 1);
  CHECK(b.events().size() == 1);

  TeeTraceSink half(&a, nullptr);
  half.write(ev);
  CHECK(a.events().size() == 2);
}

TEST_CASE("every operation has a distinct name") {
  const Oecc all[] = {
      Oecc::InstallKeybox, Oecc::GetKeyData, Oecc::IsKeyboxValid,
      Oecc::GetRandom, Oecc::GetDeviceID, Oecc::WrapKeybox, Oecc::OpenSession,
      Oecc::CloseSession, Oecc::GenerateDerivedKeys, Oecc::GenerateSignature,
      Oecc::GenerateNonce, Oecc::RefreshKeys, Oecc::SelectKey,
      Oecc::RewrapDeviceRSAKey, Oecc::LoadDeviceRSAKey,
      Oecc::GenerateRSASignature, Oecc::DeriveKeysFromSessionKey,
      Oecc::ApiVersion, Oecc::GetSecurityLevel, Oecc::GenericEncrypt,
      Oecc::GenericDecrypt, Oecc::GenericSign, Oecc::GenericVerify,
      Oecc::SupportsUsageTable, Oecc::UpdateUsageTable,
      Oecc::DeactivateUsageEntry, Oecc::ReportUsage, Oecc::DeleteUsageEntry,
      Oecc::DeleteUsageTable, Oecc::LoadKeys, Oecc::QueryKeyControl,
      Oecc::ForceDeleteUsageEntry, Oecc::DecryptCenc,
  };
  std::vector<std::string> names;
  for (Oecc op : all) names.emplace_back(oecc_name(op));
  std::sort(names.begin(), names.end());
  CHECK(std::adjacent_find(names.begin(), names.end()) == names.end());
}

}  // TEST_SUITE
