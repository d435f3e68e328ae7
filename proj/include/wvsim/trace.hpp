#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "wvsim/bytes.hpp"
#include "wvsim/status.hpp"

namespace wvsim {

// Operation symbols used as the trace vocabulary.
enum class Oecc : int {
  InstallKeybox = 3,
  GetKeyData = 4,
  IsKeyboxValid = 5,
  GetRandom = 6,
  GetDeviceID = 7,
  WrapKeybox = 8,
  OpenSession = 9,
  CloseSession = 10,
  GenerateDerivedKeys = 12,
  GenerateSignature = 13,
  GenerateNonce = 14,
  RefreshKeys = 16,
  SelectKey = 17,
  RewrapDeviceRSAKey = 18,
  LoadDeviceRSAKey = 19,
  GenerateRSASignature = 20,
  DeriveKeysFromSessionKey = 21,
  ApiVersion = 22,
  GetSecurityLevel = 23,
  GenericEncrypt = 24,
  GenericDecrypt = 25,
  GenericSign = 26,
  GenericVerify = 27,
  SupportsUsageTable = 29,
  UpdateUsageTable = 30,
  DeactivateUsageEntry = 31,
  ReportUsage = 32,
  DeleteUsageEntry = 33,
  DeleteUsageTable = 34,
  LoadKeys = 35,
  QueryKeyControl = 41,
  ForceDeleteUsageEntry = 43,
  DecryptCenc = 48,
};

const char* oecc_name(Oecc op);

inline constexpr size_t kTracePrefixCap = 64;

// Payload excerpt kept in a trace event: at most 64 bytes plus the original
// length, so traces stay reviewable and never hold bulk media.
struct TracePayload {
  Bytes prefix;
  size_t total_len = 0;

  bool operator==(const TracePayload&) const = default;
};

TracePayload make_payload(ByteView data);

struct TraceEvent {
  Oecc op = Oecc::OpenSession;
  std::optional<uint32_t> session;
  Status status = Status::Ok;
  TracePayload in;
  TracePayload out;
  std::string note;
};

// "-" for empty, hex for up to 64 bytes, hex prefix plus "..(len=N)" beyond.
std::string hex_prefix(const TracePayload& p);

// `oeccNN <Name> session=<hex8|-> status=<OK|Error:kind> in=<...> out=<...>`
// with an optional trailing ` note=<token>`.
std::string format_trace_line(const TraceEvent& ev);

class TraceSink {
 public:
  virtual ~TraceSink() = default;
  virtual void write(const TraceEvent& ev) = 0;
};

class NullTraceSink final : public TraceSink {
 public:
  void write(const TraceEvent&) override {}
};

class MemoryTraceSink final : public TraceSink {
 public:
  void write(const TraceEvent& ev) override { events_.push_back(ev); }
  const std::vector<TraceEvent>& events() const { return events_; }
  std::vector<std::string> lines() const;
  void clear() { events_.clear(); }

 private:
  std::vector<TraceEvent> events_;
};

class FileTraceSink final : public TraceSink {
 public:
  explicit FileTraceSink(const std::string& path);
  bool ok() const { return out_.good(); }
  void write(const TraceEvent& ev) override;

 private:
  std::ofstream out_;
};

// A trace line split back into its fields.
struct ParsedTraceLine {
  int op = 0;
  std::string name;
  std::optional<uint32_t> session;
  std::string status;
  std::string in;
  std::string out;
  std::string note;
};

// Strict parse of one formatted line; false when the line does not follow
// the trace grammar.
bool parse_trace_line(const std::string& line, ParsedTraceLine& out);

// Fans one event stream out to two sinks; either may be null.
class TeeTraceSink final : public TraceSink {
 public:
  TeeTraceSink(TraceSink* a, TraceSink* b) : a_(a), b_(b) {}
  void write(const TraceEvent& ev) override {
    if (a_) a_->write(ev);
    if (b_) b_->write(ev);
  }

 private:
  TraceSink* a_;
  TraceSink* b_;
};

}  // namespace wvsim
