#include "wvsim/trace.hpp"

#include <cstdio>

namespace wvsim {

const char* oecc_name(Oecc op) {
  switch (op) {
    case Oecc::InstallKeybox: return "InstallKeybox";
    case Oecc::GetKeyData: return "GetKeyData";
    case Oecc::IsKeyboxValid: return "IsKeyboxValid";
    case Oecc::GetRandom: return "GetRandom";
    case Oecc::GetDeviceID: return "GetDeviceID";
    case Oecc::WrapKeybox: return "WrapKeybox";
    case Oecc::OpenSession: return "OpenSession";
    case Oecc::CloseSession: return "CloseSession";
    case Oecc::GenerateDerivedKeys: return "GenerateDerivedKeys";
    case Oecc::GenerateSignature: return "GenerateSignature";
    case Oecc::GenerateNonce: return "GenerateNonce";
    case Oecc::RefreshKeys: return "RefreshKeys";
    case Oecc::SelectKey: return "SelectKey";
    case Oecc::RewrapDeviceRSAKey: return "RewrapDeviceRSAKey";
    case Oecc::LoadDeviceRSAKey: return "LoadDeviceRSAKey";
    case Oecc::GenerateRSASignature: return "GenerateRSASignature";
    case Oecc::DeriveKeysFromSessionKey: return "DeriveKeysFromSessionKey";
    case Oecc::ApiVersion: return "APIVersion";
    case Oecc::GetSecurityLevel: return "GetSecurityLevel";
    case Oecc::GenericEncrypt: return "Generic_Encrypt";
    case Oecc::GenericDecrypt: return "Generic_Decrypt";
    case Oecc::GenericSign: return "Generic_Sign";
    case Oecc::GenericVerify: return "Generic_Verify";
    case Oecc::SupportsUsageTable: return "SupportsUsageTable";
    case Oecc::UpdateUsageTable: return "UpdateUsageTable";
    case Oecc::DeactivateUsageEntry: return "DeactivateUsageEntry";
    case Oecc::ReportUsage: return "ReportUsage";
    case Oecc::DeleteUsageEntry: return "DeleteUsageEntry";
    case Oecc::DeleteUsageTable: return "DeleteUsageTable";
    case Oecc::LoadKeys: return "LoadKeys";
    case Oecc::QueryKeyControl: return "QueryKeyControl";
    case Oecc::ForceDeleteUsageEntry: return "ForceDeleteUsageEntry";
    case Oecc::DecryptCenc: return "DecryptCENC";
  }
  return "Unknown";
}

TracePayload make_payload(ByteView data) {
  TracePayload p;
  p.total_len = data.size();
  const size_t n = std::min(data.size(), kTracePrefixCap);
  p.prefix.assign(data.begin(), data.begin() + n);
  return p;
}

std::string hex_prefix(const TracePayload& p) {
  if (p.total_len == 0) return "-";
  std::string s = to_hex(p.prefix);
  if (p.total_len > kTracePrefixCap) {
    s += "..(len=" + std::to_string(p.total_len) + ")";
  }
  return s;
}

std::string format_trace_line(const TraceEvent& ev) {
  char head[64];
  std::snprintf(head, sizeof(head), "oecc%02d %s", static_cast<int>(ev.op),
                oecc_name(ev.op));
  std::string line = head;
  if (ev.session) {
    char sess[16];
    std::snprintf(sess, sizeof(sess), "%08x", *ev.session);
    line += " session=";
    line += sess;
  } else {
    line += " session=-";
  }
  line += " status=";
  if (ev.status == Status::Ok) {
    line += "OK";
  } else {
    line += "Error:";
    line += to_string(ev.status);
  }
  line += " in=" + hex_prefix(ev.in);
  line += " out=" + hex_prefix(ev.out);
  if (!ev.note.empty()) line += " note=" + ev.note;
  return line;
}

std::vector<std::string> MemoryTraceSink::lines() const {
  std::vector<std::string> out;
  out.reserve(events_.size());
  for (const auto& ev : events_) out.push_back(format_trace_line(ev));
  return out;
}

namespace {

// Splits on single spaces; trace fields never contain spaces.
std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= line.size()) {
    const size_t sp = line.find(' ', start);
    if (sp == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, sp - start));
    start = sp + 1;
  }
  return out;
}

bool is_hex_string(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    const bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
    if (!ok) return false;
  }
  return true;
}

bool valid_payload_field(const std::string& s) {
  if (s == "-") return true;
  const size_t dots = s.find("..(len=");
  if (dots == std::string::npos) {
    return s.size() % 2 == 0 && s.size() <= 2 * kTracePrefixCap &&
           is_hex_string(s);
  }
  if (dots != 2 * kTracePrefixCap || s.back() != ')') return false;
  const std::string len = s.substr(dots + 7, s.size() - dots - 8);
  if (len.empty()) return false;
  for (char c : len) {
    if (c < '0' || c > '9') return false;
  }
  return is_hex_string(s.substr(0, dots));
}

}  // namespace

bool parse_trace_line(const std::string& line, ParsedTraceLine& out) {
  const auto fields = split_fields(line);
  if (fields.size() != 6 && fields.size() != 7) return false;

  const std::string& head = fields[0];
  if (head.size() != 6 || head.compare(0, 4, "oecc") != 0) return false;
  int op = 0;
  for (size_t i = 4; i < head.size(); ++i) {
    if (head[i] < '0' || head[i] > '9') return false;
    op = op * 10 + (head[i] - '0');
  }
  out.op = op;
  out.name = fields[1];
  if (out.name != oecc_name(static_cast<Oecc>(op))) return false;

  const std::string& sess = fields[2];
  if (sess.compare(0, 8, "session=") != 0) return false;
  const std::string sess_val = sess.substr(8);
  if (sess_val == "-") {
    out.session = std::nullopt;
  } else {
    if (sess_val.size() != 8 || !is_hex_string(sess_val)) return false;
    out.session = static_cast<uint32_t>(std::stoul(sess_val, nullptr, 16));
  }

  const std::string& status = fields[3];
  if (status.compare(0, 7, "status=") != 0) return false;
  out.status = status.substr(7);
  if (out.status != "OK" && out.status.compare(0, 6, "Error:") != 0) {
    return false;
  }

  if (fields[4].compare(0, 3, "in=") != 0) return false;
  out.in = fields[4].substr(3);
  if (!valid_payload_field(out.in)) return false;

  if (fields[5].compare(0, 4, "out=") != 0) return false;
  out.out = fields[5].substr(4);
  if (!valid_payload_field(out.out)) return false;

  out.note.clear();
  if (fields.size() == 7) {
    if (fields[6].compare(0, 5, "note=") != 0) return false;
    out.note = fields[6].substr(5);
    if (out.note.empty()) return false;
  }
  return true;
}

FileTraceSink::FileTraceSink(const std::string& path) : out_(path) {}

void FileTraceSink::write(const TraceEvent& ev) {
  out_ << format_trace_line(ev) << '\n';
  out_.flush();
}

}  // namespace wvsim
