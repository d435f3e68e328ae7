#include "wvsim/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

namespace wvsim {

namespace {

constexpr uint32_t kMaxFrameLen = 8 * 1024 * 1024;

bool read_exact(int fd, uint8_t* buf, size_t n) {
  size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, buf + got, n - got, 0);
    if (r <= 0) return false;
    got += static_cast<size_t>(r);
  }
  return true;
}

bool write_all(int fd, const uint8_t* buf, size_t n) {
  size_t sent = 0;
  while (sent < n) {
    const ssize_t r = ::send(fd, buf + sent, n - sent, MSG_NOSIGNAL);
    if (r <= 0) return false;
    sent += static_cast<size_t>(r);
  }
  return true;
}

bool write_frame(int fd, ByteView frame) {
  const Bytes framed = wire::frame_with_length(frame);
  return write_all(fd, framed.data(), framed.size());
}

// false on EOF/transport error; true with a filled frame otherwise.
bool read_frame(int fd, Bytes& frame) {
  uint8_t len_buf[4];
  if (!read_exact(fd, len_buf, 4)) return false;
  const uint32_t len = load_be32(len_buf);
  if (len > kMaxFrameLen) return false;
  frame.resize(len);
  return len == 0 || read_exact(fd, frame.data(), len);
}

}  // namespace

Status InProcessChannel::roundtrip(const wire::Message& request,
                                   wire::Message& response) {
  const Bytes frame = wire::encode(request);
  wire::Message decoded;
  Status st = wire::decode(frame, decoded);
  if (st != Status::Ok) return st;
  const wire::Message resp = dispatch_request(prov_, lic_, decoded);
  const Bytes resp_frame = wire::encode(resp);
  return wire::decode(resp_frame, response);
}

Status TcpChannel::connect(const std::string& host, uint16_t port,
                           std::unique_ptr<TcpChannel>& out) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return Status::IoError;
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    return Status::ConfigError;
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    return Status::IoError;
  }
  out.reset(new TcpChannel(fd));
  return Status::Ok;
}

TcpChannel::~TcpChannel() {
  if (fd_ >= 0) ::close(fd_);
}

Status TcpChannel::roundtrip(const wire::Message& request,
                             wire::Message& response) {
  std::lock_guard lk(mu_);
  if (fd_ < 0) return Status::IoError;
  const Bytes frame = wire::encode(request);
  if (!write_frame(fd_, frame)) return Status::IoError;
  Bytes resp_frame;
  if (!read_frame(fd_, resp_frame)) return Status::IoError;
  return wire::decode(resp_frame, response);
}

FrameServer::~FrameServer() { stop(); }

Status FrameServer::start(uint16_t port, uint16_t& bound_port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return Status::IoError;
  const int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
      ::listen(fd, 16) != 0) {
    ::close(fd);
    return Status::IoError;
  }
  socklen_t len = sizeof(addr);
  if (::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    ::close(fd);
    return Status::IoError;
  }
  bound_port = ntohs(addr.sin_port);
  listen_fd_ = fd;
  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
  return Status::Ok;
}

void FrameServer::stop() {
  if (!running_.exchange(false)) return;
  if (listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  {
    std::lock_guard lk(mu_);
    for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lk(mu_);
    workers.swap(workers_);
  }
  for (auto& t : workers) {
    if (t.joinable()) t.join();
  }
}

void FrameServer::log(const std::string& line) {
  if (logger_) logger_(line);
}

void FrameServer::accept_loop() {
  while (running_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) break;
    std::lock_guard lk(mu_);
    open_fds_.push_back(fd);
    workers_.emplace_back([this, fd] { serve_connection(fd); });
  }
}

void FrameServer::serve_connection(int fd) {
  Bytes frame;
  while (running_ && read_frame(fd, frame)) {
    wire::Message request;
    wire::Message response;
    Status st = wire::decode(frame, request);
    if (st != Status::Ok) {
      log("rejected frame: " + std::string(to_string(st)));
      wire::ErrorResponse err;
      err.error_code = wire::wire_error_code(st);
      response = err;
    } else {
      log(std::string("handling ") +
          wire::to_string(wire::msg_type_of(request)));
      response = dispatch_request(prov_, lic_, request);
    }
    if (!write_frame(fd, wire::encode(response))) break;
  }
  ::close(fd);
  std::lock_guard lk(mu_);
  for (auto it = open_fds_.begin(); it != open_fds_.end(); ++it) {
    if (*it == fd) {
      open_fds_.erase(it);
      break;
    }
  }
}

}  // namespace wvsim
