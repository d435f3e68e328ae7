#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "wvsim/servers.hpp"
#include "wvsim/status.hpp"
#include "wvsim/wire.hpp"

namespace wvsim {

// One request/response exchange against a server backend.
class MessageChannel {
 public:
  virtual ~MessageChannel() = default;

  // Transport-level failures map to IoError; handler failures arrive as a
  // decoded ErrorResponse.
  virtual Status roundtrip(const wire::Message& request,
                           wire::Message& response) = 0;
};

// Direct handler invocation.  Every message still passes through the codec
// in both directions so this mode exercises the same bytes as the socket
// path.
class InProcessChannel final : public MessageChannel {
 public:
  InProcessChannel(ProvisioningServer& prov, LicenseServer& lic)
      : prov_(prov), lic_(lic) {}

  Status roundtrip(const wire::Message& request,
                   wire::Message& response) override;

 private:
  ProvisioningServer& prov_;
  LicenseServer& lic_;
};

// Loopback byte-stream client.  Frames carry a 4-byte big-endian length
// prefix.
class TcpChannel final : public MessageChannel {
 public:
  static Status connect(const std::string& host, uint16_t port,
                        std::unique_ptr<TcpChannel>& out);
  ~TcpChannel() override;

  TcpChannel(const TcpChannel&) = delete;
  TcpChannel& operator=(const TcpChannel&) = delete;

  Status roundtrip(const wire::Message& request,
                   wire::Message& response) override;

 private:
  explicit TcpChannel(int fd) : fd_(fd) {}

  std::mutex mu_;
  int fd_;
};

// Loopback listener: accepts connections and serves framed requests, one
// thread per connection.  A malformed frame is answered with an error frame
// and the connection stays open.
class FrameServer {
 public:
  FrameServer(ProvisioningServer& prov, LicenseServer& lic)
      : prov_(prov), lic_(lic) {}
  ~FrameServer();

  FrameServer(const FrameServer&) = delete;
  FrameServer& operator=(const FrameServer&) = delete;

  // Binds 127.0.0.1:port (0 picks an ephemeral port, reported back).
  Status start(uint16_t port, uint16_t& bound_port);
  void stop();

  void set_logger(std::function<void(const std::string&)> logger) {
    logger_ = std::move(logger);
  }

 private:
  void accept_loop();
  void serve_connection(int fd);
  void log(const std::string& line);

  ProvisioningServer& prov_;
  LicenseServer& lic_;
  std::function<void(const std::string&)> logger_;

  std::atomic<bool> running_{false};
  int listen_fd_ = -1;
  std::thread accept_thread_;
  std::mutex mu_;
  std::vector<std::thread> workers_;
  std::vector<int> open_fds_;
};

}  // namespace wvsim
