#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

namespace idqn::session {

// WebSocket endpoint on 127.0.0.1 with its own I/O thread. Every text
// message from a client goes to the handler, whose reply is sent back to that
// client. broadcast() never blocks: each client has a bounded outbound
// buffer that drops its oldest pending message when full.
class TelemetryServer {
 public:
  using Handler = std::function<std::string(std::string_view)>;

  // port 0 picks a free port. Throws ConfigError when the port cannot be bound.
  TelemetryServer(std::uint16_t port, Handler handler, std::size_t client_buffer = 256);
  ~TelemetryServer();
  TelemetryServer(const TelemetryServer&) = delete;
  TelemetryServer& operator=(const TelemetryServer&) = delete;

  std::uint16_t port() const;
  void broadcast(std::string message);
  std::size_t client_count() const;
  // Messages dropped across all clients because their buffers were full.
  std::uint64_t dropped() const;
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace idqn::session
