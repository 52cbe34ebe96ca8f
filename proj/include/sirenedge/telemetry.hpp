#pragma once

// WebSocket monitoring and control service. Engine messages are
// broadcast to every client at /ws; clients send control commands back on
// the same socket and receive one ack per command. GET /healthz answers
// {"status":"ok"}.

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "json.hpp"
#include "sirenedge/engine.hpp"

namespace sirenedge {

inline constexpr const char* kDefaultListen = "127.0.0.1:8765";

struct TelemetryOptions {
  std::string listen = kDefaultListen;  // HOST:PORT; port 0 picks a free port
  std::size_t client_queue = 1024;      // messages; a client beyond this is disconnected
  std::size_t hub_queue = 65536;        // engine-side queue; overflow drops messages
  int socket_send_buffer = 0;           // SO_SNDBUF for client sockets, 0 = system default
};

// Validates and applies one control command, returning the ack object:
// {"ok":true,"cmd":...} or {"ok":false,"msg":...}.
nlohmann::json apply_command(Session& session, const nlohmann::json& cmd);

class TelemetryServer final : public TelemetrySink {
 public:
  // Binds immediately; throws IoError when the address cannot be bound.
  explicit TelemetryServer(TelemetryOptions options = {});
  ~TelemetryServer() override;

  TelemetryServer(const TelemetryServer&) = delete;
  TelemetryServer& operator=(const TelemetryServer&) = delete;

  // Non-blocking; called from the engine's consumer context.
  void publish(std::string message) override;

  // Commands received from clients are applied to this session. Without a
  // session every command is rejected.
  void attach(Session* session);

  std::uint16_t port() const;
  std::size_t client_count() const;
  std::uint64_t dropped_messages() const;
  std::uint64_t disconnected_clients() const;

  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Parses "HOST:PORT"; throws ConfigError.
std::pair<std::string, std::uint16_t> parse_listen_address(const std::string& address);

}  // namespace sirenedge
