#include <spawn.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>
#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/posix/stream_descriptor.hpp>
#include <boost/asio/read.hpp>
#include <boost/asio/write.hpp>

#include "sirenedge/classify.hpp"
#include "sirenedge/error.hpp"
#include "sirenedge/framing.hpp"
#include "sirenedge/wire.hpp"

extern char** environ;

namespace sirenedge {

namespace asio = boost::asio;
using asio::ip::tcp;
using Clock = std::chrono::steady_clock;

ExternalEndpoint ExternalEndpoint::parse(const std::string& spec) {
  if (spec.rfind("external:", 0) == 0 && spec.size() > 9)
    return {Kind::Process, spec.substr(9)};
  if (spec.rfind("tcp:", 0) == 0 && spec.size() > 4) return {Kind::Tcp, spec.substr(4)};
  throw Error(ErrorCode::ConfigError, "backend endpoint must be external:CMD or tcp:HOST:PORT, got '" + spec + "'");
}

struct ExternalBackend::Connection {
  asio::io_context io;
  pid_t pid = -1;
  std::optional<asio::posix::stream_descriptor> to_child;
  std::optional<asio::posix::stream_descriptor> from_child;
  std::optional<tcp::socket> socket;

  Connection() = default;
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;

  ~Connection() {
    boost::system::error_code ignored;
    if (socket) socket->close(ignored);
    if (to_child) to_child->close(ignored);
    if (from_child) from_child->close(ignored);
    if (pid > 0) reap();
  }

  void reap() {
    // Closing stdin asks a well-behaved child to exit; give it a moment.
    for (int i = 0; i < 20; ++i) {
      if (waitpid(pid, nullptr, WNOHANG) == pid) return;
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    kill(pid, SIGKILL);
    waitpid(pid, nullptr, 0);
  }

  void spawn(const std::string& command) {
    static const bool sigpipe_ignored = [] {
      std::signal(SIGPIPE, SIG_IGN);
      return true;
    }();
    (void)sigpipe_ignored;

    int in_pipe[2];
    int out_pipe[2];
    if (pipe(in_pipe) != 0) throw Error(ErrorCode::BackendError, std::string("pipe: ") + std::strerror(errno));
    if (pipe(out_pipe) != 0) {
      close(in_pipe[0]);
      close(in_pipe[1]);
      throw Error(ErrorCode::BackendError, std::string("pipe: ") + std::strerror(errno));
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
    posix_spawn_file_actions_addclose(&actions, in_pipe[1]);
    posix_spawn_file_actions_addclose(&actions, out_pipe[0]);

    const std::string shell = "/bin/sh";
    std::array<char*, 4> argv{const_cast<char*>(shell.c_str()), const_cast<char*>("-c"),
                              const_cast<char*>(command.c_str()), nullptr};
    const int rc = posix_spawn(&pid, shell.c_str(), &actions, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    close(in_pipe[0]);
    close(out_pipe[1]);
    if (rc != 0) {
      close(in_pipe[1]);
      close(out_pipe[0]);
      pid = -1;
      throw Error(ErrorCode::BackendError, "cannot spawn '" + command + "': " + std::strerror(rc));
    }
    to_child.emplace(io, in_pipe[1]);
    from_child.emplace(io, out_pipe[0]);
  }

  void connect(const std::string& address, Clock::time_point deadline) {
    const auto colon = address.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorCode::ConfigError, "tcp endpoint must be HOST:PORT");
    tcp::resolver resolver(io);
    boost::system::error_code ec;
    const auto endpoints = resolver.resolve(address.substr(0, colon), address.substr(colon + 1), ec);
    if (ec) throw Error(ErrorCode::BackendError, "cannot resolve " + address + ": " + ec.message());
    socket.emplace(io);
    bool done = false;
    asio::async_connect(*socket, endpoints, [&](const boost::system::error_code& e, const tcp::endpoint&) {
      ec = e;
      done = true;
    });
    run_until(done, deadline);
    if (ec) throw Error(ErrorCode::BackendError, "cannot connect to " + address + ": " + ec.message());
    socket->set_option(tcp::no_delay(true));
  }

  void run_until(bool& done, Clock::time_point deadline) {
    io.restart();
    while (!done) {
      const auto now = Clock::now();
      if (now >= deadline || io.run_one_for(deadline - now) == 0) {
        if (done) break;
        // Cancel outstanding work and let the handlers observe it.
        boost::system::error_code ignored;
        if (socket) socket->cancel(ignored);
        if (to_child) to_child->cancel(ignored);
        if (from_child) from_child->cancel(ignored);
        io.restart();
        io.run();
        throw Error(ErrorCode::BackendTimeout, "no response within the deadline");
      }
    }
  }

  float exchange(std::span<const std::byte> request, Clock::time_point deadline) {
    std::array<std::byte, wire::kResponseBytes> response{};
    boost::system::error_code write_ec;
    boost::system::error_code read_ec;
    bool wrote = false;
    bool read = false;
    auto on_write = [&](const boost::system::error_code& e, std::size_t) {
      write_ec = e;
      wrote = true;
    };
    auto on_read = [&](const boost::system::error_code& e, std::size_t) {
      read_ec = e;
      read = true;
    };
    if (socket) {
      asio::async_write(*socket, asio::buffer(request.data(), request.size()), on_write);
      asio::async_read(*socket, asio::buffer(response.data(), response.size()), on_read);
    } else {
      asio::async_write(*to_child, asio::buffer(request.data(), request.size()), on_write);
      asio::async_read(*from_child, asio::buffer(response.data(), response.size()), on_read);
    }
    bool both = false;
    io.restart();
    while (!both) {
      const auto now = Clock::now();
      if (now >= deadline || io.run_one_for(deadline - now) == 0) {
        if (wrote && read) break;
        boost::system::error_code ignored;
        if (socket) socket->cancel(ignored);
        if (to_child) to_child->cancel(ignored);
        if (from_child) from_child->cancel(ignored);
        io.restart();
        io.run();
        throw Error(ErrorCode::BackendTimeout, "no response within the deadline");
      }
      both = wrote && read;
      if (write_ec) throw Error(ErrorCode::BackendError, "write failed: " + write_ec.message());
      if (read_ec) {
        if (read_ec == asio::error::eof)
          throw Error(ErrorCode::ProtocolError, "backend closed the stream before a full response");
        throw Error(ErrorCode::BackendError, "read failed: " + read_ec.message());
      }
    }
    return wire::decode_response(response);
  }
};

ExternalBackend::ExternalBackend(ExternalEndpoint endpoint, ExternalBackendOptions options)
    : endpoint_(std::move(endpoint)), options_(options) {}

ExternalBackend::~ExternalBackend() = default;

std::string ExternalBackend::name() const {
  return (endpoint_.kind == ExternalEndpoint::Kind::Tcp ? "tcp:" : "external:") + endpoint_.target;
}

ExternalBackend::Connection& ExternalBackend::connection() {
  if (!conn_) {
    auto conn = std::make_unique<Connection>();
    if (endpoint_.kind == ExternalEndpoint::Kind::Process)
      conn->spawn(endpoint_.target);
    else
      conn->connect(endpoint_.target, Clock::now() + options_.timeout);
    conn_ = std::move(conn);
  }
  return *conn_;
}

float ExternalBackend::exchange(std::span<const float> frame) {
  const auto request = wire::encode_request(frame);
  auto& conn = connection();
  try {
    return conn.exchange(request, Clock::now() + options_.timeout);
  } catch (const Error&) {
    // The stream is out of sync after any failure; reconnect next time.
    conn_.reset();
    throw;
  }
}

std::size_t ExternalBackend::min_input_samples() {
  if (!min_input_) {
    std::vector<float> zeros;
    const auto result = min_valid_input(
        [&](std::size_t n) {
          zeros.assign(n, 0.0f);
          const float p = exchange(zeros);
          return std::isfinite(p) && p >= 0.0f && p <= 1.0f;
        },
        options_.probe_lo, options_.probe_hi);
    probes_ = result.probes;
    min_input_ = result.size;
  }
  return *min_input_;
}

double ExternalBackend::score(std::span<const float> frame) {
  if (min_input_ && frame.size() < *min_input_)
    throw Error(ErrorCode::InputTooShort, "frame of " + std::to_string(frame.size()) + " samples, backend needs " +
                                              std::to_string(*min_input_));
  const float p = exchange(frame);
  if (!std::isfinite(p) || p < 0.0f || p > 1.0f)
    throw Error(ErrorCode::ProtocolError, "backend returned " + std::to_string(p) + ", outside [0,1]");
  return p;
}

std::unique_ptr<Backend> make_backend(const std::string& spec, ExternalBackendOptions options) {
  if (spec == "dsp") return std::make_unique<DspBackend>();
  return std::make_unique<ExternalBackend>(ExternalEndpoint::parse(spec), options);
}

}  // namespace sirenedge
