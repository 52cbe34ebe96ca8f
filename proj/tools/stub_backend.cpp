// Test backend speaking the sirenedge wire protocol on stdin/stdout or TCP.
//
//   request:  u32 N, then N float32 (little-endian)
//   response: one float32
//
// Frames shorter than --min get NaN (an invalid output); otherwise the
// reply is --value, or with --checksum a hash of the payload mapped into
// [0,1) so a caller can verify the frame arrived bit-for-bit.

#include <unistd.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <thread>
#include <vector>

#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/read.hpp>
#include <boost/asio/write.hpp>

#include "CLI11.hpp"
#include "sirenedge/wire.hpp"

namespace {

struct StubOptions {
  std::uint32_t min_samples = 1;
  double value = 0.5;
  bool checksum = false;
  bool never_valid = false;
  int sleep_ms = 0;
};

float fnv1a_unit(const std::vector<std::byte>& bytes) {
  std::uint32_t h = 2166136261u;
  for (std::byte b : bytes) {
    h ^= std::to_integer<std::uint32_t>(b);
    h *= 16777619u;
  }
  return static_cast<float>(static_cast<double>(h >> 8) / 16777216.0);
}

float respond(const StubOptions& o, std::uint32_t n, const std::vector<std::byte>& payload) {
  if (o.sleep_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(o.sleep_ms));
  if (o.never_valid || n < o.min_samples) return std::numeric_limits<float>::quiet_NaN();
  if (o.checksum) return fnv1a_unit(payload);
  return static_cast<float>(o.value);
}

bool read_full(int fd, void* buf, std::size_t n) {
  auto* p = static_cast<char*>(buf);
  while (n > 0) {
    const ssize_t got = ::read(fd, p, n);
    if (got <= 0) return false;
    p += got;
    n -= static_cast<std::size_t>(got);
  }
  return true;
}

bool write_full(int fd, const void* buf, std::size_t n) {
  const auto* p = static_cast<const char*>(buf);
  while (n > 0) {
    const ssize_t put = ::write(fd, p, n);
    if (put <= 0) return false;
    p += put;
    n -= static_cast<std::size_t>(put);
  }
  return true;
}

int serve_stdio(const StubOptions& o) {
  std::array<std::byte, 4> prefix;
  std::vector<std::byte> payload;
  while (read_full(STDIN_FILENO, prefix.data(), prefix.size())) {
    const std::uint32_t n = sirenedge::wire::decode_length(prefix);
    payload.resize(4 * static_cast<std::size_t>(n));
    if (!read_full(STDIN_FILENO, payload.data(), payload.size())) return 1;
    const auto reply = sirenedge::wire::encode_response(respond(o, n, payload));
    if (!write_full(STDOUT_FILENO, reply.data(), reply.size())) return 1;
  }
  return 0;
}

int serve_tcp(const StubOptions& o, std::uint16_t port, const std::string& port_file) {
  namespace asio = boost::asio;
  using asio::ip::tcp;
  asio::io_context io;
  tcp::acceptor acceptor(io, tcp::endpoint(asio::ip::make_address("127.0.0.1"), port));
  if (!port_file.empty()) {
    // Written to a temporary name first so readers never see a partial file.
    const std::string tmp = port_file + ".tmp";
    std::ofstream(tmp) << acceptor.local_endpoint().port() << "\n";
    std::rename(tmp.c_str(), port_file.c_str());
  }
  for (;;) {
    tcp::socket socket(io);
    acceptor.accept(socket);
    boost::system::error_code ec;
    std::array<std::byte, 4> prefix;
    std::vector<std::byte> payload;
    while (asio::read(socket, asio::buffer(prefix), ec), !ec) {
      const std::uint32_t n = sirenedge::wire::decode_length(prefix);
      payload.resize(4 * static_cast<std::size_t>(n));
      asio::read(socket, asio::buffer(payload), ec);
      if (ec) break;
      const auto reply = sirenedge::wire::encode_response(respond(o, n, payload));
      asio::write(socket, asio::buffer(reply), ec);
      if (ec) break;
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sirenedge wire-protocol test backend"};
  StubOptions o;
  int tcp_port = -1;
  std::string port_file;
  app.add_option("--min", o.min_samples, "frames shorter than this get a NaN reply");
  app.add_option("--value", o.value, "probability returned for valid frames");
  app.add_flag("--checksum", o.checksum, "reply with a payload hash in [0,1) instead of --value");
  app.add_flag("--never-valid", o.never_valid, "reply NaN to every frame");
  app.add_option("--sleep-ms", o.sleep_ms, "delay before every reply");
  app.add_option("--tcp", tcp_port, "serve on 127.0.0.1:PORT instead of stdin/stdout (0 = any free port)");
  app.add_option("--port-file", port_file, "with --tcp, write the bound port here");
  CLI11_PARSE(app, argc, argv);
  if (tcp_port >= 0) return serve_tcp(o, static_cast<std::uint16_t>(tcp_port), port_file);
  return serve_stdio(o);
}
