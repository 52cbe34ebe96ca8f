#include "sirenedge/telemetry.hpp"

#include <deque>
#include <mutex>
#include <set>
#include <thread>

#include <boost/asio/executor_work_guard.hpp>
#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/post.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "sirenedge/error.hpp"
#include "sirenedge/framing.hpp"
#include "sirenedge/wav.hpp"

namespace sirenedge {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using asio::ip::tcp;
using nlohmann::json;

std::pair<std::string, std::uint16_t> parse_listen_address(const std::string& address) {
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == address.size())
    throw Error(ErrorCode::ConfigError, "listen address must be HOST:PORT, got '" + address + "'");
  int port = 0;
  try {
    std::size_t used = 0;
    port = std::stoi(address.substr(colon + 1), &used);
    if (used != address.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw Error(ErrorCode::ConfigError, "bad port in '" + address + "'");
  }
  if (port < 0 || port > 65535) throw Error(ErrorCode::ConfigError, "port out of range in '" + address + "'");
  return {address.substr(0, colon), static_cast<std::uint16_t>(port)};
}

namespace {

json nack(const std::string& msg) { return {{"ok", false}, {"msg", msg}}; }

bool probability_value(const json& cmd, double& out) {
  if (!cmd.contains("value") || !cmd["value"].is_number()) return false;
  out = cmd["value"].get<double>();
  return true;
}

}  // namespace

json apply_command(Session& session, const json& cmd) {
  if (!cmd.is_object() || !cmd.contains("cmd") || !cmd["cmd"].is_string()) return nack("command must be an object with a string \"cmd\"");
  const auto name = cmd["cmd"].get<std::string>();
  try {
    double value = 0.0;
    if (name == "set_decision_threshold" || name == "set_growth_threshold" || name == "set_growth_step") {
      if (!probability_value(cmd, value)) return nack(name + " needs a numeric \"value\"");
      if (name == "set_decision_threshold")
        session.set_decision_threshold(value);
      else if (name == "set_growth_threshold")
        session.set_growth_threshold(value);
      else
        session.set_growth_step(value);
      return {{"ok", true}, {"cmd", name}, {"value", value}};
    }
    if (name == "start") {
      session.start_producer();
      return {{"ok", true}, {"cmd", name}};
    }
    if (name == "stop") {
      session.stop_producer();
      return {{"ok", true}, {"cmd", name}};
    }
    if (name == "load_clip") {
      if (!cmd.contains("path") || !cmd["path"].is_string()) return nack("load_clip needs a string \"path\"");
      AudioClip clip = load_wav(cmd["path"].get<std::string>());
      if (clip.sample_rate_hz != session.sample_rate_hz()) clip = resample_linear(clip, session.sample_rate_hz());
      if (!session.load_clip(std::move(clip))) return nack("the session source does not accept clips");
      return {{"ok", true}, {"cmd", name}, {"path", cmd["path"]}};
    }
  } catch (const Error& e) {
    return nack(e.what());
  }
  return nack("unknown command '" + name + "'");
}

struct TelemetryServer::Impl {
  class Client;
  using Message = std::shared_ptr<const std::string>;

  explicit Impl(TelemetryOptions opts) : options(std::move(opts)), acceptor(io), work(io.get_executor()) {
    const auto [host, port] = parse_listen_address(options.listen);
    boost::system::error_code ec;
    const auto address = asio::ip::make_address(host == "localhost" ? "127.0.0.1" : host, ec);
    if (ec) throw Error(ErrorCode::ConfigError, "bad listen host '" + host + "': " + ec.message());
    const tcp::endpoint endpoint(address, port);
    acceptor.open(endpoint.protocol(), ec);
    if (!ec) acceptor.set_option(asio::socket_base::reuse_address(true), ec);
    if (!ec) acceptor.bind(endpoint, ec);
    if (!ec) acceptor.listen(asio::socket_base::max_listen_connections, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot listen on " + options.listen + ": " + ec.message());
    bound_port = acceptor.local_endpoint().port();
    do_accept();
    thread = std::thread([this] { io.run(); });
  }

  ~Impl() { stop(); }

  void stop();
  void do_accept();
  void publish(std::string message);
  void drain();
  std::string handle_command(const std::string& text);

  TelemetryOptions options;
  asio::io_context io;
  tcp::acceptor acceptor;
  asio::executor_work_guard<asio::io_context::executor_type> work;
  std::thread thread;
  std::uint16_t bound_port = 0;
  std::atomic<bool> stopped{false};

  // Touched only on the io thread.
  std::set<std::shared_ptr<Client>> clients;

  std::mutex queue_mutex;
  std::deque<std::string> pending;
  bool drain_posted = false;

  std::atomic<Session*> session{nullptr};
  std::atomic<std::size_t> n_clients{0};
  std::atomic<std::uint64_t> dropped{0};
  std::atomic<std::uint64_t> disconnected{0};
};

class TelemetryServer::Impl::Client : public std::enable_shared_from_this<Client> {
 public:
  Client(Impl& server, tcp::socket socket) : server_(server), ws_(std::move(socket)) {}

  void start(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->server_.clients.insert(self);
      self->server_.n_clients = self->server_.clients.size();
      self->do_read();
    });
  }

  void send(Message msg) {
    if (closed_) return;
    if (queue_.size() >= server_.options.client_queue) {
      ++server_.disconnected;
      drop();
      return;
    }
    queue_.push_back(std::move(msg));
    if (!writing_) do_write();
  }

  void close() {
    closed_ = true;
    boost::system::error_code ignored;
    beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ignored);
    beast::get_lowest_layer(ws_).socket().close(ignored);
  }

 private:
  void drop() {
    close();
    server_.clients.erase(shared_from_this());
    server_.n_clients = server_.clients.size();
  }

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        if (!self->closed_) self->drop();
        return;
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->send(std::make_shared<const std::string>(self->server_.handle_command(text)));
      if (!self->closed_) self->do_read();
    });
  }

  void do_write() {
    writing_ = true;
    ws_.text(true);
    ws_.async_write(asio::buffer(*queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        if (!self->closed_) self->drop();
        return;
      }
      self->queue_.pop_front();
      if (self->queue_.empty() || self->closed_)
        self->writing_ = false;
      else
        self->do_write();
    });
  }

  Impl& server_;
  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  std::deque<Message> queue_;
  bool writing_ = false;
  bool closed_ = false;
};

namespace {

// Reads one HTTP request and either upgrades it to a WebSocket client or
// answers it directly.
class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, std::function<void(tcp::socket, http::request<http::string_body>)> upgrade)
      : stream_(std::move(socket)), upgrade_(std::move(upgrade)) {}

  void start() {
    stream_.expires_after(std::chrono::seconds(10));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (!ec) self->route();
    });
  }

 private:
  void route() {
    stream_.expires_never();
    if (websocket::is_upgrade(req_) && req_.target() == "/ws") {
      upgrade_(stream_.release_socket(), std::move(req_));
      return;
    }
    auto res = std::make_shared<http::response<http::string_body>>();
    res->version(req_.version());
    res->keep_alive(false);
    res->set(http::field::content_type, "application/json");
    if (req_.method() == http::verb::get && req_.target() == "/healthz") {
      res->result(http::status::ok);
      res->body() = R"({"status":"ok"})";
    } else {
      res->result(http::status::not_found);
      res->body() = R"({"error":"not found"})";
    }
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      boost::system::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  std::function<void(tcp::socket, http::request<http::string_body>)> upgrade_;
};

}  // namespace

void TelemetryServer::Impl::stop() {
  if (stopped.exchange(true)) return;
  asio::post(io, [this] {
    boost::system::error_code ignored;
    acceptor.close(ignored);
    for (const auto& c : clients) c->close();
    clients.clear();
    n_clients = 0;
    work.reset();
  });
  if (thread.joinable()) thread.join();
}

void TelemetryServer::Impl::do_accept() {
  acceptor.async_accept([this](boost::system::error_code ec, tcp::socket socket) {
    if (ec) {
      if (ec == asio::error::operation_aborted || !acceptor.is_open()) return;
      do_accept();
      return;
    }
    if (options.socket_send_buffer > 0) {
      boost::system::error_code ignored;
      socket.set_option(asio::socket_base::send_buffer_size(options.socket_send_buffer), ignored);
    }
    std::make_shared<HttpSession>(std::move(socket), [this](tcp::socket s, http::request<http::string_body> req) {
      std::make_shared<Client>(*this, std::move(s))->start(std::move(req));
    })->start();
    do_accept();
  });
}

void TelemetryServer::Impl::publish(std::string message) {
  std::lock_guard lock(queue_mutex);
  if (pending.size() >= options.hub_queue) {
    ++dropped;
    return;
  }
  pending.push_back(std::move(message));
  if (!drain_posted && !stopped.load()) {
    drain_posted = true;
    asio::post(io, [this] { drain(); });
  }
}

void TelemetryServer::Impl::drain() {
  std::deque<std::string> batch;
  {
    std::lock_guard lock(queue_mutex);
    batch.swap(pending);
    drain_posted = false;
  }
  for (auto& text : batch) {
    const auto msg = std::make_shared<const std::string>(std::move(text));
    // Copy: a client may disconnect (and leave the set) while being served.
    const auto targets = clients;
    for (const auto& c : targets) c->send(msg);
  }
}

std::string TelemetryServer::Impl::handle_command(const std::string& text) {
  json cmd;
  try {
    cmd = json::parse(text);
  } catch (const json::exception& e) {
    return nack(std::string("malformed JSON: ") + e.what()).dump();
  }
  Session* s = session.load();
  if (!s) return nack("no session attached").dump();
  return apply_command(*s, cmd).dump();
}

TelemetryServer::TelemetryServer(TelemetryOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}

TelemetryServer::~TelemetryServer() = default;

void TelemetryServer::publish(std::string message) { impl_->publish(std::move(message)); }
void TelemetryServer::attach(Session* session) { impl_->session = session; }
std::uint16_t TelemetryServer::port() const { return impl_->bound_port; }
std::size_t TelemetryServer::client_count() const { return impl_->n_clients.load(); }
std::uint64_t TelemetryServer::dropped_messages() const { return impl_->dropped.load(); }
std::uint64_t TelemetryServer::disconnected_clients() const { return impl_->disconnected.load(); }
void TelemetryServer::stop() { impl_->stop(); }

}  // namespace sirenedge
