#include <gtest/gtest.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <thread>

#include "json.hpp"
#include "sirenedge/classify.hpp"
#include "sirenedge/engine.hpp"
#include "sirenedge/error.hpp"
#include "sirenedge/synth.hpp"
#include "sirenedge/telemetry.hpp"
#include "sirenedge/wav.hpp"
#include "support.hpp"

using namespace sirenedge;
using namespace std::chrono_literals;
using nlohmann::json;
namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

TelemetryOptions any_port() {
  TelemetryOptions o;
  o.listen = "127.0.0.1:0";
  return o;
}

class WsClient {
 public:
  explicit WsClient(std::uint16_t port, int receive_buffer = 0) : ws_(io_) {
    auto& sock = ws_.next_layer();
    sock.open(tcp::v4());
    if (receive_buffer > 0) sock.set_option(asio::socket_base::receive_buffer_size(receive_buffer));
    sock.connect(tcp::endpoint(asio::ip::make_address("127.0.0.1"), port));
    ws_.handshake("127.0.0.1", "/ws");
  }

  json read() {
    beast::flat_buffer buf;
    ws_.read(buf);
    return json::parse(beast::buffers_to_string(buf.data()));
  }

  void send(const json& j) { ws_.write(asio::buffer(j.dump())); }

 private:
  asio::io_context io_;
  websocket::stream<tcp::socket> ws_;
};

// Forwards to the server and keeps a copy of everything published.
class TeeSink : public TelemetrySink {
 public:
  explicit TeeSink(TelemetrySink& inner) : inner_(inner) {}
  void publish(std::string m) override {
    {
      std::lock_guard lock(mutex_);
      sent_.push_back(m);
    }
    inner_.publish(std::move(m));
  }
  std::vector<std::string> sent() const {
    std::lock_guard lock(mutex_);
    return sent_;
  }

 private:
  TelemetrySink& inner_;
  mutable std::mutex mutex_;
  std::vector<std::string> sent_;
};

void wait_for_clients(const TelemetryServer& s, std::size_t n) {
  for (int i = 0; i < 500 && s.client_count() < n; ++i) std::this_thread::sleep_for(2ms);
  ASSERT_EQ(s.client_count(), n);
}

AudioClip scene_clip(std::uint64_t seed) {
  SceneSpec spec;
  spec.siren = SirenSpec::yelp(4.0, seed);
  return compose_scene(spec).clip;
}

std::string http_get(std::uint16_t port, const std::string& target, int& status) {
  asio::io_context io;
  beast::tcp_stream stream(io);
  stream.connect(tcp::endpoint(asio::ip::make_address("127.0.0.1"), port));
  http::request<http::empty_body> req{http::verb::get, target, 11};
  req.set(http::field::host, "127.0.0.1");
  http::write(stream, req);
  beast::flat_buffer buf;
  http::response<http::string_body> res;
  http::read(stream, buf, res);
  status = static_cast<int>(res.result_int());
  return res.body();
}

}  // namespace

TEST(ListenAddress, Parsing) {
  EXPECT_EQ(parse_listen_address("127.0.0.1:8765"), (std::pair<std::string, std::uint16_t>{"127.0.0.1", 8765}));
  EXPECT_EQ(parse_listen_address("localhost:0").second, 0);
  EXPECT_THROW(parse_listen_address("127.0.0.1"), Error);
  EXPECT_THROW(parse_listen_address("127.0.0.1:99999"), Error);
  EXPECT_THROW(parse_listen_address("host:abc"), Error);
}

TEST(Telemetry, HealthEndpointAndNotFound) {
  TelemetryServer server(any_port());
  int status = 0;
  EXPECT_EQ(json::parse(http_get(server.port(), "/healthz", status)), json({{"status", "ok"}}));
  EXPECT_EQ(status, 200);
  http_get(server.port(), "/nope", status);
  EXPECT_EQ(status, 404);
}

TEST(Telemetry, PortInUseIsIoError) {
  TelemetryServer first(any_port());
  TelemetryOptions o;
  o.listen = "127.0.0.1:" + std::to_string(first.port());
  try {
    TelemetryServer second(o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}

TEST(Telemetry, NoClientsLeavesEngineUnaffected) {
  const auto clip = scene_clip(1);
  DspBackend a, b;
  const auto plain = run_session(SessionConfig{}, clip, a);
  TelemetryServer server(any_port());
  const auto served = run_session(SessionConfig{}, clip, b, &server);
  EXPECT_EQ(served.records, plain.records);
  EXPECT_EQ(served.events, plain.events);
}

TEST(Telemetry, TwoClientsReceiveIdenticalOrderedStreams) {
  TelemetryServer server(any_port());
  WsClient c1(server.port()), c2(server.port());
  wait_for_clients(server, 2);
  TeeSink tee(server);
  DspBackend dsp;
  const auto result = run_session(SessionConfig{}, scene_clip(2), dsp, &tee);
  const auto sent = tee.sent();
  ASSERT_GT(sent.size(), result.records.size());
  for (const auto& expected : sent) {
    const json want = json::parse(expected);
    ASSERT_EQ(c1.read(), want);
    ASSERT_EQ(c2.read(), want);
  }
  EXPECT_EQ(server.disconnected_clients(), 0u);
}

TEST(Telemetry, StalledClientIsDroppedWithoutAffectingTheEngine) {
  TelemetryOptions o = any_port();
  o.socket_send_buffer = 4096;
  o.client_queue = 256;
  TelemetryServer server(o);
  WsClient stalled(server.port(), 4096);
  WsClient reader(server.port());
  wait_for_clients(server, 2);

  std::atomic<bool> reading{true};
  std::atomic<std::size_t> received{0};
  std::thread drain([&] {
    try {
      while (reading) {
        reader.read();
        ++received;
      }
    } catch (const std::exception&) {
    }
  });
  // Bursts stay well inside the healthy client's queue; the stalled client
  // stops draining after a few kilobytes and its queue overflows.
  const std::string padding(200, 'x');
  for (int i = 0; i < 20000; ++i) {
    server.publish(json{{"type", "score"}, {"i", i}, {"pad", padding}}.dump());
    if (i % 50 == 49) std::this_thread::sleep_for(3ms);
  }
  for (int i = 0; i < 1000 && server.disconnected_clients() == 0; ++i) std::this_thread::sleep_for(5ms);
  EXPECT_EQ(server.disconnected_clients(), 1u);
  for (int i = 0; i < 1000 && received < 20000; ++i) std::this_thread::sleep_for(5ms);
  EXPECT_EQ(received.load(), 20000u);  // the healthy client got everything
  EXPECT_EQ(server.client_count(), 1u);

  // A session publishing through the same server still produces the same records.
  const auto clip = scene_clip(3);
  DspBackend a, b;
  const auto plain = run_session(SessionConfig{}, clip, a);
  const auto served = run_session(SessionConfig{}, clip, b, &server);
  EXPECT_EQ(served.records.size(), plain.records.size());
  reading = false;
  server.stop();
  drain.join();
}

TEST(Telemetry, FourIdleClientsCostUnderFivePercent) {
  // Measured on paced (live) sessions, where the realtime factor is the
  // engine keeping up with the stream.
  SceneSpec spec;
  spec.siren = SirenSpec::wail(3.0, 5);
  spec.lead_s = 1.0;
  spec.tail_s = 1.0;
  const auto clip = compose_scene(spec).clip;
  SessionConfig cfg;
  cfg.realtime = true;
  auto rtf = [&](TelemetrySink* sink) {
    DspBackend dsp;
    const auto r = run_session(cfg, clip, dsp, sink);
    EXPECT_EQ(r.frames_succeeded, r.frames_attempted);
    return r.realtime_factor;
  };
  const double bare = rtf(nullptr);

  TelemetryServer server(any_port());
  std::vector<std::unique_ptr<WsClient>> clients;
  for (int i = 0; i < 4; ++i) clients.push_back(std::make_unique<WsClient>(server.port()));
  wait_for_clients(server, 4);
  std::vector<std::thread> readers;
  for (auto& c : clients)
    readers.emplace_back([&c] {
      try {
        for (;;) c->read();
      } catch (const std::exception&) {
      }
    });
  const double served = rtf(&server);
  server.stop();
  for (auto& t : readers) t.join();
  EXPECT_EQ(server.disconnected_clients(), 0u);
  EXPECT_GT(served, 0.95 * bare) << "bare " << bare << " served " << served;
}

TEST(Telemetry, CommandsWithoutSessionAreRejected) {
  TelemetryServer server(any_port());
  WsClient c(server.port());
  c.send({{"cmd", "set_decision_threshold"}, {"value", 0.7}});
  const json ack = c.read();
  EXPECT_EQ(ack["ok"], false);
  EXPECT_EQ(ack["msg"], "no session attached");
}

TEST(Telemetry, ApplyCommandValidation) {
  ConstantBackend b(0.1);
  Session s(SessionConfig{}, std::make_shared<ClipSource>(AudioClip{std::vector<float>(32000, 0.0f), 32000}), b);
  EXPECT_EQ(apply_command(s, {{"cmd", "set_decision_threshold"}, {"value", 1.5}})["ok"], false);
  EXPECT_EQ(apply_command(s, {{"cmd", "set_decision_threshold"}, {"value", "high"}})["ok"], false);
  EXPECT_EQ(apply_command(s, {{"cmd", "set_growth_step"}, {"value", -0.2}})["ok"], false);
  EXPECT_EQ(apply_command(s, {{"cmd", "launch"}})["ok"], false);
  EXPECT_EQ(apply_command(s, json::array())["ok"], false);
  EXPECT_EQ(apply_command(s, {{"cmd", "load_clip"}, {"path", "/nonexistent.wav"}})["ok"], false);
  const json ok = apply_command(s, {{"cmd", "set_decision_threshold"}, {"value", 0.7}});
  EXPECT_EQ(ok, json({{"ok", true}, {"cmd", "set_decision_threshold"}, {"value", 0.7}}));
  EXPECT_EQ(apply_command(s, {{"cmd", "set_growth_threshold"}, {"value", 0.8}})["ok"], true);
  EXPECT_EQ(apply_command(s, {{"cmd", "set_growth_step"}, {"value", 0.4}})["ok"], true);
  EXPECT_EQ(apply_command(s, {{"cmd", "stop"}})["ok"], true);
  EXPECT_EQ(apply_command(s, {{"cmd", "start"}})["ok"], true);
  // A clip at another rate is resampled to the session rate and accepted.
  sirenedge::testing::TempDir dir;
  const std::string path = (dir / "c.wav").string();
  write_wav(path, AudioClip{std::vector<float>(1000, 0.0f), 16000});
  EXPECT_EQ(apply_command(s, {{"cmd", "load_clip"}, {"path", path}}),
            json({{"ok", true}, {"cmd", "load_clip"}, {"path", path}}));
}

TEST(Telemetry, ThresholdCommandChangesSubsequentEvents) {
  const auto clip = scene_clip(4);
  SessionConfig at07;
  at07.decision.event_threshold = 0.7;
  DspBackend a, b;
  const auto expected = run_session(at07, clip, a);

  TelemetryServer server(any_port());
  Session s(SessionConfig{}, std::make_shared<ClipSource>(clip), b, &server);
  server.attach(&s);
  WsClient c(server.port());
  c.send({{"cmd", "set_decision_threshold"}, {"value", 0.7}});
  EXPECT_EQ(c.read()["ok"], true);
  c.send({{"cmd", "set_decision_threshold"}, {"value", 1.5}});
  EXPECT_EQ(c.read()["ok"], false);
  s.start();
  const auto got = s.wait();
  server.attach(nullptr);
  EXPECT_EQ(got.events, expected.events);
  EXPECT_EQ(got.records, expected.records);
}

TEST(Telemetry, StopStartOverTheWireKeepsDiagMonotone) {
  TelemetryServer server(any_port());
  ConstantBackend b(0.1);
  SessionConfig cfg;
  cfg.realtime = true;
  cfg.diag_every_frames = 1;
  Session s(cfg, std::make_shared<ClipSource>(AudioClip{std::vector<float>(3 * 32000, 0.0f), 32000}), b, &server);
  server.attach(&s);
  WsClient control(server.port());
  wait_for_clients(server, 1);
  s.start();
  std::this_thread::sleep_for(700ms);
  control.send({{"cmd", "stop"}});
  std::this_thread::sleep_for(500ms);
  control.send({{"cmd", "start"}});
  const auto result = s.wait();
  server.attach(nullptr);
  EXPECT_FALSE(result.error_code);

  std::uint64_t last = 0;
  int acks = 0, diags = 0;
  for (;;) {
    const json m = control.read();
    if (m.contains("ok")) {
      EXPECT_EQ(m["ok"], true);
      ++acks;
    } else if (m["type"] == "diag") {
      const auto total = m["frames_total"].get<std::uint64_t>();
      EXPECT_GE(total, last);
      last = total;
      ++diags;
      if (total == result.frames_attempted && acks == 2) break;
    }
  }
  EXPECT_EQ(acks, 2);
  EXPECT_GT(diags, 2);
}
