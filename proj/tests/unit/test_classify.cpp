#include <gtest/gtest.h>

#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <thread>

#include "sirenedge/classify.hpp"
#include "sirenedge/error.hpp"
#include "sirenedge/synth.hpp"
#include "sirenedge/wire.hpp"
#include "support.hpp"

using namespace sirenedge;
using namespace sirenedge::testing;
using namespace std::chrono_literals;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::ParseError;
}

std::vector<float> sine(double hz, std::size_t n, int rate = 32000, double amp = 0.5) {
  std::vector<float> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(amp * std::sin(2 * std::numbers::pi * hz * i / rate));
  return out;
}

std::vector<float> random_frame(std::mt19937_64& rng, std::size_t n) {
  std::vector<float> out(n);
  // Arbitrary bit patterns, NaN and infinities included, minus signalling
  // NaNs whose quiet bit could be set in transit.
  for (auto& x : out) {
    std::uint32_t bits = static_cast<std::uint32_t>(rng());
    if ((bits & 0x7F800000u) == 0x7F800000u && (bits & 0x007FFFFFu) != 0) bits |= 0x00400000u;
    x = std::bit_cast<float>(bits);
  }
  return out;
}

}  // namespace

TEST(Dsp, SilenceScoresZero) {
  DspBackend dsp;
  EXPECT_EQ(dsp.score(std::vector<float>(32000, 0.0f)), 0.0);
  EXPECT_EQ(dsp.min_input_samples(), 2048u);
}

TEST(Dsp, ShortFrameIsRejected) {
  DspBackend dsp;
  EXPECT_EQ(code_of([&] { dsp.score(std::vector<float>(2047, 0.1f)); }), ErrorCode::InputTooShort);
}

TEST(Dsp, YelpAtPlus20dBScoresHigh) {
  for (std::uint64_t seed : {1, 2, 3}) {
    SceneSpec spec;
    spec.siren = SirenSpec::yelp(1.0, seed);
    spec.lead_s = spec.tail_s = 0.0;
    spec.snr_db = 20.0;
    spec.noise_seed = seed + 100;
    const Scene s = compose_scene(spec);
    DspBackend dsp;
    EXPECT_GE(dsp.score(s.clip.samples), 0.8) << "seed " << seed;
  }
}

TEST(Dsp, WailScoresHigh) {
  const AudioClip c = synth_siren(SirenSpec::wail(10.0, 4));
  DspBackend dsp;
  EXPECT_GE(dsp.score(c.samples), 0.8);
}

TEST(Dsp, SteadyToneScoresLow) {
  DspBackend dsp;
  EXPECT_LE(dsp.score(sine(1000.0, 32000)), 0.3);
}

TEST(Dsp, WhiteNoiseStaysBelowThreshold) {
  DspBackend dsp;
  int below = 0;
  double ratio_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const AudioClip n = white_noise(1.0, 32000, seed);
    if (dsp.score(n.samples) < 0.5) ++below;
    DspDetectorConfig wide;
    wide.mod_depth_min_hz = 1e-9;  // modulation term saturates, leaving the band ratio
    ratio_sum += dsp_reference_score(wide, n.samples);
  }
  EXPECT_GE(below, 95);
  EXPECT_NEAR(ratio_sum / 100.0, 1500.0 / 16000.0, 0.02);
}

TEST(Dsp, BitwiseDeterministic) {
  const AudioClip c = synth_siren(SirenSpec::yelp(1.0, 9));
  DspBackend a, b;
  const double first = a.score(c.samples);
  EXPECT_EQ(std::bit_cast<std::uint64_t>(first), std::bit_cast<std::uint64_t>(a.score(c.samples)));
  EXPECT_EQ(std::bit_cast<std::uint64_t>(first), std::bit_cast<std::uint64_t>(b.score(c.samples)));
}

TEST(Dsp, InvalidConfigIsRejected) {
  DspDetectorConfig cfg;
  cfg.fft_size = 1000;
  EXPECT_EQ(code_of([&] { DspBackend b(cfg); }), ErrorCode::ConfigError);
  cfg = {};
  cfg.band_high_hz = 20000.0;
  EXPECT_EQ(code_of([&] { DspBackend b(cfg); }), ErrorCode::ConfigError);
}

TEST(Wire, RandomFramesRoundTripBitExact) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 10000; ++i) {
    const auto frame = random_frame(rng, rng() % 64);
    const auto bytes = wire::encode_request(frame);
    ASSERT_EQ(bytes.size(), 4 + 4 * frame.size());
    const auto back = wire::decode_request(bytes);
    ASSERT_EQ(back.size(), frame.size());
    for (std::size_t k = 0; k < frame.size(); ++k)
      ASSERT_EQ(std::bit_cast<std::uint32_t>(back[k]), std::bit_cast<std::uint32_t>(frame[k]));
  }
}

TEST(Wire, LittleEndianLayout) {
  const auto bytes = wire::encode_request(std::vector<float>{1.0f});
  const std::vector<std::byte> expected{std::byte{1}, std::byte{0}, std::byte{0}, std::byte{0},
                                        std::byte{0}, std::byte{0}, std::byte{0x80}, std::byte{0x3F}};
  EXPECT_EQ(bytes, expected);
  EXPECT_EQ(wire::decode_response(wire::encode_response(0.25f)), 0.25f);
}

TEST(Wire, MalformedMessagesAreProtocolErrors) {
  auto bytes = wire::encode_request(std::vector<float>{1.0f, 2.0f});
  bytes.pop_back();
  EXPECT_EQ(code_of([&] { wire::decode_request(bytes); }), ErrorCode::ProtocolError);
  EXPECT_EQ(code_of([] { wire::decode_response(std::vector<std::byte>(3)); }), ErrorCode::ProtocolError);
}

TEST(Endpoint, ParsesSpecs) {
  auto p = ExternalEndpoint::parse("external:python3 model.py --x");
  EXPECT_EQ(p.kind, ExternalEndpoint::Kind::Process);
  EXPECT_EQ(p.target, "python3 model.py --x");
  auto t = ExternalEndpoint::parse("tcp:127.0.0.1:9000");
  EXPECT_EQ(t.kind, ExternalEndpoint::Kind::Tcp);
  EXPECT_EQ(t.target, "127.0.0.1:9000");
  EXPECT_EQ(code_of([] { ExternalEndpoint::parse("onnx:model"); }), ErrorCode::ConfigError);
}

TEST(External, EchoStubReturnsItsValue) {
  ExternalBackend b(ExternalEndpoint::parse(stub_command("--value 0.5")));
  EXPECT_EQ(b.score(std::vector<float>(100, 0.1f)), 0.5);
}

TEST(External, OutOfRangeReplyIsProtocolError) {
  ExternalBackend b(ExternalEndpoint::parse(stub_command("--value 1.5")));
  EXPECT_EQ(code_of([&] { b.score(std::vector<float>(100, 0.1f)); }), ErrorCode::ProtocolError);
}

TEST(External, NanReplyIsProtocolError) {
  ExternalBackend b(ExternalEndpoint::parse(stub_command("--never-valid")));
  EXPECT_EQ(code_of([&] { b.score(std::vector<float>(100, 0.1f)); }), ErrorCode::ProtocolError);
}

TEST(External, SlowStubTimesOut) {
  ExternalBackendOptions o;
  o.timeout = 300ms;
  ExternalBackend b(ExternalEndpoint::parse(stub_command("--sleep-ms 5000")), o);
  const auto t0 = std::chrono::steady_clock::now();
  EXPECT_EQ(code_of([&] { b.score(std::vector<float>(10, 0.0f)); }), ErrorCode::BackendTimeout);
  EXPECT_LT(std::chrono::steady_clock::now() - t0, 2s);
}

TEST(External, DeadCommandIsBackendError) {
  ExternalBackend b(ExternalEndpoint::parse("external:/nonexistent/model-binary"));
  const ErrorCode c = code_of([&] { b.score(std::vector<float>(10, 0.0f)); });
  EXPECT_TRUE(c == ErrorCode::BackendError || c == ErrorCode::ProtocolError) << to_string(c);
}

TEST(External, MinInputFromStub) {
  ExternalBackend paper(ExternalEndpoint::parse(stub_command("--min 9919")));
  EXPECT_EQ(paper.min_input_samples(), 9919u);
  EXPECT_LE(paper.probes_used(), 19u);
  ExternalBackend always(ExternalEndpoint::parse(stub_command()));
  EXPECT_EQ(always.min_input_samples(), 1u);
  ExternalBackend never(ExternalEndpoint::parse(stub_command("--never-valid")));
  EXPECT_EQ(code_of([&] { never.min_input_samples(); }), ErrorCode::NoValidSize);
}

TEST(External, FrameBelowMinimumIsRejectedLocally) {
  ExternalBackend b(ExternalEndpoint::parse(stub_command("--min 100")));
  EXPECT_EQ(b.min_input_samples(), 100u);
  EXPECT_EQ(code_of([&] { b.score(std::vector<float>(99, 0.0f)); }), ErrorCode::InputTooShort);
  EXPECT_EQ(b.score(std::vector<float>(100, 0.0f)), 0.5);
}

TEST(External, ChecksumStubConfirmsLosslessTransfer) {
  // The stub hashes the payload bytes; the same hash computed here over the
  // frame we sent must come back.
  auto fnv = [](const std::vector<float>& f) {
    std::uint32_t h = 2166136261u;
    for (float x : f) {
      const auto bits = std::bit_cast<std::uint32_t>(x);
      for (int i = 0; i < 4; ++i) {
        h ^= (bits >> (8 * i)) & 0xFFu;
        h *= 16777619u;
      }
    }
    return static_cast<float>(static_cast<double>(h >> 8) / 16777216.0);
  };
  ExternalBackend b(ExternalEndpoint::parse(stub_command("--checksum")));
  std::mt19937_64 rng(123);
  for (int i = 0; i < 200; ++i) {
    const auto frame = random_frame(rng, 1 + rng() % 4096);
    ASSERT_EQ(b.exchange(frame), fnv(frame));
  }
}

TEST(External, TcpEndpoint) {
  TempDir dir;
  const auto port_file = dir / "port";
  const std::string cmd = kStubPath + " --value 0.25 --tcp 0 --port-file " + port_file.string() + " >/dev/null 2>&1 & echo $!";
  const auto launched = run_command(cmd);
  const int pid = std::stoi(launched.out);
  std::string port;
  for (int i = 0; i < 200 && port.empty(); ++i) {
    std::this_thread::sleep_for(10ms);
    std::ifstream(port_file) >> port;
  }
  ASSERT_FALSE(port.empty());
  {
    ExternalBackend b(ExternalEndpoint::parse("tcp:127.0.0.1:" + port));
    EXPECT_EQ(b.score(std::vector<float>(50, 0.0f)), 0.25);
    EXPECT_EQ(b.score(std::vector<float>(5000, 0.3f)), 0.25);
  }
  run_command("kill " + std::to_string(pid));
}

TEST(External, UnreachableTcpIsBackendError) {
  ExternalBackendOptions o;
  o.timeout = 500ms;
  ExternalBackend b(ExternalEndpoint::parse("tcp:127.0.0.1:1"), o);
  EXPECT_EQ(code_of([&] { b.score(std::vector<float>(10, 0.0f)); }), ErrorCode::BackendError);
}
