#include <gtest/gtest.h>

#include <chrono>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "sirenedge/classify.hpp"
#include "sirenedge/engine.hpp"
#include "sirenedge/error.hpp"
#include "sirenedge/synth.hpp"

using namespace sirenedge;
using namespace std::chrono_literals;
using nlohmann::json;

namespace {

class RecordingSink : public TelemetrySink {
 public:
  void publish(std::string message) override {
    std::lock_guard lock(mutex_);
    messages_.push_back(json::parse(message));
  }
  std::vector<json> of_type(const std::string& type) const {
    std::lock_guard lock(mutex_);
    std::vector<json> out;
    for (const auto& m : messages_)
      if (m["type"] == type) out.push_back(m);
    return out;
  }

 private:
  mutable std::mutex mutex_;
  std::vector<json> messages_;
};

// Scores from a fixed script, then fails.
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::vector<double> script) : script_(std::move(script)) {}
  double score(std::span<const float>) override {
    if (next_ >= script_.size()) throw Error(ErrorCode::BackendError, "script exhausted");
    return script_[next_++];
  }
  std::size_t min_input_samples() override { return 1; }
  std::string name() const override { return "scripted"; }

 private:
  std::vector<double> script_;
  std::size_t next_ = 0;
};

AudioClip silence(double seconds, int rate = 32000) {
  AudioClip c;
  c.sample_rate_hz = rate;
  c.samples.assign(static_cast<std::size_t>(seconds * rate), 0.0f);
  return c;
}

Scene yelp_scene(std::uint64_t seed = 1) {
  SceneSpec spec;
  spec.siren = SirenSpec::yelp(4.0, seed);
  spec.lead_s = 3.0;
  spec.tail_s = 3.0;
  spec.snr_db = 20.0;
  spec.noise_seed = seed + 1;
  return compose_scene(spec);
}

}  // namespace

TEST(Engine, SilenceGivesNoEvents) {
  DspBackend dsp;
  const auto r = run_session(SessionConfig{}, silence(10.0), dsp);
  EXPECT_TRUE(r.events.empty());
  EXPECT_GT(r.frames_attempted, 0u);
  EXPECT_EQ(r.frames_succeeded, r.frames_attempted);
  EXPECT_FALSE(r.error_code);
  EXPECT_DOUBLE_EQ(r.processed_audio_s, 10.0);
}

TEST(Engine, YelpSceneGivesOneEventAtTheSiren) {
  DspBackend dsp;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto r = run_session(SessionConfig{}, yelp_scene(seed).clip, dsp);
    ASSERT_EQ(r.events.size(), 1u) << "seed " << seed;
    EXPECT_NEAR(r.events[0].onset_s, 3.0, 0.5);
    EXPECT_NEAR(r.events[0].offset_s, 7.0, 0.5);
  }
}

TEST(Engine, SimulationIsBitwiseDeterministic) {
  DspBackend a, b;
  SessionConfig cfg;
  cfg.frame_policy.growth_step_s = 0.2;
  const auto clip = yelp_scene(5).clip;
  const auto r1 = run_session(cfg, clip, a);
  const auto r2 = run_session(cfg, clip, b);
  EXPECT_EQ(r1.records, r2.records);
  EXPECT_EQ(r1.events, r2.events);
}

TEST(Engine, SimulationRecordSpacingIsExactlyOneHop) {
  ConstantBackend c(0.1);
  SessionConfig cfg;
  cfg.frame_policy.hop_samples = 3200;
  const auto r = run_session(cfg, silence(5.0), c);
  ASSERT_EQ(r.records.size(), 50u);
  for (std::size_t i = 0; i < r.records.size(); ++i) {
    EXPECT_NEAR(r.records[i].t_start_s, 0.1 * static_cast<double>(i), 1e-12);
    EXPECT_EQ(r.records[i].wall_latency_s, 0.0);
  }
}

TEST(Engine, FrameLengthsFollowGrowthPolicy) {
  SessionConfig cfg;
  cfg.frame_policy.growth_step_s = 0.4;
  cfg.frame_policy.max_frame_s = 3.0;
  cfg.buffer_capacity_s = 3.0;
  ConstantBackend high(0.9);
  const auto grown = run_session(cfg, silence(8.0), high);
  ASSERT_FALSE(grown.records.empty());
  for (std::size_t i = 0; i < grown.records.size(); ++i)
    ASSERT_EQ(grown.records[i].frame_len_samples, std::min<std::size_t>(9919 + 12800 * i, 96000));
  ConstantBackend low(0.2);
  for (const auto& rec : run_session(cfg, silence(8.0), low).records) ASSERT_EQ(rec.frame_len_samples, 9919u);
}

TEST(Engine, BackendErrorAbortsWithPartialResults) {
  ScriptedBackend b({0.1, 0.1, 0.1, 0.1, 0.1});
  RecordingSink sink;
  SessionConfig cfg;
  cfg.frame_policy.min_frame_samples = 3200;
  Session s(cfg, std::make_shared<ClipSource>(silence(5.0)), b, &sink);
  s.start();
  const auto r = s.wait();
  ASSERT_TRUE(r.error_code);
  EXPECT_EQ(*r.error_code, ErrorCode::BackendError);
  EXPECT_EQ(r.records.size(), 5u);
  EXPECT_EQ(sink.of_type("error").size(), 1u);
}

TEST(Engine, MinimumFrameBelowBackendMinimumIsRejected) {
  ConstantBackend b(0.5, 20000);
  Session s(SessionConfig{}, std::make_shared<ClipSource>(silence(1.0)), b);
  EXPECT_THROW(s.start(), Error);
}

TEST(Engine, SourceRateMustMatch) {
  ConstantBackend b(0.5);
  Session s(SessionConfig{}, std::make_shared<ClipSource>(silence(1.0, 16000)), b);
  EXPECT_THROW(s.start(), Error);
}

TEST(Engine, ShutdownBeforeStartGivesEmptyResult) {
  ConstantBackend b(0.5);
  Session s(SessionConfig{}, std::make_shared<ClipSource>(silence(5.0)), b);
  s.shutdown();
  s.shutdown();
  s.start();
  const auto r = s.wait();
  EXPECT_TRUE(r.records.empty());
  EXPECT_EQ(r.frames_attempted, 0u);
}

TEST(Engine, ShutdownMidClipJoinsQuickly) {
  ConstantBackend b(0.5);
  SessionConfig cfg;
  cfg.realtime = true;
  Session s(cfg, std::make_shared<ClipSource>(silence(30.0)), b);
  s.start();
  std::this_thread::sleep_for(1200ms);
  const auto t0 = std::chrono::steady_clock::now();
  s.shutdown();
  s.shutdown();
  const auto r = s.wait();
  EXPECT_LT(std::chrono::steady_clock::now() - t0, 500ms);
  EXPECT_FALSE(r.records.empty());
  EXPECT_LT(r.processed_audio_s, 5.0);
  EXPECT_FALSE(s.running());
}

TEST(Engine, RealtimeSessionKeepsUp) {
  ConstantBackend b(0.5);
  SessionConfig cfg;
  cfg.realtime = true;
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_session(cfg, silence(4.0), b);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_GT(wall, 3.5);  // paced, not simulated
  EXPECT_EQ(r.frames_succeeded, r.frames_attempted);
  EXPECT_GE(r.frames_attempted, 12u);
  EXPECT_GE(r.realtime_factor, 1.0);
}

TEST(Engine, TelemetryMirrorsRecordsAndEvents) {
  DspBackend dsp;
  RecordingSink sink;
  SessionConfig cfg;
  const auto r = run_session(cfg, yelp_scene(2).clip, dsp, &sink);
  const auto scores = sink.of_type("score");
  ASSERT_EQ(scores.size(), r.records.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    EXPECT_EQ(scores[i]["t"].get<double>(), r.records[i].t_start_s);
    EXPECT_EQ(scores[i]["p"].get<double>(), r.records[i].raw_p);
    EXPECT_EQ(scores[i]["smoothed"].get<double>(), r.records[i].smoothed_p);
  }
  const auto events = sink.of_type("event");
  ASSERT_EQ(events.size(), 2 * r.events.size());
  EXPECT_EQ(events[0]["state"], "onset");
  EXPECT_EQ(events[0]["t"].get<double>(), r.events[0].onset_s);
  EXPECT_EQ(events[1]["state"], "offset");
  const auto diags = sink.of_type("diag");
  ASSERT_FALSE(diags.empty());
  EXPECT_EQ(diags.back()["frames_total"].get<std::uint64_t>(), r.frames_attempted);
}

TEST(Engine, ThresholdUpdateBeforeStartMatchesConfiguredRun) {
  const auto clip = yelp_scene(3).clip;
  DspBackend a, b;
  SessionConfig cfg;
  SessionConfig configured = cfg;
  configured.decision.event_threshold = 0.95;
  const auto expected = run_session(configured, clip, a);

  Session s(cfg, std::make_shared<ClipSource>(clip), b);
  s.set_decision_threshold(0.95);
  s.start();
  const auto got = s.wait();
  EXPECT_EQ(got.events, expected.events);
  EXPECT_EQ(got.records, expected.records);
  EXPECT_THROW(s.set_decision_threshold(1.5), Error);
  EXPECT_THROW(s.set_growth_step(-1.0), Error);
}

TEST(Engine, StopAndStartKeepCountersMonotone) {
  ConstantBackend b(0.1);
  RecordingSink sink;
  SessionConfig cfg;
  cfg.realtime = true;
  cfg.diag_every_frames = 1;
  Session s(cfg, std::make_shared<ClipSource>(silence(3.0)), b, &sink);
  s.start();
  std::this_thread::sleep_for(800ms);
  s.stop_producer();
  const auto paused_at = s.frames_attempted();
  std::this_thread::sleep_for(600ms);
  EXPECT_LE(s.frames_attempted(), paused_at + 1);
  s.start_producer();
  const auto r = s.wait();
  EXPECT_FALSE(r.error_code);
  std::uint64_t last = 0;
  for (const auto& d : sink.of_type("diag")) {
    const auto total = d["frames_total"].get<std::uint64_t>();
    EXPECT_GE(total, last);
    last = total;
  }
  EXPECT_DOUBLE_EQ(r.processed_audio_s, 3.0);
}

TEST(Engine, HoldOpenSourceAcceptsNewClips) {
  ConstantBackend b(0.1);
  SessionConfig cfg;
  auto source = std::make_shared<ClipSource>(silence(1.0), true);
  Session s(cfg, source, b);
  s.start();
  std::this_thread::sleep_for(300ms);
  EXPECT_TRUE(s.running());
  EXPECT_TRUE(s.load_clip(silence(2.0)));
  std::this_thread::sleep_for(300ms);
  s.shutdown();
  const auto r = s.wait();
  EXPECT_DOUBLE_EQ(r.processed_audio_s, 3.0);
}
