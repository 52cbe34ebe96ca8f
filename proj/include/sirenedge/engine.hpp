#pragma once

// Streaming detection session: a producer context feeds audio chunks into
// the ring buffer, a consumer context cuts adaptive-length frames at every
// hop tick, scores them, runs the event decision machine and emits
// telemetry.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "sirenedge/classify.hpp"
#include "sirenedge/core.hpp"
#include "sirenedge/error.hpp"

namespace sirenedge {

struct SessionConfig {
  FramePolicy frame_policy;
  DecisionConfig decision;
  int sample_rate_hz = kDefaultSampleRate;
  double buffer_capacity_s = 10.0;
  // true: the producer paces writes at the wall-clock rate.
  // false: simulation; producer and consumer run in lockstep, as fast as possible.
  bool realtime = false;
  double chunk_s = 0.1;
  std::size_t diag_every_frames = 10;

  std::size_t chunk_samples() const;
  void validate() const;
};

struct SessionResult {
  std::vector<InferenceRecord> records;
  std::vector<DetectionEvent> events;
  std::uint64_t frames_attempted = 0;
  std::uint64_t frames_succeeded = 0;
  double processed_audio_s = 0.0;
  double wall_s = 0.0;
  double realtime_factor = 0.0;
  std::optional<ErrorCode> error_code;
  std::string error;
};

// Live-capture style handle yielding sample chunks.
class SampleSource {
 public:
  virtual ~SampleSource() = default;
  virtual int sample_rate_hz() const = 0;
  // Fills up to out.size() samples; returns how many were produced.
  // Returning 0 means no data is currently available.
  virtual std::size_t read(std::span<float> out) = 0;
  virtual bool exhausted() const = 0;
  // Replaces whatever remains to be played. Returns false if unsupported.
  virtual bool load(AudioClip) { return false; }
};

// File-backed source. With hold_open the session keeps running after the
// clip ends and waits for another clip to be loaded.
class ClipSource final : public SampleSource {
 public:
  explicit ClipSource(AudioClip clip, bool hold_open = false);

  int sample_rate_hz() const override { return rate_; }
  std::size_t read(std::span<float> out) override;
  bool exhausted() const override;
  bool load(AudioClip clip) override;
  bool hold_open() const { return hold_open_; }

 private:
  mutable std::mutex mutex_;
  AudioClip clip_;
  std::size_t pos_ = 0;
  int rate_;
  bool hold_open_;
};

// Receiver of telemetry JSON messages. publish() must not block.
class TelemetrySink {
 public:
  virtual ~TelemetrySink() = default;
  virtual void publish(std::string message) = 0;
};

class Session {
 public:
  Session(SessionConfig cfg, std::shared_ptr<SampleSource> source, Backend& backend,
          TelemetrySink* telemetry = nullptr);
  ~Session();

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  // Validates configuration and launches the producer and consumer.
  void start();
  // Joins both contexts and returns the assembled result. Calling wait()
  // without start() returns an empty result.
  SessionResult wait();
  // Broadcast stop; idempotent and safe from any thread, before or after start.
  void shutdown();
  bool running() const { return running_.load(); }
  int sample_rate_hz() const { return cfg_.sample_rate_hz; }

  // Runtime controls. Parameter changes are queued and applied between frames.
  void set_decision_threshold(double value);
  void set_growth_threshold(double value);
  void set_growth_step(double seconds);
  // Pauses / resumes the producer.
  void stop_producer();
  void start_producer();
  bool load_clip(AudioClip clip);

  std::uint64_t frames_attempted() const { return attempted_.load(); }
  std::uint64_t frames_succeeded() const { return succeeded_.load(); }

 private:
  struct ParamUpdate {
    enum class Kind { DecisionThreshold, GrowthThreshold, GrowthStep } kind;
    double value;
  };

  void producer_loop();
  void consumer_loop();
  void publish(std::string message);
  void queue_update(ParamUpdate update);

  SessionConfig cfg_;
  std::shared_ptr<SampleSource> source_;
  Backend& backend_;
  TelemetrySink* telemetry_;

  struct Shared;
  std::unique_ptr<Shared> shared_;

  std::atomic<bool> stop_{false};
  std::atomic<bool> started_{false};
  std::atomic<bool> running_{false};
  std::atomic<std::uint64_t> attempted_{0};
  std::atomic<std::uint64_t> succeeded_{0};

  SessionResult result_;
  std::thread producer_;
  std::thread consumer_;
};

SessionResult run_session(const SessionConfig& cfg, const AudioClip& clip, Backend& backend,
                          TelemetrySink* telemetry = nullptr);

}  // namespace sirenedge
