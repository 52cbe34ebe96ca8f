#include "sirenedge/engine.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "sirenedge/decision.hpp"
#include "sirenedge/framing.hpp"
#include "sirenedge/ring_buffer.hpp"

namespace sirenedge {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

std::size_t SessionConfig::chunk_samples() const {
  return static_cast<std::size_t>(std::max<long long>(1, std::llround(chunk_s * sample_rate_hz)));
}

void SessionConfig::validate() const {
  frame_policy.validate(sample_rate_hz);
  decision.validate();
  if (!(chunk_s > 0.0)) throw Error(ErrorCode::ConfigError, "chunk_s must be positive");
  if (!(buffer_capacity_s >= frame_policy.max_frame_s))
    throw Error(ErrorCode::ConfigError, "buffer_capacity_s must be >= max_frame_s");
  if (diag_every_frames == 0) throw Error(ErrorCode::ConfigError, "diag_every_frames must be positive");
}

ClipSource::ClipSource(AudioClip clip, bool hold_open)
    : clip_(std::move(clip)), rate_(clip_.sample_rate_hz), hold_open_(hold_open) {}

std::size_t ClipSource::read(std::span<float> out) {
  std::lock_guard lock(mutex_);
  const std::size_t n = std::min(out.size(), clip_.samples.size() - pos_);
  std::copy_n(clip_.samples.begin() + static_cast<std::ptrdiff_t>(pos_), n, out.begin());
  pos_ += n;
  return n;
}

bool ClipSource::exhausted() const {
  std::lock_guard lock(mutex_);
  return pos_ >= clip_.samples.size();
}

bool ClipSource::load(AudioClip clip) {
  std::lock_guard lock(mutex_);
  if (clip.sample_rate_hz != rate_) return false;
  clip_ = std::move(clip);
  pos_ = 0;
  return true;
}

struct Session::Shared {
  explicit Shared(std::size_t capacity) : ring(capacity) {}

  RingBuffer ring;
  std::mutex mutex;
  std::condition_variable cv;
  bool paused = false;
  std::uint64_t loads = 0;
  std::uint64_t produced = 0;  // samples written by the producer
  std::uint64_t drained = 0;   // samples fully processed by the consumer (simulation)
  std::vector<ParamUpdate> updates;
  Clock::time_point started_at;
};

Session::Session(SessionConfig cfg, std::shared_ptr<SampleSource> source, Backend& backend,
                 TelemetrySink* telemetry)
    : cfg_(std::move(cfg)), source_(std::move(source)), backend_(backend), telemetry_(telemetry) {
  // One chunk of slack on top of the configured capacity keeps a max-length
  // window ending at the newest hop tick resident while the next chunk lands.
  const auto capacity = std::llround(std::max(0.0, cfg_.buffer_capacity_s) * cfg_.sample_rate_hz);
  shared_ = std::make_unique<Shared>(static_cast<std::size_t>(std::max<long long>(1, capacity)) +
                                     cfg_.chunk_samples());
}

Session::~Session() {
  shutdown();
  if (producer_.joinable()) producer_.join();
  if (consumer_.joinable()) consumer_.join();
}

void Session::start() {
  if (started_.exchange(true)) throw Error(ErrorCode::ConfigError, "session already started");
  if (stop_.load()) return;
  cfg_.validate();
  if (!source_) throw Error(ErrorCode::ConfigError, "session has no source");
  if (source_->sample_rate_hz() != cfg_.sample_rate_hz)
    throw Error(ErrorCode::ConfigError, "source rate " + std::to_string(source_->sample_rate_hz()) +
                                            " Hz differs from session rate " +
                                            std::to_string(cfg_.sample_rate_hz) + " Hz");
  const std::size_t needed = backend_.min_input_samples();
  if (cfg_.frame_policy.min_frame_samples < needed)
    throw Error(ErrorCode::ConfigError, "min frame of " + std::to_string(cfg_.frame_policy.min_frame_samples) +
                                            " samples is below the backend minimum of " + std::to_string(needed));
  shared_->started_at = Clock::now();
  running_ = true;
  consumer_ = std::thread([this] { consumer_loop(); });
  producer_ = std::thread([this] { producer_loop(); });
}

SessionResult Session::wait() {
  if (producer_.joinable()) producer_.join();
  if (consumer_.joinable()) consumer_.join();
  running_ = false;
  return std::move(result_);
}

void Session::shutdown() {
  stop_ = true;
  shared_->ring.shutdown();
  std::lock_guard lock(shared_->mutex);
  shared_->cv.notify_all();
}

void Session::queue_update(ParamUpdate update) {
  std::lock_guard lock(shared_->mutex);
  shared_->updates.push_back(update);
}

void Session::set_decision_threshold(double value) {
  if (!(value > 0.0 && value < 1.0)) throw Error(ErrorCode::ConfigError, "decision threshold must lie in (0,1)");
  queue_update({ParamUpdate::Kind::DecisionThreshold, value});
}

void Session::set_growth_threshold(double value) {
  if (!(value > 0.0 && value < 1.0)) throw Error(ErrorCode::ConfigError, "growth threshold must lie in (0,1)");
  queue_update({ParamUpdate::Kind::GrowthThreshold, value});
}

void Session::set_growth_step(double seconds) {
  if (!(seconds >= 0.0 && std::isfinite(seconds)))
    throw Error(ErrorCode::ConfigError, "growth step must be a finite value >= 0");
  queue_update({ParamUpdate::Kind::GrowthStep, seconds});
}

void Session::stop_producer() {
  std::lock_guard lock(shared_->mutex);
  shared_->paused = true;
  shared_->cv.notify_all();
}

void Session::start_producer() {
  std::lock_guard lock(shared_->mutex);
  shared_->paused = false;
  shared_->cv.notify_all();
}

bool Session::load_clip(AudioClip clip) {
  if (!source_ || !source_->load(std::move(clip))) return false;
  std::lock_guard lock(shared_->mutex);
  ++shared_->loads;
  shared_->cv.notify_all();
  return true;
}

void Session::publish(std::string message) {
  if (telemetry_) telemetry_->publish(std::move(message));
}

void Session::producer_loop() {
  auto& sh = *shared_;
  const std::size_t chunk = cfg_.chunk_samples();
  const double sr = cfg_.sample_rate_hz;
  std::vector<float> buf(chunk);
  const bool hold_open = [&] {
    const auto* clip = dynamic_cast<const ClipSource*>(source_.get());
    return clip && clip->hold_open();
  }();
  std::uint64_t written = 0;
  // Pacing origin: chunk k is written at origin + k * chunk duration.
  Clock::time_point origin = Clock::now();

  while (!stop_.load()) {
    {
      std::unique_lock lock(sh.mutex);
      if (sh.paused) {
        sh.cv.wait(lock, [&] { return !sh.paused || stop_.load(); });
        if (stop_.load()) break;
        origin = Clock::now() - std::chrono::duration_cast<Clock::duration>(
                                    std::chrono::duration<double>(static_cast<double>(written) / sr));
      }
    }
    const std::size_t n = source_->read(buf);
    if (n == 0) {
      if (!hold_open) break;
      std::unique_lock lock(sh.mutex);
      const auto loads = sh.loads;
      sh.cv.wait_for(lock, std::chrono::milliseconds(50), [&] { return sh.loads != loads || stop_.load(); });
      origin = Clock::now() - std::chrono::duration_cast<Clock::duration>(
                                  std::chrono::duration<double>(static_cast<double>(written) / sr));
      continue;
    }
    sh.ring.write(std::span<const float>(buf.data(), n));
    written += n;

    std::unique_lock lock(sh.mutex);
    sh.produced = written;
    if (!cfg_.realtime) {
      sh.cv.wait(lock, [&] { return sh.drained >= written || stop_.load(); });
    } else {
      if (source_->exhausted() && !hold_open) break;
      const auto due = origin + std::chrono::duration_cast<Clock::duration>(
                                    std::chrono::duration<double>(static_cast<double>(written) / sr));
      sh.cv.wait_until(lock, due, [&] { return stop_.load(); });
    }
  }
  sh.ring.close();
}

void Session::consumer_loop() {
  auto& sh = *shared_;
  const double sr = cfg_.sample_rate_hz;
  const std::size_t hop = cfg_.frame_policy.hop();
  FrameState frame = FrameState::initial(cfg_.frame_policy, cfg_.sample_rate_hz);
  DecisionMachine machine(cfg_.decision);
  std::vector<float> window;
  std::uint64_t next_tick = hop;
  std::uint64_t seen = 0;
  std::uint64_t scored = 0;

  auto rtf_now = [&] {
    const double wall = std::chrono::duration<double>(Clock::now() - sh.started_at).count();
    return wall > 0.0 ? (static_cast<double>(seen) / sr) / wall : 0.0;
  };
  auto emit_diag = [&] {
    publish(json{{"type", "diag"},
                 {"rtf", rtf_now()},
                 {"frames_ok", succeeded_.load()},
                 {"frames_total", attempted_.load()}}
                .dump());
  };
  auto apply_updates = [&] {
    std::vector<ParamUpdate> updates;
    {
      std::lock_guard lock(sh.mutex);
      updates.swap(sh.updates);
    }
    for (const auto& u : updates) {
      switch (u.kind) {
        case ParamUpdate::Kind::DecisionThreshold: machine.set_threshold(u.value); break;
        case ParamUpdate::Kind::GrowthThreshold: frame.policy.growth_threshold = u.value; break;
        case ParamUpdate::Kind::GrowthStep: frame.policy.growth_step_s = u.value; break;
      }
    }
  };
  // Scores the window ending at stream position `end`, attributed to the hop
  // interval that ends there.
  auto process = [&](std::uint64_t end, bool exact_window) {
    apply_updates();
    window.resize(frame.current_len_samples);
    const auto t0 = Clock::now();
    if (exact_window)
      sh.ring.read_ending_at(end, window);
    else
      end = sh.ring.read_latest(window);
    InferenceRecord rec;
    rec.t_start_s = static_cast<double>(end - hop) / sr;
    rec.frame_len_samples = window.size();
    rec.raw_p = backend_.score(window);
    // Simulation records carry no wall-clock data so that runs are reproducible.
    rec.wall_latency_s = cfg_.realtime ? std::chrono::duration<double>(Clock::now() - t0).count() : 0.0;
    if (const auto tr = machine.step(rec)) {
      const bool onset = tr->kind == Transition::Kind::Onset;
      publish(json{{"type", "event"}, {"state", onset ? "onset" : "offset"}, {"t", tr->t_s}}.dump());
    }
    publish(json{{"type", "score"},
                 {"t", rec.t_start_s},
                 {"p", rec.raw_p},
                 {"smoothed", rec.smoothed_p},
                 {"frame_ms", std::llround(static_cast<double>(rec.frame_len_samples) * 1000.0 / sr)}}
                .dump());
    result_.records.push_back(rec);
    frame = next_frame_len(frame, rec.raw_p);
    return end;
  };

  try {
    for (;;) {
      const WaitStatus status = sh.ring.await_new_data();
      if (status != WaitStatus::NewData) break;
      const std::uint64_t total = sh.ring.total_written();
      seen = total;
      if (!cfg_.realtime) {
        while (next_tick <= total && !stop_.load()) {
          process(next_tick, true);
          attempted_.fetch_add(1);
          succeeded_.fetch_add(1);
          next_tick += hop;
          if (++scored % cfg_.diag_every_frames == 0) emit_diag();
        }
        std::lock_guard lock(sh.mutex);
        sh.drained = total;
        sh.cv.notify_all();
      } else if (total >= next_tick) {
        // Every tick that fell due since the last frame counts as attempted;
        // only the newest one is scored.
        const std::uint64_t due = (total - next_tick) / hop + 1;
        const std::uint64_t last_tick = next_tick + (due - 1) * hop;
        attempted_.fetch_add(due);
        process(total, false);
        if (sh.ring.total_written() < last_tick + hop) succeeded_.fetch_add(1);
        next_tick = last_tick + hop;
        if (++scored % cfg_.diag_every_frames == 0) emit_diag();
      }
    }
  } catch (const Error& e) {
    result_.error_code = e.code();
    result_.error = e.what();
  } catch (const std::exception& e) {
    result_.error_code = ErrorCode::BackendError;
    result_.error = e.what();
  }
  if (result_.error_code) {
    publish(json{{"type", "error"}, {"msg", result_.error}}.dump());
    shutdown();
  }

  const double end_t = static_cast<double>(seen) / sr;
  if (machine.phase() == DecisionMachine::Phase::Active) {
    publish(json{{"type", "event"}, {"state", "offset"}, {"t", end_t}}.dump());
  }
  result_.events = machine.finalize(end_t);
  result_.frames_attempted = attempted_.load();
  result_.frames_succeeded = succeeded_.load();
  result_.processed_audio_s = end_t;
  result_.wall_s = std::chrono::duration<double>(Clock::now() - sh.started_at).count();
  result_.realtime_factor = result_.wall_s > 0.0 ? result_.processed_audio_s / result_.wall_s : 0.0;
  emit_diag();
  running_ = false;
  // Release a producer still waiting for lockstep acknowledgement.
  stop_ = true;
  sh.ring.shutdown();
  std::lock_guard lock(sh.mutex);
  sh.cv.notify_all();
}

SessionResult run_session(const SessionConfig& cfg, const AudioClip& clip, Backend& backend,
                          TelemetrySink* telemetry) {
  Session session(cfg, std::make_shared<ClipSource>(clip), backend, telemetry);
  session.start();
  return session.wait();
}

}  // namespace sirenedge
