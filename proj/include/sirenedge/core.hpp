#pragma once

// Domain types shared by every module: audio clips, framing and decision
// configuration, per-frame inference records and detection events.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace sirenedge {

inline constexpr int kDefaultSampleRate = 32000;

struct AudioClip {
  std::vector<float> samples;
  int sample_rate_hz = kDefaultSampleRate;

  double duration_s() const {
    return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
  }
};

// Adaptive frame-length rules. Growth is expressed in seconds so the same
// policy works at any sample rate; the frame provider converts to samples.
struct FramePolicy {
  std::size_t min_frame_samples = 9919;
  double growth_step_s = 0.0;
  double max_frame_s = 10.0;
  double growth_threshold = 0.6;
  std::size_t hop_samples = 0;  // 0 means "same as min_frame_samples"

  std::size_t hop() const { return hop_samples == 0 ? min_frame_samples : hop_samples; }
  std::size_t max_frame_samples(int sample_rate_hz) const;
  std::size_t growth_step_samples(int sample_rate_hz) const;

  // Throws ConfigError when the invariants do not hold at this rate.
  void validate(int sample_rate_hz) const;
};

struct DecisionConfig {
  std::size_t smoothing_window = 3;
  std::size_t consecutive_required = 3;
  double event_threshold = 0.5;
  std::size_t release_required = 0;  // 0 means "same as consecutive_required"

  std::size_t release() const {
    return release_required == 0 ? consecutive_required : release_required;
  }
  void validate() const;
};

struct InferenceRecord {
  double t_start_s = 0.0;
  std::size_t frame_len_samples = 0;
  double raw_p = 0.0;
  double smoothed_p = 0.0;
  double wall_latency_s = 0.0;

  friend bool operator==(const InferenceRecord&, const InferenceRecord&) = default;
};

struct DetectionEvent {
  double onset_s = 0.0;
  double offset_s = 0.0;
  double peak_p = 0.0;
  std::size_t n_frames = 0;

  friend bool operator==(const DetectionEvent&, const DetectionEvent&) = default;
};

struct GroundTruthEvent {
  std::string clip_id;
  double onset_s = 0.0;
  double offset_s = 0.0;
  bool ftp = false;

  friend bool operator==(const GroundTruthEvent&, const GroundTruthEvent&) = default;
};

}  // namespace sirenedge
