#include "sirenedge/framing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sirenedge/error.hpp"

namespace sirenedge {

std::size_t FramePolicy::max_frame_samples(int sample_rate_hz) const {
  return static_cast<std::size_t>(std::llround(max_frame_s * sample_rate_hz));
}

std::size_t FramePolicy::growth_step_samples(int sample_rate_hz) const {
  return static_cast<std::size_t>(std::llround(growth_step_s * sample_rate_hz));
}

void FramePolicy::validate(int sample_rate_hz) const {
  if (sample_rate_hz <= 0) throw Error(ErrorCode::ConfigError, "sample rate must be positive");
  if (min_frame_samples == 0) throw Error(ErrorCode::ConfigError, "min_frame_samples must be positive");
  if (!(max_frame_s > 0.0)) throw Error(ErrorCode::ConfigError, "max_frame_s must be positive");
  if (min_frame_samples > max_frame_samples(sample_rate_hz))
    throw Error(ErrorCode::ConfigError, "min_frame_samples exceeds max_frame_s");
  if (!(growth_step_s >= 0.0)) throw Error(ErrorCode::ConfigError, "growth_step_s must be >= 0");
  if (!(growth_threshold > 0.0 && growth_threshold < 1.0))
    throw Error(ErrorCode::ConfigError, "growth_threshold must lie in (0,1)");
}

FrameState FrameState::initial(const FramePolicy& policy, int sample_rate_hz) {
  policy.validate(sample_rate_hz);
  return FrameState{policy.min_frame_samples, policy, sample_rate_hz};
}

MinSizeResult min_valid_input(const std::function<bool(std::size_t)>& valid, std::size_t lo,
                              std::size_t hi) {
  if (lo == 0 || lo > hi) throw Error(ErrorCode::ConfigError, "need 1 <= lo <= hi");
  MinSizeResult result;
  bool seen_valid = false;
  std::size_t low = lo;
  std::size_t high = hi;
  while (low < high) {
    const std::size_t mid = low + (high - low) / 2;
    ++result.probes;
    if (valid(mid)) {
      high = mid;
      seen_valid = true;
    } else {
      low = mid + 1;
    }
  }
  if (!seen_valid) {
    ++result.probes;
    if (!valid(low))
      throw Error(ErrorCode::NoValidSize,
                  "no valid size in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  result.size = low;
  return result;
}

FrameState next_frame_len(const FrameState& state, double last_raw_p) {
  FrameState next = state;
  const FramePolicy& p = state.policy;
  if (last_raw_p > p.growth_threshold) {
    const std::size_t cap = p.max_frame_samples(state.sample_rate_hz);
    next.current_len_samples =
        std::min(cap, state.current_len_samples + p.growth_step_samples(state.sample_rate_hz));
  } else {
    next.current_len_samples = p.min_frame_samples;
  }
  return next;
}

AudioClip resample_linear(const AudioClip& clip, int target_hz) {
  if (clip.samples.empty()) throw Error(ErrorCode::EmptyInput, "cannot resample an empty clip");
  if (target_hz <= 0 || clip.sample_rate_hz <= 0)
    throw Error(ErrorCode::ConfigError, "sample rates must be positive");
  if (target_hz == clip.sample_rate_hz) return clip;

  const double ratio = static_cast<double>(clip.sample_rate_hz) / target_hz;
  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(clip.samples.size()) * target_hz / clip.sample_rate_hz));
  AudioClip out;
  out.sample_rate_hz = target_hz;
  out.samples.resize(out_len);
  const std::size_t last = clip.samples.size() - 1;
  for (std::size_t i = 0; i < out_len; ++i) {
    const double pos = static_cast<double>(i) * ratio;
    const auto left = std::min(static_cast<std::size_t>(pos), last);
    const std::size_t right = std::min(left + 1, last);
    const double frac = pos - static_cast<double>(left);
    out.samples[i] = static_cast<float>(clip.samples[left] +
                                        frac * (clip.samples[right] - clip.samples[left]));
  }
  return out;
}

}  // namespace sirenedge
