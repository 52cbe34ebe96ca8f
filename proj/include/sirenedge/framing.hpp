#pragma once

#include <cstddef>
#include <functional>

#include "sirenedge/core.hpp"

namespace sirenedge {

struct FrameState {
  std::size_t current_len_samples = 0;
  FramePolicy policy;
  int sample_rate_hz = kDefaultSampleRate;

  static FrameState initial(const FramePolicy& policy, int sample_rate_hz);
};

struct MinSizeResult {
  std::size_t size = 0;
  std::size_t probes = 0;
};

// Smallest n in [lo, hi] with valid(n) == true, for a predicate that is
// monotone in n. The bisection spends at most ceil(log2(hi - lo + 1)) probes;
// when it converges on `hi` without having seen a valid probe, `hi` itself
// is probed once more to confirm it. Throws NoValidSize when nothing in
// range is valid.
MinSizeResult min_valid_input(const std::function<bool(std::size_t)>& valid, std::size_t lo,
                              std::size_t hi);

// Grows the frame by one step when the last raw probability strictly
// exceeds the growth threshold (capped at the policy maximum); otherwise
// resets to the minimum.
FrameState next_frame_len(const FrameState& state, double last_raw_p);

// Linear-interpolation resampler. Output length is round(n * target / source).
AudioClip resample_linear(const AudioClip& clip, int target_hz);

}  // namespace sirenedge
