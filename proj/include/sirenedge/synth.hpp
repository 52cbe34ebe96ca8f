#pragma once

// Deterministic siren and noise generators for desk-scale testing.

#include <cstdint>
#include <limits>

#include "sirenedge/core.hpp"

namespace sirenedge {

enum class SirenKind { Wail, Yelp };

struct SirenSpec {
  SirenKind kind = SirenKind::Wail;
  double f_low_hz = 700.0;
  double f_high_hz = 1500.0;
  double period_s = 0.0;  // 0 selects the kind's default: 5 s wail, 0.5 s yelp
  double duration_s = 10.0;
  double amplitude = 0.5;
  std::uint64_t seed = 0;  // selects the starting carrier phase

  static SirenSpec wail(double duration_s, std::uint64_t seed = 0);
  static SirenSpec yelp(double duration_s, std::uint64_t seed = 0);

  double effective_period_s() const;
  void validate(int sample_rate_hz) const;
};

// Phase-continuous FM tone with instantaneous frequency
//   f(t) = f_low + (f_high - f_low) * (1 + sin(2 pi t / period)) / 2.
AudioClip synth_siren(const SirenSpec& spec, int sample_rate_hz = kDefaultSampleRate);

// Uniform samples in [-1, 1] from a seeded generator.
AudioClip white_noise(double duration_s, int sample_rate_hz, std::uint64_t seed);

double mean_power(const AudioClip& clip);

inline constexpr double kInfiniteSnr = std::numeric_limits<double>::infinity();

// signal + g * noise with g chosen so that 10 log10(P_signal / P_noise') = snr_db,
// clipped to [-1, 1]. snr_db = +inf leaves the signal unchanged.
AudioClip mix_at_snr(const AudioClip& signal, const AudioClip& noise, double snr_db);

// noise (lead_s) + siren + noise (tail_s), with the noise level set so the
// siren segment sits at snr_db over the noise.
struct SceneSpec {
  SirenSpec siren;
  double lead_s = 3.0;
  double tail_s = 3.0;
  double snr_db = 20.0;
  std::uint64_t noise_seed = 1;
};

struct Scene {
  AudioClip clip;
  double onset_s;
  double offset_s;
};

Scene compose_scene(const SceneSpec& spec, int sample_rate_hz = kDefaultSampleRate);

}  // namespace sirenedge
