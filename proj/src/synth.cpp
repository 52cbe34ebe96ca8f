#include "sirenedge/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "sirenedge/error.hpp"

namespace sirenedge {
namespace {

// mt19937_64 output is specified by the standard; the distribution classes
// are not, so the conversion to [0,1) is done by hand.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t sample_count(double duration_s, int sample_rate_hz) {
  return static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
}

}  // namespace

SirenSpec SirenSpec::wail(double duration_s, std::uint64_t seed) {
  SirenSpec s;
  s.kind = SirenKind::Wail;
  s.duration_s = duration_s;
  s.seed = seed;
  return s;
}

SirenSpec SirenSpec::yelp(double duration_s, std::uint64_t seed) {
  SirenSpec s = wail(duration_s, seed);
  s.kind = SirenKind::Yelp;
  return s;
}

double SirenSpec::effective_period_s() const {
  if (period_s > 0.0) return period_s;
  return kind == SirenKind::Wail ? 5.0 : 0.5;
}

void SirenSpec::validate(int sample_rate_hz) const {
  if (sample_rate_hz <= 0) throw Error(ErrorCode::ConfigError, "sample rate must be positive");
  if (!(f_low_hz > 0.0 && f_low_hz < f_high_hz && f_high_hz < sample_rate_hz / 2.0))
    throw Error(ErrorCode::ConfigError, "need 0 < f_low < f_high < Nyquist");
  if (period_s < 0.0 || !std::isfinite(period_s)) throw Error(ErrorCode::ConfigError, "period must be positive");
  if (!(duration_s > 0.0 && std::isfinite(duration_s))) throw Error(ErrorCode::ConfigError, "duration must be positive");
  if (!(amplitude > 0.0 && amplitude <= 1.0)) throw Error(ErrorCode::ConfigError, "amplitude must lie in (0,1]");
}

AudioClip synth_siren(const SirenSpec& spec, int sample_rate_hz) {
  spec.validate(sample_rate_hz);
  const double period = spec.effective_period_s();
  const double mid = 0.5 * (spec.f_low_hz + spec.f_high_hz);
  const double half_span = 0.5 * (spec.f_high_hz - spec.f_low_hz);
  std::mt19937_64 rng(spec.seed);
  const double phase0 = 2.0 * std::numbers::pi * unit(rng);
  const double w = 2.0 * std::numbers::pi / period;

  AudioClip clip;
  clip.sample_rate_hz = sample_rate_hz;
  clip.samples.resize(sample_count(spec.duration_s, sample_rate_hz));
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    const double t = static_cast<double>(i) / sample_rate_hz;
    // Closed-form integral of f(t), so the phase never accumulates rounding drift.
    const double cycles = mid * t + half_span * (1.0 - std::cos(w * t)) / w;
    clip.samples[i] = static_cast<float>(spec.amplitude * std::sin(2.0 * std::numbers::pi * cycles + phase0));
  }
  return clip;
}

AudioClip white_noise(double duration_s, int sample_rate_hz, std::uint64_t seed) {
  if (!(duration_s > 0.0) || sample_rate_hz <= 0)
    throw Error(ErrorCode::ConfigError, "duration and sample rate must be positive");
  std::mt19937_64 rng(seed);
  AudioClip clip;
  clip.sample_rate_hz = sample_rate_hz;
  clip.samples.resize(sample_count(duration_s, sample_rate_hz));
  for (float& s : clip.samples) s = static_cast<float>(2.0 * unit(rng) - 1.0);
  return clip;
}

double mean_power(const AudioClip& clip) {
  if (clip.samples.empty()) return 0.0;
  double sum = 0.0;
  for (float s : clip.samples) sum += static_cast<double>(s) * s;
  return sum / static_cast<double>(clip.samples.size());
}

AudioClip mix_at_snr(const AudioClip& signal, const AudioClip& noise, double snr_db) {
  if (signal.samples.size() != noise.samples.size() || signal.sample_rate_hz != noise.sample_rate_hz)
    throw Error(ErrorCode::ShapeError, "signal and noise must have equal length and rate");
  if (snr_db == kInfiniteSnr) return signal;
  if (std::isnan(snr_db)) throw Error(ErrorCode::ConfigError, "snr is NaN");
  const double pn = mean_power(noise);
  if (!(pn > 0.0)) throw Error(ErrorCode::DegenerateInput, "noise has zero power");
  const double gain = std::sqrt(mean_power(signal) / (pn * std::pow(10.0, snr_db / 10.0)));
  AudioClip out = signal;
  for (std::size_t i = 0; i < out.samples.size(); ++i)
    out.samples[i] = std::clamp(static_cast<float>(signal.samples[i] + gain * noise.samples[i]), -1.0f, 1.0f);
  return out;
}

Scene compose_scene(const SceneSpec& spec, int sample_rate_hz) {
  if (spec.lead_s < 0.0 || spec.tail_s < 0.0) throw Error(ErrorCode::ConfigError, "lead and tail must be >= 0");
  const AudioClip siren = synth_siren(spec.siren, sample_rate_hz);
  const std::size_t lead = sample_count(spec.lead_s, sample_rate_hz);
  const std::size_t total = lead + siren.samples.size() + sample_count(spec.tail_s, sample_rate_hz);
  const AudioClip noise = white_noise(static_cast<double>(total) / sample_rate_hz, sample_rate_hz, spec.noise_seed);

  AudioClip segment_noise;
  segment_noise.sample_rate_hz = sample_rate_hz;
  segment_noise.samples.assign(noise.samples.begin() + static_cast<std::ptrdiff_t>(lead),
                               noise.samples.begin() + static_cast<std::ptrdiff_t>(lead + siren.samples.size()));
  const double pn = mean_power(segment_noise);
  if (!(pn > 0.0)) throw Error(ErrorCode::DegenerateInput, "noise has zero power");
  const double gain =
      spec.snr_db == kInfiniteSnr ? 0.0 : std::sqrt(mean_power(siren) / (pn * std::pow(10.0, spec.snr_db / 10.0)));

  Scene scene;
  scene.clip.sample_rate_hz = sample_rate_hz;
  scene.clip.samples.resize(total);
  for (std::size_t i = 0; i < total; ++i) {
    double v = gain * noise.samples[i];
    if (i >= lead && i < lead + siren.samples.size()) v += siren.samples[i - lead];
    scene.clip.samples[i] = std::clamp(static_cast<float>(v), -1.0f, 1.0f);
  }
  scene.onset_s = static_cast<double>(lead) / sample_rate_hz;
  scene.offset_s = static_cast<double>(lead + siren.samples.size()) / sample_rate_hz;
  return scene;
}

}  // namespace sirenedge
