#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include <fftw3.h>

#include "sirenedge/classify.hpp"
#include "sirenedge/error.hpp"

namespace sirenedge {
namespace {

// FFTW's planner is not thread-safe; execution of an existing plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

}  // namespace

void DspDetectorConfig::validate() const {
  if (!is_pow2(fft_size)) throw Error(ErrorCode::ConfigError, "fft_size must be a power of two");
  if (hop == 0) throw Error(ErrorCode::ConfigError, "hop must be positive");
  if (sample_rate_hz <= 0) throw Error(ErrorCode::ConfigError, "sample rate must be positive");
  if (!(band_low_hz >= 0.0 && band_low_hz < band_high_hz && band_high_hz <= sample_rate_hz / 2.0))
    throw Error(ErrorCode::ConfigError, "band must satisfy 0 <= low < high <= Nyquist");
  if (!(mod_depth_min_hz > 0.0)) throw Error(ErrorCode::ConfigError, "mod_depth_min_hz must be positive");
}

struct DspBackend::Impl {
  explicit Impl(const DspDetectorConfig& cfg) : cfg(cfg), window(cfg.fft_size) {
    const std::size_t n = cfg.fft_size;
    for (std::size_t i = 0; i < n; ++i)
      window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    const double bin_hz = static_cast<double>(cfg.sample_rate_hz) / static_cast<double>(n);
    bool found = false;
    for (std::size_t k = 0; k <= n / 2; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      if (f >= cfg.band_low_hz && f <= cfg.band_high_hz) {
        if (!found) band_first = k;
        found = true;
        band_last = k;
      }
    }
    if (!found) throw Error(ErrorCode::ConfigError, "band contains no FFT bin");
    this->bin_hz = bin_hz;
    in = fftw_alloc_real(n);
    out = fftw_alloc_complex(n / 2 + 1);
    {
      std::lock_guard lock(planner_mutex());
      plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    }
  }

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }

  Impl(const Impl&) = delete;
  Impl& operator=(const Impl&) = delete;

  double score(std::span<const float> frame) {
    const std::size_t n = cfg.fft_size;
    if (frame.size() < 2 * n)
      throw Error(ErrorCode::InputTooShort, "DSP detector needs at least " + std::to_string(2 * n) +
                                                " samples, got " + std::to_string(frame.size()));
    const std::size_t n_frames = 1 + (frame.size() - n) / cfg.hop;
    double total = 0.0;
    double in_band = 0.0;
    peaks.clear();
    for (std::size_t f = 0; f < n_frames; ++f) {
      const float* src = frame.data() + f * cfg.hop;
      for (std::size_t i = 0; i < n; ++i) in[i] = window[i] * static_cast<double>(src[i]);
      fftw_execute(plan);
      double frame_band = 0.0;
      double best = -1.0;
      std::size_t best_bin = band_first;
      for (std::size_t k = 0; k <= n / 2; ++k) {
        const double power = out[k][0] * out[k][0] + out[k][1] * out[k][1];
        total += power;
        if (k >= band_first && k <= band_last) {
          frame_band += power;
          if (power > best) {
            best = power;
            best_bin = k;
          }
        }
      }
      in_band += frame_band;
      if (frame_band > 0.0) peaks.push_back(static_cast<double>(best_bin) * bin_hz);
    }
    if (!(total > 0.0)) return 0.0;
    const double ratio = in_band / total;

    double spread = 0.0;
    if (peaks.size() >= 2) {
      double mean = 0.0;
      for (double p : peaks) mean += p;
      mean /= static_cast<double>(peaks.size());
      double var = 0.0;
      for (double p : peaks) var += (p - mean) * (p - mean);
      spread = std::sqrt(var / static_cast<double>(peaks.size()));
    }
    const double modulation = std::min(1.0, spread / cfg.mod_depth_min_hz);
    return std::clamp(ratio * modulation, 0.0, 1.0);
  }

  DspDetectorConfig cfg;
  std::vector<double> window;
  std::vector<double> peaks;
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;
  std::size_t band_first = 0;
  std::size_t band_last = 0;
  double bin_hz = 0.0;
};

DspBackend::DspBackend(DspDetectorConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  impl_ = std::make_unique<Impl>(cfg_);
}

DspBackend::~DspBackend() = default;

double DspBackend::score(std::span<const float> frame) { return impl_->score(frame); }

double dsp_reference_score(const DspDetectorConfig& cfg, std::span<const float> frame) {
  DspBackend backend(cfg);
  return backend.score(frame);
}

double ConstantBackend::score(std::span<const float> frame) {
  if (frame.size() < min_input_)
    throw Error(ErrorCode::InputTooShort, "frame of " + std::to_string(frame.size()) + " samples");
  return p_;
}

}  // namespace sirenedge
