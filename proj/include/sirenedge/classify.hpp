#pragma once

// Classifier backends. A backend maps a frame of mono samples to a siren
// probability in [0,1]. Instances are used from one thread at a time.

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>

namespace sirenedge {

class Backend {
 public:
  virtual ~Backend() = default;

  // Throws InputTooShort when frame.size() < min_input_samples().
  virtual double score(std::span<const float> frame) = 0;
  virtual std::size_t min_input_samples() = 0;
  virtual std::string name() const = 0;
};

struct DspDetectorConfig {
  std::size_t fft_size = 1024;
  std::size_t hop = 512;
  double band_low_hz = 500.0;
  double band_high_hz = 2000.0;
  double mod_depth_min_hz = 50.0;
  int sample_rate_hz = 32000;

  void validate() const;
};

// Reference detector for FM sirens, requiring no trained model.
// Over a Hann-windowed magnitude STFT it measures
//   r = in-band energy / total energy
//   m = min(1, stddev of the per-frame in-band peak frequency / mod_depth_min_hz)
// and returns clamp(r * m, 0, 1). Steady tones have m ~ 0; broadband
// noise has a small r. Frames shorter than 2 * fft_size are rejected.
double dsp_reference_score(const DspDetectorConfig& cfg, std::span<const float> frame);

class DspBackend final : public Backend {
 public:
  explicit DspBackend(DspDetectorConfig cfg = {});
  ~DspBackend() override;

  double score(std::span<const float> frame) override;
  std::size_t min_input_samples() override { return 2 * cfg_.fft_size; }
  std::string name() const override { return "dsp"; }
  const DspDetectorConfig& config() const { return cfg_; }

 private:
  struct Impl;
  DspDetectorConfig cfg_;
  std::unique_ptr<Impl> impl_;
};

// In-process backend returning a fixed probability with no latency.
class ConstantBackend final : public Backend {
 public:
  explicit ConstantBackend(double p, std::size_t min_input = 1) : p_(p), min_input_(min_input) {}

  double score(std::span<const float> frame) override;
  std::size_t min_input_samples() override { return min_input_; }
  std::string name() const override { return "constant"; }

 private:
  double p_;
  std::size_t min_input_;
};

struct ExternalEndpoint {
  enum class Kind { Process, Tcp };
  Kind kind = Kind::Process;
  std::string target;  // shell command line, or host:port

  // "external:CMD" or "tcp:HOST:PORT".
  static ExternalEndpoint parse(const std::string& spec);
};

struct ExternalBackendOptions {
  std::chrono::milliseconds timeout{2000};
  // Range probed when the minimum input size is discovered.
  std::size_t probe_lo = 1;
  std::size_t probe_hi = 320000;
};

// Adapter to a model hosted in another process, speaking the length-prefixed
// float wire protocol over the child's stdin/stdout or a TCP connection.
class ExternalBackend final : public Backend {
 public:
  explicit ExternalBackend(ExternalEndpoint endpoint, ExternalBackendOptions options = {});
  ~ExternalBackend() override;

  double score(std::span<const float> frame) override;
  // Binary-searched once against the backend with zero frames, then cached.
  // A response counts as valid when it is a finite number in [0,1].
  std::size_t min_input_samples() override;
  std::string name() const override;

  // One raw exchange: returns the decoded response without range checks.
  // Used by the size probe; throws BackendTimeout / BackendError /
  // ProtocolError on transport failures.
  float exchange(std::span<const float> frame);

  std::size_t probes_used() const { return probes_; }

 private:
  struct Connection;
  Connection& connection();

  ExternalEndpoint endpoint_;
  ExternalBackendOptions options_;
  std::unique_ptr<Connection> conn_;
  std::optional<std::size_t> min_input_;
  std::size_t probes_ = 0;
};

// Factory for the CLI spellings: "dsp", "external:CMD", "tcp:HOST:PORT".
std::unique_ptr<Backend> make_backend(const std::string& spec, ExternalBackendOptions options = {});

}  // namespace sirenedge
