#pragma once

// Numerical kernels used when training, explaining and pruning the siren
// classifier: the cyclic cosine-annealing scheduler with Adam, BCE loss,
// mel-filter centroids, guided-backprop gating, Score-CAM, and two
// SVD-based filter salience measures.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace sirenedge {

struct SchedulerConfig {
  double eta_init = 1e-5;
  double eta_max = 1e-3;
  double eta_min = 1e-6;
  std::uint64_t t_cycle = 100;
  std::uint64_t t_warmup = 5;

  // Throws ConfigError unless eta_min <= eta_init <= eta_max, all positive,
  // t_cycle >= 1 and t_warmup < t_cycle.
  void validate() const;
};

double lr_at_step(const SchedulerConfig& cfg, std::uint64_t t);

struct AdamState {
  std::vector<double> theta;
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lambda = 1e-6;

  static AdamState zeros(std::size_t n);
};

// One optimizer step with L2 weight decay folded into the gradient.
// Throws ShapeError when grad, theta, m and v differ in size.
AdamState adam_step(AdamState state, const std::vector<double>& grad, double eta);

inline constexpr double kBceClamp = 1e-7;
// -[y ln p + (1-y) ln(1-p)] with p clamped to [1e-7, 1-1e-7].
double bce_loss(double p, int y);

struct MelFilter {
  std::vector<double> weights;
  std::vector<double> center_freqs_hz;
};

// Weighted mean of the bin centre frequencies. Throws ShapeError on a
// length mismatch and DegenerateFilter when the weights sum to zero.
double mel_centroid(const MelFilter& filter);

// Row-major tensor of arbitrary shape.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  static Tensor of(std::vector<std::size_t> shape, std::vector<double> data);
  std::size_t size() const;
};

// delta * 1(x > 0) * 1(delta > 0), elementwise.
Tensor guided_backprop_gate(const Tensor& x, const Tensor& delta);

using Map = Eigen::MatrixXd;

// Bilinear resize with half-pixel centres (align_corners = false).
Map upsample_bilinear(const Map& m, Eigen::Index rows, Eigen::Index cols);
// Rescales to [0,1]; constant maps become all zeros.
Map minmax_normalize(const Map& m);
std::vector<double> softmax(const std::vector<double>& scores);

struct ScoreCamResult {
  std::vector<double> weights;  // softmax of the masked-input scores
  Map cam;
};

// Each activation map is upsampled to the input shape and min-max
// normalized; score_fn is evaluated on input .* map and the softmax of those
// scores weights the normalized maps. Throws EmptyMaps when maps is empty.
ScoreCamResult score_cam(const std::vector<Map>& maps, const Map& input,
                         const std::function<double(const Map&)>& score_fn);

// 4-D weights [n_filters, in_channels, k, k], row-major.
struct FilterBank {
  std::size_t n_filters = 0;
  std::size_t in_channels = 0;
  std::size_t k = 0;
  std::vector<double> weights;

  double at(std::size_t f, std::size_t c, std::size_t i, std::size_t j) const {
    return weights[((f * in_channels + c) * k + i) * k + j];
  }
  void validate() const;
};

// For every input channel c the slices of all filters form the rows of
// V^c [n_filters x k^2]. With V^c = U S V^T and s_j normalized to sum to 1,
//   salience_i = sum_c sum_j s_j |U_ij|.
// An all-zero bank yields all-zero saliences.
std::vector<double> operator_norm_salience(const FilterBank& bank);

// Number of singular values above rel_tol * sigma_max (0 for a zero matrix).
std::size_t significant_sv_count(const Map& response, double rel_tol = 1e-3);

// Per-column z-score; constant columns become zeros.
Map zscore_columns(const Map& m);

// Keeps the ceil(keep_fraction * n) highest scores; ties prefer the lower
// index. Throws ConfigError for an empty score list or keep_fraction
// outside (0,1].
std::vector<bool> prune_mask(const std::vector<double>& scores, double keep_fraction);

}  // namespace sirenedge
