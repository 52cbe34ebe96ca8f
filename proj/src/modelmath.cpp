#include "sirenedge/modelmath.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <Eigen/SVD>

#include "sirenedge/error.hpp"

namespace sirenedge {

void SchedulerConfig::validate() const {
  if (!(eta_min > 0.0 && eta_init > 0.0 && eta_max > 0.0))
    throw Error(ErrorCode::ConfigError, "learning rates must be positive");
  if (!(eta_min <= eta_init && eta_init <= eta_max))
    throw Error(ErrorCode::ConfigError, "need eta_min <= eta_init <= eta_max");
  if (t_cycle < 1) throw Error(ErrorCode::ConfigError, "t_cycle must be >= 1");
  if (t_warmup >= t_cycle) throw Error(ErrorCode::ConfigError, "t_warmup must be < t_cycle");
}

double lr_at_step(const SchedulerConfig& cfg, std::uint64_t t) {
  cfg.validate();
  const std::uint64_t tc = t % cfg.t_cycle;
  if (tc <= cfg.t_warmup) {
    if (cfg.t_warmup == 0) return cfg.eta_init;
    return cfg.eta_init + (static_cast<double>(tc) / static_cast<double>(cfg.t_warmup)) * (cfg.eta_max - cfg.eta_init);
  }
  const double frac = static_cast<double>(tc - cfg.t_warmup) / static_cast<double>(cfg.t_cycle - cfg.t_warmup);
  return cfg.eta_min + 0.5 * (cfg.eta_max - cfg.eta_min) * (1.0 + std::cos(std::numbers::pi * frac));
}

AdamState AdamState::zeros(std::size_t n) {
  AdamState s;
  s.theta.assign(n, 0.0);
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  return s;
}

AdamState adam_step(AdamState s, const std::vector<double>& grad, double eta) {
  const std::size_t n = s.theta.size();
  if (grad.size() != n || s.m.size() != n || s.v.size() != n)
    throw Error(ErrorCode::ShapeError, "theta, m, v and grad must have the same length");
  s.t += 1;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i] + s.lambda * s.theta[i];
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g;
    const double m_hat = s.m[i] / bc1;
    const double v_hat = s.v[i] / bc2;
    s.theta[i] -= eta * m_hat / (std::sqrt(v_hat) + s.eps);
  }
  return s;
}

double bce_loss(double p, int y) {
  const double q = std::clamp(p, kBceClamp, 1.0 - kBceClamp);
  return y != 0 ? -std::log(q) : -std::log(1.0 - q);
}

double mel_centroid(const MelFilter& filter) {
  if (filter.weights.size() != filter.center_freqs_hz.size())
    throw Error(ErrorCode::ShapeError, "weights and centre frequencies differ in length");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < filter.weights.size(); ++i) {
    num += filter.center_freqs_hz[i] * filter.weights[i];
    den += filter.weights[i];
  }
  if (den == 0.0) throw Error(ErrorCode::DegenerateFilter, "filter weights sum to zero");
  return num / den;
}

Tensor Tensor::of(std::vector<std::size_t> shape, std::vector<double> data) {
  Tensor t{std::move(shape), std::move(data)};
  if (t.size() != t.data.size()) throw Error(ErrorCode::ShapeError, "data does not match shape");
  return t;
}

std::size_t Tensor::size() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor guided_backprop_gate(const Tensor& x, const Tensor& delta) {
  if (x.shape != delta.shape || x.data.size() != delta.data.size())
    throw Error(ErrorCode::ShapeError, "activation and gradient shapes differ");
  Tensor out{delta.shape, std::vector<double>(delta.data.size(), 0.0)};
  for (std::size_t i = 0; i < x.data.size(); ++i)
    if (x.data[i] > 0.0 && delta.data[i] > 0.0) out.data[i] = delta.data[i];
  return out;
}

Map upsample_bilinear(const Map& m, Eigen::Index rows, Eigen::Index cols) {
  if (m.size() == 0 || rows <= 0 || cols <= 0) throw Error(ErrorCode::ShapeError, "empty map");
  Map out(rows, cols);
  auto source_coord = [](Eigen::Index dst, Eigen::Index dst_n, Eigen::Index src_n, Eigen::Index& i0,
                         Eigen::Index& i1, double& w) {
    double s = (static_cast<double>(dst) + 0.5) * static_cast<double>(src_n) / static_cast<double>(dst_n) - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src_n - 1));
    i0 = static_cast<Eigen::Index>(std::floor(s));
    i1 = std::min<Eigen::Index>(i0 + 1, src_n - 1);
    w = s - static_cast<double>(i0);
  };
  for (Eigen::Index r = 0; r < rows; ++r) {
    Eigen::Index r0, r1;
    double wr;
    source_coord(r, rows, m.rows(), r0, r1, wr);
    for (Eigen::Index c = 0; c < cols; ++c) {
      Eigen::Index c0, c1;
      double wc;
      source_coord(c, cols, m.cols(), c0, c1, wc);
      const double top = (1.0 - wc) * m(r0, c0) + wc * m(r0, c1);
      const double bottom = (1.0 - wc) * m(r1, c0) + wc * m(r1, c1);
      out(r, c) = (1.0 - wr) * top + wr * bottom;
    }
  }
  return out;
}

Map minmax_normalize(const Map& m) {
  const double lo = m.minCoeff();
  const double hi = m.maxCoeff();
  if (!(hi > lo)) return Map::Zero(m.rows(), m.cols());
  return (m.array() - lo) / (hi - lo);
}

std::vector<double> softmax(const std::vector<double>& scores) {
  if (scores.empty()) return {};
  const double top = *std::max_element(scores.begin(), scores.end());
  std::vector<double> out(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) sum += out[i] = std::exp(scores[i] - top);
  for (double& v : out) v /= sum;
  return out;
}

ScoreCamResult score_cam(const std::vector<Map>& maps, const Map& input,
                         const std::function<double(const Map&)>& score_fn) {
  if (maps.empty()) throw Error(ErrorCode::EmptyMaps, "score_cam needs at least one activation map");
  std::vector<Map> norm;
  std::vector<double> scores;
  norm.reserve(maps.size());
  for (const auto& a : maps) {
    norm.push_back(minmax_normalize(upsample_bilinear(a, input.rows(), input.cols())));
    scores.push_back(score_fn(input.cwiseProduct(norm.back())));
  }
  ScoreCamResult result{softmax(scores), Map::Zero(input.rows(), input.cols())};
  for (std::size_t k = 0; k < norm.size(); ++k) result.cam += result.weights[k] * norm[k];
  return result;
}

void FilterBank::validate() const {
  if (n_filters < 1 || in_channels < 1 || k < 1)
    throw Error(ErrorCode::ShapeError, "filter bank dimensions must be >= 1");
  if (weights.size() != n_filters * in_channels * k * k)
    throw Error(ErrorCode::ShapeError, "filter bank weight count does not match its shape");
}

std::vector<double> operator_norm_salience(const FilterBank& bank) {
  bank.validate();
  const auto n = static_cast<Eigen::Index>(bank.n_filters);
  const auto kk = static_cast<Eigen::Index>(bank.k * bank.k);
  std::vector<double> salience(bank.n_filters, 0.0);
  for (std::size_t c = 0; c < bank.in_channels; ++c) {
    Map v(n, kk);
    for (Eigen::Index f = 0; f < n; ++f)
      for (Eigen::Index e = 0; e < kk; ++e)
        v(f, e) = bank.at(static_cast<std::size_t>(f), c, static_cast<std::size_t>(e) / bank.k,
                          static_cast<std::size_t>(e) % bank.k);
    Eigen::JacobiSVD<Map> svd(v, Eigen::ComputeThinU);
    const auto& sigma = svd.singularValues();
    const double total = sigma.sum();
    if (!(total > 0.0)) continue;
    const Map& u = svd.matrixU();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < sigma.size(); ++j)
        salience[static_cast<std::size_t>(i)] += sigma(j) / total * std::abs(u(i, j));
  }
  return salience;
}

std::size_t significant_sv_count(const Map& response, double rel_tol) {
  if (response.size() == 0) throw Error(ErrorCode::ShapeError, "response matrix is empty");
  Eigen::JacobiSVD<Map> svd(response);
  const auto& sigma = svd.singularValues();
  if (sigma.size() == 0 || !(sigma(0) > 0.0)) return 0;
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) > rel_tol * sigma(0)) ++count;
  return count;
}

Map zscore_columns(const Map& m) {
  Map out(m.rows(), m.cols());
  const double rows = static_cast<double>(m.rows());
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    const double mean = m.col(c).mean();
    const double var = (m.col(c).array() - mean).square().sum() / rows;
    if (var > 0.0)
      out.col(c) = (m.col(c).array() - mean) / std::sqrt(var);
    else
      out.col(c).setZero();
  }
  return out;
}

std::vector<bool> prune_mask(const std::vector<double>& scores, double keep_fraction) {
  if (scores.empty()) throw Error(ErrorCode::ConfigError, "no scores to prune");
  if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
    throw Error(ErrorCode::ConfigError, "keep fraction must lie in (0,1]");
  const auto n = scores.size();
  // The small epsilon absorbs representation error such as 2/3 * 3 = 2.0000000000000004.
  const auto keep = std::min(n, static_cast<std::size_t>(std::ceil(keep_fraction * static_cast<double>(n) - 1e-9)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<bool> mask(n, false);
  for (std::size_t i = 0; i < keep; ++i) mask[order[i]] = true;
  return mask;
}

}  // namespace sirenedge
