#include "sirenedge/decision.hpp"

#include <algorithm>
#include <string>

#include "sirenedge/error.hpp"

namespace sirenedge {

void DecisionConfig::validate() const {
  if (smoothing_window < 1) throw Error(ErrorCode::ConfigError, "smoothing_window must be >= 1");
  if (consecutive_required < 1)
    throw Error(ErrorCode::ConfigError, "consecutive_required must be >= 1");
  if (!(event_threshold > 0.0 && event_threshold < 1.0))
    throw Error(ErrorCode::ConfigError, "event_threshold must lie in (0,1)");
}

DecisionMachine::DecisionMachine(DecisionConfig config) : config_(config) { config_.validate(); }

void DecisionMachine::set_threshold(double threshold) {
  DecisionConfig next = config_;
  next.event_threshold = threshold;
  next.validate();
  config_ = next;
}

double DecisionMachine::smooth(double raw_p) {
  recent_p_.push_back(raw_p);
  if (recent_p_.size() > config_.smoothing_window) recent_p_.pop_front();
  // Summed oldest-first on every call so the result does not depend on
  // the history of a running accumulator.
  double sum = 0.0;
  for (double p : recent_p_) sum += p;
  return sum / static_cast<double>(recent_p_.size());
}

std::optional<Transition> DecisionMachine::step(InferenceRecord& record) {
  if (last_t_ && !(record.t_start_s > *last_t_))
    throw Error(ErrorCode::OrderViolation, "record at t=" + std::to_string(record.t_start_s) +
                                               " does not follow t=" + std::to_string(*last_t_));
  last_t_ = record.t_start_s;
  record.smoothed_p = smooth(record.raw_p);
  const bool above = record.smoothed_p >= config_.event_threshold;

  if (phase_ == Phase::Idle) {
    if (!above) {
      consec_above_ = 0;
      run_.clear();
      return std::nullopt;
    }
    run_.push_back({record.t_start_s, record.smoothed_p});
    if (++consec_above_ < config_.consecutive_required) return std::nullopt;
    consec_above_ = 0;
    consec_below_ = 0;
    phase_ = Phase::Active;
    return Transition{Transition::Kind::Onset, run_.front().t_s};
  }

  run_.push_back({record.t_start_s, record.smoothed_p});
  if (above) {
    consec_below_ = 0;
    return std::nullopt;
  }
  if (consec_below_ == 0) below_start_ = run_.size() - 1;
  if (++consec_below_ < config_.release()) return std::nullopt;

  DetectionEvent ev;
  ev.onset_s = run_.front().t_s;
  ev.offset_s = run_[below_start_].t_s;
  ev.n_frames = below_start_;
  for (std::size_t i = 0; i < below_start_; ++i) ev.peak_p = std::max(ev.peak_p, run_[i].smoothed_p);
  events_.push_back(ev);
  run_.clear();
  consec_below_ = 0;
  phase_ = Phase::Idle;
  return Transition{Transition::Kind::Offset, ev.offset_s};
}

std::vector<DetectionEvent> DecisionMachine::finalize(double end_t) {
  if (phase_ == Phase::Active) {
    if (!(end_t > run_.back().t_s))
      throw Error(ErrorCode::OrderViolation, "end time precedes the last frame of the open event");
    DetectionEvent ev;
    ev.onset_s = run_.front().t_s;
    ev.offset_s = end_t;
    ev.n_frames = run_.size();
    for (const auto& f : run_) ev.peak_p = std::max(ev.peak_p, f.smoothed_p);
    events_.push_back(ev);
    run_.clear();
    consec_below_ = 0;
    phase_ = Phase::Idle;
  }
  return events_;
}

}  // namespace sirenedge
