#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

#include "sirenedge/core.hpp"

namespace sirenedge {

struct Transition {
  enum class Kind { Onset, Offset };
  Kind kind;
  double t_s;

  friend bool operator==(const Transition&, const Transition&) = default;
};

// Event decision state machine: moving-average smoothing of the frame
// probabilities followed by consecutive-frame validation with symmetric
// hysteresis (onset after K frames at or above threshold, offset after R
// frames below it).
class DecisionMachine {
 public:
  enum class Phase { Idle, Active };

  explicit DecisionMachine(DecisionConfig config = {});

  // Pushes raw_p into the smoothing window and returns the window mean.
  double smooth(double raw_p);

  // Smooths record.raw_p, stores the result in record.smoothed_p and
  // advances the state machine. Throws OrderViolation when records are not
  // in strictly increasing time order.
  std::optional<Transition> step(InferenceRecord& record);

  // Closes an open event at end_t and returns every completed event.
  std::vector<DetectionEvent> finalize(double end_t);

  const std::vector<DetectionEvent>& events() const { return events_; }
  Phase phase() const { return phase_; }
  const DecisionConfig& config() const { return config_; }

  // Applied between frames; the smoothing window keeps its contents.
  void set_threshold(double threshold);

 private:
  struct FrameSummary {
    double t_s;
    double smoothed_p;
  };

  DecisionConfig config_;
  std::deque<double> recent_p_;
  std::size_t consec_above_ = 0;
  std::size_t consec_below_ = 0;
  Phase phase_ = Phase::Idle;
  std::optional<double> last_t_;
  // Frames of the current candidate run (Idle) or of the open event (Active).
  std::vector<FrameSummary> run_;
  std::size_t below_start_ = 0;  // index into run_ of the current below-threshold run
  std::vector<DetectionEvent> events_;
};

}  // namespace sirenedge
