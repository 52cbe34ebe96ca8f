#pragma once

// Frame-wise and event-based detection metrics, FTP filtering and
// false-positive run analysis.

#include <cstddef>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sirenedge/core.hpp"

namespace sirenedge {

// Half-open time interval [onset_s, offset_s).
struct Interval {
  double onset_s = 0.0;
  double offset_s = 0.0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

std::vector<Interval> intervals_of(std::span<const DetectionEvent> events);
std::vector<Interval> intervals_of(std::span<const GroundTruthEvent> events);

struct FrameGrid {
  double resolution_s = 0.1;
  std::vector<std::uint8_t> activations;
};

// Number of cells covering a clip: ceil(duration / resolution).
std::size_t grid_length(double duration_s, double resolution_s);

// Cell i covers [i r, (i+1) r) and is 1 iff it overlaps some interval by a
// positive amount.
FrameGrid discretize(std::span<const Interval> intervals, double duration_s, double resolution_s = 0.1);

// Span attributed to each record: [t_i, t_{i+1}); the last record runs to
// end_s (or, if end_s does not lie past it, for one more record spacing).
std::vector<Interval> record_spans(std::span<const InferenceRecord> records, double end_s);

// Cell i is 1 iff the record whose span contains the cell midpoint has
// raw_p > threshold.
FrameGrid discretize_records(std::span<const InferenceRecord> records, double duration_s,
                             double resolution_s = 0.1, double threshold = 0.5);

struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

struct FrameMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  double specificity = 0.0;
  double balanced_accuracy = 0.0;
  double error_rate = 0.0;
  ConfusionCounts counts;
};

ConfusionCounts confusion(const FrameGrid& pred, const FrameGrid& ref);
FrameMetrics frame_metrics_from(const ConfusionCounts& c);
// Throws GridMismatch when lengths or resolutions differ.
FrameMetrics frame_metrics(const FrameGrid& pred, const FrameGrid& ref);

struct MatchCounts {
  std::size_t tp = 0, fp = 0, fn = 0;

  friend bool operator==(const MatchCounts&, const MatchCounts&) = default;
};

inline constexpr double kDefaultCollar = 0.2;
inline constexpr double kDefaultOffsetRatio = 0.5;

// True when pred may be paired with ref under the collar rule.
bool events_match(const Interval& pred, const Interval& ref, double onset_collar_s, double offset_ratio);

// Greedy one-to-one matching in onset order: each prediction takes the
// earliest unmatched reference it satisfies. Throws OrderViolation when
// either list is not sorted by onset, ConfigError when collar <= 0.
MatchCounts match_events(std::span<const Interval> pred, std::span<const Interval> ref,
                         double onset_collar_s = kDefaultCollar, double offset_ratio = kDefaultOffsetRatio);

struct EventMetrics {
  double f_measure = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double error_rate = 0.0;
  double deletion_rate = 0.0;
  double insertion_rate = 0.0;
  MatchCounts counts;
};

// Rates are relative to N = tp + fn reference events. Throws UndefinedRate
// when N = 0 and fp > 0.
EventMetrics event_metrics(const MatchCounts& counts);

// Drops FTP-flagged annotations.
std::vector<GroundTruthEvent> filter_ftp(std::span<const GroundTruthEvent> refs);
// Clips whose every annotation is FTP-flagged; they leave the evaluation set.
std::set<std::string> ftp_only_clips(std::span<const GroundTruthEvent> refs);

struct ClipRecords {
  std::string clip_id;
  std::vector<InferenceRecord> records;
  double duration_s = 0.0;
};

struct FpStats {
  double afps = 0.0;
  double afpsp = 0.0;
  double ac_frames = 0.0;
  std::size_t fp_event_count = 0;
  double ac_events = 0.0;
  std::size_t mrl = 0;
  double arl = 0.0;
};

// Per-record FP flags: raw_p > threshold and the record span overlaps no
// reference interval.
std::vector<bool> fp_flags(std::span<const InferenceRecord> records, std::span<const Interval> refs,
                           double end_s, double fp_threshold = 0.6);

FpStats fp_analysis(std::span<const ClipRecords> clips, std::span<const GroundTruthEvent> refs,
                    double fp_threshold = 0.6, std::size_t min_run = 3);

struct EvalOptions {
  double resolution_s = 0.1;
  double collar_s = kDefaultCollar;
  double offset_ratio = kDefaultOffsetRatio;
  double fp_threshold = 0.6;
  std::size_t min_run = 3;
  bool ftp_filter = false;
};

struct EvalClip {
  std::string clip_id;
  std::vector<InferenceRecord> records;
  std::vector<DetectionEvent> events;
  double duration_s = 0.0;
};

// Full report: frame metrics over pooled grids of predicted vs reference
// events, event metrics summed over clips, FP statistics. With ftp_filter a
// second section repeats everything on the FTP-filtered references. An
// undefined event rate is reported in place of the event section.
nlohmann::ordered_json evaluate(std::span<const EvalClip> clips, std::span<const GroundTruthEvent> refs,
                                const EvalOptions& options);

std::string format_report(const nlohmann::ordered_json& report);

}  // namespace sirenedge
