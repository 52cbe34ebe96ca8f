#include "sirenedge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "sirenedge/error.hpp"

namespace sirenedge {
namespace {

bool overlaps(const Interval& a, const Interval& b) { return a.onset_s < b.offset_s && b.onset_s < a.offset_s; }

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

void require_sorted(std::span<const Interval> events, const char* which) {
  for (std::size_t i = 1; i < events.size(); ++i)
    if (events[i].onset_s < events[i - 1].onset_s)
      throw Error(ErrorCode::OrderViolation, std::string(which) + " events are not sorted by onset");
}

std::vector<Interval> sorted_intervals(std::vector<Interval> v) {
  std::stable_sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) { return a.onset_s < b.onset_s; });
  return v;
}

nlohmann::ordered_json to_json(const FrameMetrics& m) {
  return {{"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1},
          {"accuracy", m.accuracy},
          {"specificity", m.specificity},
          {"balanced_accuracy", m.balanced_accuracy},
          {"error_rate", m.error_rate},
          {"tp", m.counts.tp},
          {"fp", m.counts.fp},
          {"tn", m.counts.tn},
          {"fn", m.counts.fn}};
}

nlohmann::ordered_json to_json(const EventMetrics& m) {
  return {{"f_measure", m.f_measure},
          {"precision", m.precision},
          {"recall", m.recall},
          {"error_rate", m.error_rate},
          {"deletion_rate", m.deletion_rate},
          {"insertion_rate", m.insertion_rate},
          {"tp", m.counts.tp},
          {"fp", m.counts.fp},
          {"fn", m.counts.fn}};
}

nlohmann::ordered_json to_json(const FpStats& s) {
  return {{"afps", s.afps},         {"afpsp", s.afpsp}, {"ac_frames", s.ac_frames},
          {"fp_event_count", s.fp_event_count}, {"ac_events", s.ac_events}, {"mrl", s.mrl},
          {"arl", s.arl}};
}

std::vector<Interval> refs_for(std::span<const GroundTruthEvent> refs, const std::string& clip_id) {
  std::vector<Interval> out;
  for (const auto& r : refs)
    if (r.clip_id == clip_id) out.push_back({r.onset_s, r.offset_s});
  return sorted_intervals(std::move(out));
}

nlohmann::ordered_json evaluate_section(std::span<const EvalClip> clips, std::span<const GroundTruthEvent> refs,
                                        const EvalOptions& o) {
  ConfusionCounts frames;
  MatchCounts matches;
  std::vector<ClipRecords> fp_input;
  std::size_t ref_events = 0;
  std::size_t ref_clips = 0;
  for (const auto& clip : clips) {
    const auto ref = refs_for(refs, clip.clip_id);
    ref_events += ref.size();
    ref_clips += ref.empty() ? 0 : 1;
    const auto pred = sorted_intervals(intervals_of(clip.events));
    const auto c = confusion(discretize(pred, clip.duration_s, o.resolution_s),
                             discretize(ref, clip.duration_s, o.resolution_s));
    frames.tp += c.tp;
    frames.fp += c.fp;
    frames.tn += c.tn;
    frames.fn += c.fn;
    const auto m = match_events(pred, ref, o.collar_s, o.offset_ratio);
    matches.tp += m.tp;
    matches.fp += m.fp;
    matches.fn += m.fn;
    fp_input.push_back({clip.clip_id, clip.records, clip.duration_s});
  }
  nlohmann::ordered_json section;
  section["clips"] = clips.size();
  section["ref_clips"] = ref_clips;
  section["ref_events"] = ref_events;
  section["frame"] = to_json(frame_metrics_from(frames));
  try {
    section["event"] = to_json(event_metrics(matches));
  } catch (const Error& e) {
    section["event"] = {{"error", e.what()}, {"tp", matches.tp}, {"fp", matches.fp}, {"fn", matches.fn}};
  }
  section["fp"] = to_json(fp_analysis(fp_input, refs, o.fp_threshold, o.min_run));
  return section;
}

}  // namespace

std::vector<Interval> intervals_of(std::span<const DetectionEvent> events) {
  std::vector<Interval> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back({e.onset_s, e.offset_s});
  return out;
}

std::vector<Interval> intervals_of(std::span<const GroundTruthEvent> events) {
  std::vector<Interval> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back({e.onset_s, e.offset_s});
  return out;
}

std::size_t grid_length(double duration_s, double resolution_s) {
  if (!(resolution_s > 0.0)) throw Error(ErrorCode::ConfigError, "resolution must be positive");
  if (!(duration_s > 0.0)) return 0;
  // The tolerance keeps 0.5 / 0.1 = 5.000000000000001 from adding a cell.
  return static_cast<std::size_t>(std::ceil(duration_s / resolution_s - 1e-9));
}

FrameGrid discretize(std::span<const Interval> intervals, double duration_s, double resolution_s) {
  FrameGrid grid{resolution_s, std::vector<std::uint8_t>(grid_length(duration_s, resolution_s), 0)};
  for (std::size_t i = 0; i < grid.activations.size(); ++i) {
    const Interval cell{static_cast<double>(i) * resolution_s, static_cast<double>(i + 1) * resolution_s};
    for (const auto& iv : intervals)
      if (overlaps(cell, iv)) {
        grid.activations[i] = 1;
        break;
      }
  }
  return grid;
}

std::vector<Interval> record_spans(std::span<const InferenceRecord> records, double end_s) {
  std::vector<Interval> spans;
  spans.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    double stop;
    if (i + 1 < records.size())
      stop = records[i + 1].t_start_s;
    else if (end_s > records[i].t_start_s)
      stop = end_s;
    else if (i > 0)
      stop = records[i].t_start_s + (records[i].t_start_s - records[i - 1].t_start_s);
    else
      stop = records[i].t_start_s;
    spans.push_back({records[i].t_start_s, stop});
  }
  return spans;
}

FrameGrid discretize_records(std::span<const InferenceRecord> records, double duration_s, double resolution_s,
                             double threshold) {
  FrameGrid grid{resolution_s, std::vector<std::uint8_t>(grid_length(duration_s, resolution_s), 0)};
  const auto spans = record_spans(records, duration_s);
  std::size_t k = 0;
  for (std::size_t i = 0; i < grid.activations.size(); ++i) {
    const double mid = (static_cast<double>(i) + 0.5) * resolution_s;
    while (k < spans.size() && spans[k].offset_s <= mid) ++k;
    if (k < spans.size() && spans[k].onset_s <= mid && records[k].raw_p > threshold) grid.activations[i] = 1;
  }
  return grid;
}

ConfusionCounts confusion(const FrameGrid& pred, const FrameGrid& ref) {
  if (pred.activations.size() != ref.activations.size() || pred.resolution_s != ref.resolution_s)
    throw Error(ErrorCode::GridMismatch, "grids differ in length or resolution");
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.activations.size(); ++i) {
    const bool p = pred.activations[i] != 0;
    const bool r = ref.activations[i] != 0;
    if (p && r) ++c.tp;
    else if (p) ++c.fp;
    else if (r) ++c.fn;
    else ++c.tn;
  }
  return c;
}

FrameMetrics frame_metrics_from(const ConfusionCounts& c) {
  FrameMetrics m;
  m.counts = c;
  const double tp = static_cast<double>(c.tp);
  const double fp = static_cast<double>(c.fp);
  const double tn = static_cast<double>(c.tn);
  const double fn = static_cast<double>(c.fn);
  const double n = tp + fp + tn + fn;
  m.precision = ratio(tp, tp + fp);
  m.recall = ratio(tp, tp + fn);
  m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
  m.accuracy = ratio(tp + tn, n);
  m.specificity = ratio(tn, tn + fp);
  m.balanced_accuracy = (m.recall + m.specificity) / 2.0;
  m.error_rate = ratio(fp + fn, n);
  return m;
}

FrameMetrics frame_metrics(const FrameGrid& pred, const FrameGrid& ref) {
  return frame_metrics_from(confusion(pred, ref));
}

bool events_match(const Interval& pred, const Interval& ref, double onset_collar_s, double offset_ratio) {
  const double offset_tol = std::max(onset_collar_s, offset_ratio * (ref.offset_s - ref.onset_s));
  return std::abs(pred.onset_s - ref.onset_s) <= onset_collar_s &&
         std::abs(pred.offset_s - ref.offset_s) <= offset_tol;
}

MatchCounts match_events(std::span<const Interval> pred, std::span<const Interval> ref, double onset_collar_s,
                         double offset_ratio) {
  if (!(onset_collar_s > 0.0)) throw Error(ErrorCode::ConfigError, "collar must be positive");
  require_sorted(pred, "predicted");
  require_sorted(ref, "reference");
  std::vector<bool> taken(ref.size(), false);
  MatchCounts c;
  for (const auto& p : pred) {
    bool matched = false;
    for (std::size_t j = 0; j < ref.size() && !matched; ++j) {
      if (!taken[j] && events_match(p, ref[j], onset_collar_s, offset_ratio)) {
        taken[j] = true;
        matched = true;
      }
    }
    matched ? ++c.tp : ++c.fp;
  }
  c.fn = ref.size() - c.tp;
  return c;
}

EventMetrics event_metrics(const MatchCounts& counts) {
  const std::size_t n = counts.tp + counts.fn;
  if (n == 0 && counts.fp > 0)
    throw Error(ErrorCode::UndefinedRate,
                "insertion rate is undefined with no reference events and " + std::to_string(counts.fp) +
                    " predicted events");
  EventMetrics m;
  m.counts = counts;
  const double tp = static_cast<double>(counts.tp);
  m.precision = ratio(tp, tp + static_cast<double>(counts.fp));
  m.recall = ratio(tp, static_cast<double>(n));
  m.f_measure = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
  m.deletion_rate = ratio(static_cast<double>(counts.fn), static_cast<double>(n));
  m.insertion_rate = ratio(static_cast<double>(counts.fp), static_cast<double>(n));
  m.error_rate = m.deletion_rate + m.insertion_rate;
  return m;
}

std::vector<GroundTruthEvent> filter_ftp(std::span<const GroundTruthEvent> refs) {
  std::vector<GroundTruthEvent> out;
  for (const auto& r : refs)
    if (!r.ftp) out.push_back(r);
  return out;
}

std::set<std::string> ftp_only_clips(std::span<const GroundTruthEvent> refs) {
  std::map<std::string, bool> all_ftp;
  for (const auto& r : refs) {
    auto [it, inserted] = all_ftp.emplace(r.clip_id, r.ftp);
    if (!inserted) it->second = it->second && r.ftp;
  }
  std::set<std::string> out;
  for (const auto& [clip, flagged] : all_ftp)
    if (flagged) out.insert(clip);
  return out;
}

std::vector<bool> fp_flags(std::span<const InferenceRecord> records, std::span<const Interval> refs, double end_s,
                           double fp_threshold) {
  const auto spans = record_spans(records, end_s);
  std::vector<bool> flags(records.size(), false);
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!(records[i].raw_p > fp_threshold)) continue;
    flags[i] = std::none_of(refs.begin(), refs.end(), [&](const Interval& r) { return overlaps(spans[i], r); });
  }
  return flags;
}

FpStats fp_analysis(std::span<const ClipRecords> clips, std::span<const GroundTruthEvent> refs, double fp_threshold,
                    std::size_t min_run) {
  FpStats s;
  if (clips.empty()) return s;
  double fp_frames_total = 0.0;
  double percent_sum = 0.0;
  double conf_sum = 0.0;
  double run_conf_sum = 0.0;
  double run_len_sum = 0.0;
  for (const auto& clip : clips) {
    const auto ref = refs_for(refs, clip.clip_id);
    const auto flags = fp_flags(clip.records, ref, clip.duration_s, fp_threshold);
    std::size_t fp_count = 0;
    std::size_t run = 0;
    double run_conf = 0.0;
    auto close_run = [&] {
      if (run >= min_run && run > 0) {
        ++s.fp_event_count;
        s.mrl = std::max(s.mrl, run);
        run_len_sum += static_cast<double>(run);
        run_conf_sum += run_conf / static_cast<double>(run);
      }
      run = 0;
      run_conf = 0.0;
    };
    for (std::size_t i = 0; i < flags.size(); ++i) {
      if (flags[i]) {
        ++fp_count;
        conf_sum += clip.records[i].raw_p;
        ++run;
        run_conf += clip.records[i].raw_p;
      } else {
        close_run();
      }
    }
    close_run();
    fp_frames_total += static_cast<double>(fp_count);
    if (!clip.records.empty())
      percent_sum += 100.0 * static_cast<double>(fp_count) / static_cast<double>(clip.records.size());
  }
  const double n_clips = static_cast<double>(clips.size());
  s.afps = fp_frames_total / n_clips;
  s.afpsp = percent_sum / n_clips;
  s.ac_frames = ratio(conf_sum, fp_frames_total);
  s.arl = ratio(run_len_sum, static_cast<double>(s.fp_event_count));
  s.ac_events = ratio(run_conf_sum, static_cast<double>(s.fp_event_count));
  return s;
}

nlohmann::ordered_json evaluate(std::span<const EvalClip> clips, std::span<const GroundTruthEvent> refs,
                                const EvalOptions& options) {
  nlohmann::ordered_json report;
  report["options"] = {{"resolution_s", options.resolution_s},
                       {"collar_s", options.collar_s},
                       {"offset_ratio", options.offset_ratio},
                       {"fp_threshold", options.fp_threshold},
                       {"min_run", options.min_run}};
  report["all"] = evaluate_section(clips, refs, options);
  if (options.ftp_filter) {
    // Predictions on clips that lose all their annotations stay in the
    // evaluation and count as insertions.
    const auto filtered = filter_ftp(refs);
    report["ftp_filtered"] = evaluate_section(clips, filtered, options);
  }
  return report;
}

std::string format_report(const nlohmann::ordered_json& report) {
  std::ostringstream out;
  auto number = [](const nlohmann::ordered_json& v) {
    if (v.is_number_float()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", v.get<double>());
      return std::string(buf);
    }
    return v.dump();
  };
  for (const char* name : {"all", "ftp_filtered"}) {
    if (!report.contains(name)) continue;
    const auto& sec = report[name];
    out << "[" << name << "] clips=" << sec["clips"].dump() << " ref_events=" << sec["ref_events"].dump() << "\n";
    for (const char* part : {"frame", "event", "fp"}) {
      out << "  " << part << ":";
      for (const auto& [k, v] : sec[part].items()) out << " " << k << "=" << (v.is_string() ? v.get<std::string>() : number(v));
      out << "\n";
    }
  }
  return out.str();
}

}  // namespace sirenedge
