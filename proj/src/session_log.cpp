#include "sirenedge/session_log.hpp"

#include <fstream>

#include "sirenedge/error.hpp"

namespace sirenedge {

using nlohmann::json;

json to_json(const InferenceRecord& r) {
  return json{{"type", "record"},       {"t", r.t_start_s},      {"frame_len", r.frame_len_samples},
              {"p", r.raw_p},           {"smoothed", r.smoothed_p}, {"latency", r.wall_latency_s}};
}

json to_json(const DetectionEvent& e) {
  return json{{"type", "event"},
              {"onset", e.onset_s},
              {"offset", e.offset_s},
              {"peak", e.peak_p},
              {"n_frames", e.n_frames}};
}

json to_json(const SessionInfo& info) {
  return json{{"type", "session"},
              {"clip_id", info.clip_id},
              {"sample_rate_hz", info.sample_rate_hz},
              {"duration_s", info.duration_s}};
}

void write_session_log(const std::vector<InferenceRecord>& records,
                       const std::vector<DetectionEvent>& events,
                       const std::filesystem::path& path, const std::optional<SessionInfo>& info) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write session log " + path.string());
  if (info) out << to_json(*info).dump() << '\n';
  for (const auto& r : records) out << to_json(r).dump() << '\n';
  for (const auto& e : events) out << to_json(e).dump() << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

SessionLog read_session_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open session log " + path.string());
  SessionLog log;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "record") {
        log.records.push_back({j.at("t").get<double>(), j.at("frame_len").get<std::size_t>(),
                               j.at("p").get<double>(), j.at("smoothed").get<double>(),
                               j.at("latency").get<double>()});
      } else if (type == "event") {
        log.events.push_back({j.at("onset").get<double>(), j.at("offset").get<double>(),
                              j.at("peak").get<double>(), j.at("n_frames").get<std::size_t>()});
      } else if (type == "session") {
        log.info = SessionInfo{j.at("clip_id").get<std::string>(), j.at("sample_rate_hz").get<int>(),
                               j.at("duration_s").get<double>()};
      }
      // Unknown types (e.g. telemetry diag lines) are skipped.
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ParseError,
                  path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return log;
}

}  // namespace sirenedge
