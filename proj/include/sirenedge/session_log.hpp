#pragma once

// JSONL session log. One JSON object per line:
//   {"type":"session","clip_id":...,"sample_rate_hz":...,"duration_s":...}   (optional, first line)
//   {"type":"record","t":...,"frame_len":...,"p":...,"smoothed":...,"latency":...}
//   {"type":"event","onset":...,"offset":...,"peak":...,"n_frames":...}
// Doubles are written with round-trip precision so a reload is lossless.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "sirenedge/core.hpp"

namespace sirenedge {

struct SessionInfo {
  std::string clip_id;
  int sample_rate_hz = kDefaultSampleRate;
  double duration_s = 0.0;

  friend bool operator==(const SessionInfo&, const SessionInfo&) = default;
};

struct SessionLog {
  std::optional<SessionInfo> info;
  std::vector<InferenceRecord> records;
  std::vector<DetectionEvent> events;
};

nlohmann::json to_json(const InferenceRecord& record);
nlohmann::json to_json(const DetectionEvent& event);
nlohmann::json to_json(const SessionInfo& info);

void write_session_log(const std::vector<InferenceRecord>& records,
                       const std::vector<DetectionEvent>& events,
                       const std::filesystem::path& path,
                       const std::optional<SessionInfo>& info = std::nullopt);

SessionLog read_session_log(const std::filesystem::path& path);

}  // namespace sirenedge
