#include "sirenedge/annotations.hpp"

#include <charconv>
#include <fstream>
#include <string>
#include <string_view>

#include "sirenedge/error.hpp"

namespace sirenedge {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      cells.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return cells;
}

double parse_double(std::string_view cell, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc{} || ptr != cell.data() + cell.size())
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line_no) + ": bad number '" + std::string(cell) + "'");
  return v;
}

}  // namespace

std::vector<GroundTruthEvent> read_annotations(std::istream& in) {
  std::vector<GroundTruthEvent> events;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (!header_seen) {
      if (cells.size() != 4 || cells[0] != "clip_id" || cells[1] != "onset_s" ||
          cells[2] != "offset_s" || cells[3] != "ftp")
        throw Error(ErrorCode::ParseError, "expected header clip_id,onset_s,offset_s,ftp");
      header_seen = true;
      continue;
    }
    if (cells.size() != 4)
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected 4 fields");
    GroundTruthEvent ev;
    ev.clip_id = std::string(cells[0]);
    ev.onset_s = parse_double(cells[1], line_no);
    ev.offset_s = parse_double(cells[2], line_no);
    if (cells[3] == "1") {
      ev.ftp = true;
    } else if (cells[3] != "0") {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": ftp must be 0 or 1");
    }
    if (!(ev.offset_s > ev.onset_s) || ev.onset_s < 0.0)
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line_no) + ": need 0 <= onset_s < offset_s");
    events.push_back(std::move(ev));
  }
  if (!header_seen) throw Error(ErrorCode::ParseError, "empty annotation file");
  return events;
}

std::vector<GroundTruthEvent> read_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open annotations " + path.string());
  return read_annotations(in);
}

void write_annotations(const std::vector<GroundTruthEvent>& events,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "clip_id,onset_s,offset_s,ftp\n";
  const auto shortest = [](double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  };
  for (const auto& e : events)
    out << e.clip_id << ',' << shortest(e.onset_s) << ',' << shortest(e.offset_s) << ','
        << (e.ftp ? 1 : 0) << '\n';
}

}  // namespace sirenedge
