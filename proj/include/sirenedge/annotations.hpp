#pragma once

// Ground-truth annotation CSV: header `clip_id,onset_s,offset_s,ftp`,
// ftp in {0,1} marking a suspected mis-annotated (false true positive) clip.

#include <filesystem>
#include <istream>
#include <vector>

#include "sirenedge/core.hpp"

namespace sirenedge {

std::vector<GroundTruthEvent> read_annotations(std::istream& in);
std::vector<GroundTruthEvent> read_annotations(const std::filesystem::path& path);

void write_annotations(const std::vector<GroundTruthEvent>& events, const std::filesystem::path& path);

}  // namespace sirenedge
