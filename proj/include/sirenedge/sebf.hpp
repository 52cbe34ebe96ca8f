#pragma once

// Portable binary array file: magic "SEBF", u32 rank, u32 dims[rank], then
// little-endian float64 values in row-major order.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sirenedge/modelmath.hpp"

namespace sirenedge {

struct SebfArray {
  std::vector<std::uint32_t> dims;
  std::vector<double> data;
};

SebfArray parse_sebf(std::span<const std::byte> bytes);
SebfArray read_sebf(const std::filesystem::path& path);
std::vector<std::byte> encode_sebf(const SebfArray& array);
void write_sebf(const std::filesystem::path& path, const SebfArray& array);

// Rank-4 array [n_filters, in_channels, k, k].
FilterBank filter_bank_from(const SebfArray& array);
// Rank-3 array [n, p, s] as n response matrices, or rank-2 [p, s] as one.
std::vector<Map> response_matrices_from(const SebfArray& array);

}  // namespace sirenedge
