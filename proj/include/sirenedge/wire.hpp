#pragma once

// Wire format spoken with external model processes.
//   request:  u32 N (little-endian), then N IEEE-754 binary32 samples (little-endian)
//   response: one IEEE-754 binary32 probability (little-endian)

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sirenedge::wire {

inline constexpr std::size_t kResponseBytes = 4;

std::vector<std::byte> encode_request(std::span<const float> frame);

// Parses a complete request image. Throws ProtocolError on a length mismatch.
std::vector<float> decode_request(std::span<const std::byte> bytes);

// Reads only the 4-byte sample count prefix.
std::uint32_t decode_length(std::span<const std::byte, 4> prefix);

std::vector<std::byte> encode_response(float p);
float decode_response(std::span<const std::byte> bytes);

}  // namespace sirenedge::wire
