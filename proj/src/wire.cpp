#include "sirenedge/wire.hpp"

#include <bit>
#include <string>

#include "sirenedge/error.hpp"

namespace sirenedge::wire {
namespace {

void put_u32(std::byte* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out[i] = std::byte((v >> (8 * i)) & 0xFF);
}

std::uint32_t get_u32(const std::byte* in) {
  return std::to_integer<std::uint32_t>(in[0]) | (std::to_integer<std::uint32_t>(in[1]) << 8) |
         (std::to_integer<std::uint32_t>(in[2]) << 16) |
         (std::to_integer<std::uint32_t>(in[3]) << 24);
}

}  // namespace

std::vector<std::byte> encode_request(std::span<const float> frame) {
  std::vector<std::byte> out(4 + 4 * frame.size());
  put_u32(out.data(), static_cast<std::uint32_t>(frame.size()));
  for (std::size_t i = 0; i < frame.size(); ++i)
    put_u32(out.data() + 4 + 4 * i, std::bit_cast<std::uint32_t>(frame[i]));
  return out;
}

std::uint32_t decode_length(std::span<const std::byte, 4> prefix) { return get_u32(prefix.data()); }

std::vector<float> decode_request(std::span<const std::byte> bytes) {
  if (bytes.size() < 4) throw Error(ErrorCode::ProtocolError, "request shorter than its length prefix");
  const std::uint32_t n = get_u32(bytes.data());
  if (bytes.size() != 4 + 4 * static_cast<std::size_t>(n))
    throw Error(ErrorCode::ProtocolError, "request declares " + std::to_string(n) + " samples but carries " +
                                              std::to_string(bytes.size()) + " bytes");
  std::vector<float> frame(n);
  for (std::size_t i = 0; i < n; ++i) frame[i] = std::bit_cast<float>(get_u32(bytes.data() + 4 + 4 * i));
  return frame;
}

std::vector<std::byte> encode_response(float p) {
  std::vector<std::byte> out(kResponseBytes);
  put_u32(out.data(), std::bit_cast<std::uint32_t>(p));
  return out;
}

float decode_response(std::span<const std::byte> bytes) {
  if (bytes.size() != kResponseBytes)
    throw Error(ErrorCode::ProtocolError, "response must be exactly 4 bytes, got " + std::to_string(bytes.size()));
  return std::bit_cast<float>(get_u32(bytes.data()));
}

}  // namespace sirenedge::wire
