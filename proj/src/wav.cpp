#include "sirenedge/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>

#include "sirenedge/error.hpp"

namespace sirenedge {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(std::span<const std::byte> b, std::size_t at) {
  return static_cast<std::uint16_t>(std::to_integer<unsigned>(b[at]) |
                                    (std::to_integer<unsigned>(b[at + 1]) << 8));
}

std::uint32_t read_u32(std::span<const std::byte> b, std::size_t at) {
  return std::to_integer<std::uint32_t>(b[at]) | (std::to_integer<std::uint32_t>(b[at + 1]) << 8) |
         (std::to_integer<std::uint32_t>(b[at + 2]) << 16) |
         (std::to_integer<std::uint32_t>(b[at + 3]) << 24);
}

bool tag_is(std::span<const std::byte> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

FmtChunk parse_fmt(std::span<const std::byte> chunk) {
  if (chunk.size() < 16) throw Error(ErrorCode::ParseError, "fmt chunk shorter than 16 bytes");
  FmtChunk fmt;
  fmt.format = read_u16(chunk, 0);
  fmt.channels = read_u16(chunk, 2);
  fmt.sample_rate = read_u32(chunk, 4);
  fmt.block_align = read_u16(chunk, 12);
  fmt.bits = read_u16(chunk, 14);
  if (fmt.format == kFormatExtensible) {
    if (chunk.size() < 40) throw Error(ErrorCode::ParseError, "truncated WAVE_FORMAT_EXTENSIBLE");
    // The first two bytes of the sub-format GUID carry the actual codec.
    fmt.format = read_u16(chunk, 24);
  }
  if (fmt.channels == 0) throw Error(ErrorCode::ParseError, "zero channels");
  if (fmt.sample_rate == 0) throw Error(ErrorCode::ParseError, "zero sample rate");
  return fmt;
}

void put_u16(std::vector<std::byte>& out, std::uint16_t v) {
  out.push_back(std::byte(v & 0xFF));
  out.push_back(std::byte(v >> 8));
}

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::byte((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::byte>& out, const char* tag) {
  for (int i = 0; i < 4; ++i) out.push_back(std::byte(tag[i]));
}

}  // namespace

AudioClip parse_wav(std::span<const std::byte> bytes) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE"))
    throw Error(ErrorCode::ParseError, "not a RIFF/WAVE container");

  std::optional<FmtChunk> fmt;
  std::optional<std::span<const std::byte>> data;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    // Some writers leave a bogus size on the final data chunk; clamp to EOF.
    const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
    if (tag_is(bytes, pos, "fmt ")) {
      if (avail < size) throw Error(ErrorCode::ParseError, "truncated fmt chunk");
      fmt = parse_fmt(bytes.subspan(body, avail));
    } else if (tag_is(bytes, pos, "data")) {
      data = bytes.subspan(body, avail);
    }
    pos = body + size + (size & 1u);
  }
  if (!fmt) throw Error(ErrorCode::ParseError, "missing fmt chunk");
  if (!data) throw Error(ErrorCode::ParseError, "missing data chunk");

  const bool pcm16 = fmt->format == kFormatPcm && fmt->bits == 16;
  const bool float32 = fmt->format == kFormatFloat && fmt->bits == 32;
  if (!pcm16 && !float32)
    throw Error(ErrorCode::UnsupportedFormat, "format tag " + std::to_string(fmt->format) + " with " +
                                                  std::to_string(fmt->bits) + " bits per sample");

  const std::size_t bytes_per_sample = fmt->bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt->channels;
  const std::size_t n_frames = data->size() / frame_bytes;

  AudioClip clip;
  clip.sample_rate_hz = static_cast<int>(fmt->sample_rate);
  clip.samples.resize(n_frames);
  const double inv_channels = 1.0 / fmt->channels;
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < fmt->channels; ++c) {
      const std::size_t at = i * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        acc += static_cast<std::int16_t>(read_u16(*data, at)) / 32768.0;
      } else {
        const float v = std::bit_cast<float>(read_u32(*data, at));
        acc += std::clamp(v, -1.0f, 1.0f);
      }
    }
    clip.samples[i] = static_cast<float>(acc * inv_channels);
  }
  return clip;
}

AudioClip load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_wav(std::as_bytes(std::span<const char>(raw)));
}

std::vector<std::byte> encode_wav(std::span<const float> interleaved, int channels,
                                  int sample_rate_hz, WavEncoding encoding) {
  if (channels <= 0 || interleaved.size() % static_cast<std::size_t>(channels) != 0)
    throw Error(ErrorCode::ConfigError, "sample count is not a multiple of the channel count");
  const bool pcm = encoding == WavEncoding::Pcm16;
  const std::uint16_t bits = pcm ? 16 : 32;
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(interleaved.size() * (bits / 8));

  std::vector<std::byte> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, pcm ? kFormatPcm : kFormatFloat);
  put_u16(out, static_cast<std::uint16_t>(channels));
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(sample_rate_hz * channels * (bits / 8)));
  put_u16(out, static_cast<std::uint16_t>(channels * (bits / 8)));
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (float s : interleaved) {
    if (pcm) {
      const double scaled = std::round(static_cast<double>(s) * 32768.0);
      put_u16(out, static_cast<std::uint16_t>(
                       static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0))));
    } else {
      put_u32(out, std::bit_cast<std::uint32_t>(s));
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip, WavEncoding encoding) {
  const auto bytes = encode_wav(clip.samples, 1, clip.sample_rate_hz, encoding);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

}  // namespace sirenedge
