#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "sirenedge/core.hpp"

namespace sirenedge {

// Reads a RIFF/WAVE file holding 16-bit integer PCM or 32-bit IEEE float
// samples (plain or WAVE_FORMAT_EXTENSIBLE). Channels are averaged to mono,
// integer PCM is divided by 2^(bits-1). The sample rate is kept as stored.
AudioClip load_wav(const std::filesystem::path& path);

// Same as load_wav but over an in-memory image of the file.
AudioClip parse_wav(std::span<const std::byte> bytes);

enum class WavEncoding { Pcm16, Float32 };

// Writes a mono clip. Pcm16 rounds to the nearest step and saturates.
void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavEncoding encoding = WavEncoding::Pcm16);

// Encodes interleaved samples; `interleaved.size()` must be a multiple of
// `channels`.
std::vector<std::byte> encode_wav(std::span<const float> interleaved, int channels,
                                  int sample_rate_hz, WavEncoding encoding = WavEncoding::Pcm16);

}  // namespace sirenedge
