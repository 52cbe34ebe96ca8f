#include "sirenedge/sebf.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "sirenedge/error.hpp"

namespace sirenedge {
namespace {

constexpr char kMagic[4] = {'S', 'E', 'B', 'F'};

std::uint64_t read_le(std::span<const std::byte> b, std::size_t at, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) v |= std::to_integer<std::uint64_t>(b[at + i]) << (8 * i);
  return v;
}

void put_le(std::vector<std::byte>& out, std::uint64_t v, int width) {
  for (int i = 0; i < width; ++i) out.push_back(std::byte((v >> (8 * i)) & 0xFF));
}

}  // namespace

SebfArray parse_sebf(std::span<const std::byte> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw Error(ErrorCode::ParseError, "missing SEBF magic");
  const auto rank = static_cast<std::uint32_t>(read_le(bytes, 4, 4));
  if (rank == 0 || rank > 8) throw Error(ErrorCode::ParseError, "unsupported rank " + std::to_string(rank));
  std::size_t header = 8 + 4 * static_cast<std::size_t>(rank);
  if (bytes.size() < header) throw Error(ErrorCode::ParseError, "truncated SEBF header");
  SebfArray a;
  std::size_t count = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    a.dims.push_back(static_cast<std::uint32_t>(read_le(bytes, 8 + 4 * i, 4)));
    count *= a.dims.back();
  }
  if (bytes.size() != header + 8 * count)
    throw Error(ErrorCode::ParseError, "SEBF payload holds " + std::to_string(bytes.size() - header) +
                                           " bytes, shape needs " + std::to_string(8 * count));
  a.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) a.data[i] = std::bit_cast<double>(read_le(bytes, header + 8 * i, 8));
  return a;
}

SebfArray read_sebf(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_sebf(std::as_bytes(std::span<const char>(raw)));
}

std::vector<std::byte> encode_sebf(const SebfArray& a) {
  std::size_t count = 1;
  for (auto d : a.dims) count *= d;
  if (a.dims.empty() || count != a.data.size()) throw Error(ErrorCode::ShapeError, "data does not match dims");
  std::vector<std::byte> out;
  for (char c : kMagic) out.push_back(std::byte(c));
  put_le(out, a.dims.size(), 4);
  for (auto d : a.dims) put_le(out, d, 4);
  for (double v : a.data) put_le(out, std::bit_cast<std::uint64_t>(v), 8);
  return out;
}

void write_sebf(const std::filesystem::path& path, const SebfArray& array) {
  const auto bytes = encode_sebf(array);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

FilterBank filter_bank_from(const SebfArray& a) {
  if (a.dims.size() != 4 || a.dims[2] != a.dims[3])
    throw Error(ErrorCode::ShapeError, "filter bank must be [n_filters, in_channels, k, k]");
  FilterBank bank{a.dims[0], a.dims[1], a.dims[2], a.data};
  bank.validate();
  return bank;
}

std::vector<Map> response_matrices_from(const SebfArray& a) {
  if (a.dims.size() != 2 && a.dims.size() != 3)
    throw Error(ErrorCode::ShapeError, "response matrices must be [p, s] or [n, p, s]");
  const std::size_t n = a.dims.size() == 3 ? a.dims[0] : 1;
  const std::size_t p = a.dims[a.dims.size() - 2];
  const std::size_t s = a.dims.back();
  std::vector<Map> out;
  for (std::size_t m = 0; m < n; ++m) {
    Map r(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(s));
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < s; ++j)
        r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a.data[(m * p + i) * s + j];
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace sirenedge
