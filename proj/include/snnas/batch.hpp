#pragma once

// Minibatch tensor and the NNAS binary batch file.
//
// Layout (all little-endian):
//   offset 0   char[4]  magic "NNAS"
//   offset 4   u16      version (1)
//   offset 6   u32      S (samples)
//   offset 10  u32      channels
//   offset 14  u32      height
//   offset 18  u32      width
//   offset 22  f32[S*channels*height*width], sample-major, then C, H, W.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "snnas/rng.hpp"

namespace snnas {

struct Batch {
  std::uint32_t samples = 0;
  std::uint32_t channels = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<float> data;  // [S][C][H][W]

  std::size_t sample_size() const { return std::size_t{channels} * height * width; }
  const float* sample(std::size_t s) const { return data.data() + s * sample_size(); }

  friend bool operator==(const Batch&, const Batch&) = default;
};

class BatchFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::array<char, 4> kBatchMagic{'N', 'N', 'A', 'S'};
inline constexpr std::uint16_t kBatchVersion = 1;
inline constexpr std::size_t kBatchHeaderBytes = 22;

namespace detail {

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
  using U = std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

template <typename T>
T get_le(const unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint32_t>;
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(U{p[i]} << (8 * i));
  return std::bit_cast<T>(bits);
}

}  // namespace detail

inline std::vector<unsigned char> encode_batch(const Batch& b) {
  if (b.data.size() != std::size_t{b.samples} * b.sample_size())
    throw BatchFormatError("batch data size does not match its dimensions");
  std::vector<unsigned char> out;
  out.reserve(kBatchHeaderBytes + b.data.size() * 4);
  out.insert(out.end(), kBatchMagic.begin(), kBatchMagic.end());
  detail::put_le(out, kBatchVersion);
  detail::put_le(out, b.samples);
  detail::put_le(out, b.channels);
  detail::put_le(out, b.height);
  detail::put_le(out, b.width);
  for (float v : b.data) detail::put_le(out, v);
  return out;
}

inline Batch decode_batch(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < kBatchHeaderBytes) throw BatchFormatError("truncated header");
  if (std::memcmp(bytes.data(), kBatchMagic.data(), 4) != 0) throw BatchFormatError("bad magic");
  const auto version = detail::get_le<std::uint16_t>(bytes.data() + 4);
  if (version != kBatchVersion)
    throw BatchFormatError("unsupported batch version " + std::to_string(version));
  Batch b;
  b.samples = detail::get_le<std::uint32_t>(bytes.data() + 6);
  b.channels = detail::get_le<std::uint32_t>(bytes.data() + 10);
  b.height = detail::get_le<std::uint32_t>(bytes.data() + 14);
  b.width = detail::get_le<std::uint32_t>(bytes.data() + 18);
  if (b.samples < 2) throw BatchFormatError("batch needs S >= 2 samples");
  if (b.channels == 0 || b.height == 0 || b.width == 0) throw BatchFormatError("zero dimension");
  const std::uint64_t count = std::uint64_t{b.samples} * b.channels * b.height * b.width;
  const std::uint64_t payload = bytes.size() - kBatchHeaderBytes;
  if (payload < count * 4) throw BatchFormatError("truncated payload");
  if (payload > count * 4) throw BatchFormatError("trailing bytes after payload");
  b.data.resize(count);
  const unsigned char* p = bytes.data() + kBatchHeaderBytes;
  for (std::uint64_t i = 0; i < count; ++i) b.data[i] = detail::get_le<float>(p + 4 * i);
  return b;
}

inline void save_batch(const Batch& b, const std::filesystem::path& path) {
  const auto bytes = encode_batch(b);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline Batch load_batch(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open batch file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_batch(bytes);
}

/// Deterministic pseudo-random samples in [0, 1).
inline Batch gen_synthetic_batch(std::uint32_t samples, std::uint32_t channels, std::uint32_t height,
                                 std::uint32_t width, std::uint64_t seed) {
  if (samples < 2) throw std::invalid_argument("synthetic batch needs S >= 2");
  Batch b{samples, channels, height, width, {}};
  b.data.resize(std::size_t{samples} * b.sample_size());
  std::mt19937_64 gen(splitmix64(seed));
  for (float& v : b.data) v = uniform01f(gen);
  return b;
}

/// FNV-1a over the encoded file bytes; identifies a batch in reports.
inline std::uint64_t batch_digest(const Batch& b) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : encode_batch(b)) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace snnas
