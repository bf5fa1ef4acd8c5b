#pragma once

#include "odtrec/tensor.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>

namespace odtrec {

/// Binary tensor container:
///   "ODTENSR1" | u64 n1 | u64 n2 | u64 n3 | n1*n2*n3 f64
/// All integers and reals little-endian, reals in DenseTensor3 layout.
namespace odt {

inline constexpr std::array<char, 8> kMagic{'O', 'D', 'T', 'E', 'N', 'S', 'R', '1'};
inline constexpr std::size_t kHeaderBytes = 8 + 3 * 8;

namespace detail {

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

inline std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
  return v;
}

}  // namespace detail

inline std::string encode(const DenseTensor3& t) {
  std::string out(kMagic.begin(), kMagic.end());
  const auto n = static_cast<std::uint64_t>(t.n());
  for (int d = 0; d < 3; ++d) detail::put_u64(out, n);
  out.reserve(kHeaderBytes + 8 * t.data().size());
  for (double x : t.data()) detail::put_u64(out, std::bit_cast<std::uint64_t>(x));
  return out;
}

inline DenseTensor3 decode(const std::string& bytes) {
  if (bytes.size() < kHeaderBytes) throw FormatError("ODT1: file shorter than the 32-byte header");
  if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) throw FormatError("ODT1: bad magic, expected ODTENSR1");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint64_t n1 = detail::get_u64(p + 8);
  const std::uint64_t n2 = detail::get_u64(p + 16);
  const std::uint64_t n3 = detail::get_u64(p + 24);
  if (n1 != n2 || n2 != n3)
    throw FormatError("ODT1: dimensions " + std::to_string(n1) + "x" + std::to_string(n2) + "x" + std::to_string(n3) +
                      " are not cubic");
  if (n1 == 0 || n1 > 4096) throw FormatError("ODT1: dimension " + std::to_string(n1) + " out of supported range");
  const std::uint64_t count = n1 * n1 * n1;
  if (bytes.size() != kHeaderBytes + 8 * count)
    throw FormatError("ODT1: payload holds " + std::to_string(bytes.size() - kHeaderBytes) + " bytes, expected " +
                      std::to_string(8 * count));
  std::vector<double> data(count);
  for (std::uint64_t t = 0; t < count; ++t) data[t] = std::bit_cast<double>(detail::get_u64(p + kHeaderBytes + 8 * t));
  return DenseTensor3(static_cast<int>(n1), std::move(data));
}

inline void write_file(const std::filesystem::path& path, const DenseTensor3& t) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  const std::string bytes = encode(t);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing " + path.string());
}

inline DenseTensor3 read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace odt
}  // namespace odtrec
