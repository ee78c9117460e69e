#pragma once

// Little-endian encode/decode helpers shared by the trace and model formats.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "twinfeed/error.hpp"

namespace twinfeed::detail {

template <typename UInt>
void put_le(std::ostream& os, UInt v) {
  std::array<char, sizeof(UInt)> buf{};
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    buf[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  }
  os.write(buf.data(), buf.size());
}

inline void put_u32(std::ostream& os, std::uint32_t v) { put_le(os, v); }
inline void put_u64(std::ostream& os, std::uint64_t v) { put_le(os, v); }
inline void put_f64(std::ostream& os, double v) { put_le(os, std::bit_cast<std::uint64_t>(v)); }

template <typename UInt>
UInt get_le(std::istream& is, const char* what) {
  std::array<unsigned char, sizeof(UInt)> buf{};
  is.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (is.gcount() != static_cast<std::streamsize>(buf.size())) {
    throw ParseError(std::string("unexpected end of file reading ") + what);
  }
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(buf[i]) << (8 * i);
  return v;
}

inline std::uint32_t get_u32(std::istream& is, const char* what) {
  return get_le<std::uint32_t>(is, what);
}
inline std::uint64_t get_u64(std::istream& is, const char* what) {
  return get_le<std::uint64_t>(is, what);
}
inline double get_f64(std::istream& is, const char* what) {
  return std::bit_cast<double>(get_le<std::uint64_t>(is, what));
}

}  // namespace twinfeed::detail
