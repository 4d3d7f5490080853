#pragma once

// Little-endian stream helpers shared by the FW3D and FWCK codecs.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>

#include "fastwdm/errors.hpp"

namespace fastwdm::detail {

template <class UInt>
void write_le(std::ostream& os, UInt v) {
  std::array<char, sizeof(UInt)> buf{};
  for (std::size_t i = 0; i < sizeof(UInt); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(buf.data(), buf.size());
}

template <class UInt>
UInt read_le(std::istream& is, const std::string& what) {
  std::array<unsigned char, sizeof(UInt)> buf{};
  if (!is.read(reinterpret_cast<char*>(buf.data()), buf.size())) {
    throw IoError("truncated " + what);
  }
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(buf[i]) << (8 * i);
  return v;
}

inline void write_f32(std::ostream& os, float f) { write_le<std::uint32_t>(os, std::bit_cast<std::uint32_t>(f)); }
inline void write_f64(std::ostream& os, double f) { write_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(f)); }
inline float read_f32(std::istream& is, const std::string& what) {
  return std::bit_cast<float>(read_le<std::uint32_t>(is, what));
}
inline double read_f64(std::istream& is, const std::string& what) {
  return std::bit_cast<double>(read_le<std::uint64_t>(is, what));
}

inline void write_f32_block(std::ostream& os, std::span<const float> data) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size_bytes()));
  } else {
    for (float f : data) write_f32(os, f);
  }
}

inline void read_f32_block(std::istream& is, std::span<float> data, const std::string& what) {
  if constexpr (std::endian::native == std::endian::little) {
    if (!is.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size_bytes()))) {
      throw IoError("truncated " + what);
    }
  } else {
    for (float& f : data) f = read_f32(is, what);
  }
}

}  // namespace fastwdm::detail
