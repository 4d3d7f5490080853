#pragma once

// FW3D container: "FW3D" | u16 version=1 | u8 dtype=0 (float32) | u8 flags |
// u32 d0 | u32 d1 | u32 d2 | 4 reserved zero bytes (24-byte header) | float32 payload,
// axis 2 fastest. flags 0 = single volume; flags 1 = wavelet coefficient set: dims are
// the band dims, a float64 coefficient scale follows the header and the payload holds
// 8 bands.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "binary_io.hpp"
#include "fastwdm/tensor.hpp"

namespace fastwdm::detail {

inline constexpr char kFw3dMagic[4] = {'F', 'W', '3', 'D'};
inline constexpr std::uint16_t kFw3dVersion = 1;
inline constexpr std::uint8_t kDtypeFloat32 = 0;
inline constexpr std::uint8_t kFlagVolume = 0;
inline constexpr std::uint8_t kFlagCoeffs = 1;
inline constexpr std::size_t kFw3dHeaderBytes = 24;

struct Fw3dHeader {
  std::uint8_t flags = kFlagVolume;
  Shape3 shape{};
};

inline void write_fw3d_header(std::ostream& os, const Fw3dHeader& h) {
  os.write(kFw3dMagic, 4);
  write_le<std::uint16_t>(os, kFw3dVersion);
  write_le<std::uint8_t>(os, kDtypeFloat32);
  write_le<std::uint8_t>(os, h.flags);
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(h.shape.d0));
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(h.shape.d1));
  write_le<std::uint32_t>(os, static_cast<std::uint32_t>(h.shape.d2));
  write_le<std::uint32_t>(os, 0);
}

inline Fw3dHeader read_fw3d_header(std::istream& is, std::uint8_t expected_flags) {
  char magic[4] = {};
  if (!is.read(magic, 4)) throw IoError("truncated FW3D header");
  if (std::string(magic, 4) != std::string(kFw3dMagic, 4)) throw FormatError("bad FW3D magic");
  if (read_le<std::uint16_t>(is, "FW3D header") != kFw3dVersion) throw FormatError("unsupported FW3D version");
  if (read_le<std::uint8_t>(is, "FW3D header") != kDtypeFloat32) throw FormatError("unsupported FW3D dtype");
  Fw3dHeader h;
  h.flags = read_le<std::uint8_t>(is, "FW3D header");
  if (h.flags != expected_flags) throw FormatError("unexpected FW3D flags");
  h.shape.d0 = read_le<std::uint32_t>(is, "FW3D header");
  h.shape.d1 = read_le<std::uint32_t>(is, "FW3D header");
  h.shape.d2 = read_le<std::uint32_t>(is, "FW3D header");
  read_le<std::uint32_t>(is, "FW3D header");
  if (h.shape.count() == 0) throw FormatError("FW3D dims must be positive");
  return h;
}

// Bytes remaining between the current read position and end of stream.
inline std::uint64_t remaining_bytes(std::istream& is) {
  const auto here = is.tellg();
  is.seekg(0, std::ios::end);
  const auto end = is.tellg();
  is.seekg(here);
  return static_cast<std::uint64_t>(end - here);
}

inline std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return is;
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  return os;
}

}  // namespace fastwdm::detail
