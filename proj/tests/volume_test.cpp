#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "fastwdm/volume.hpp"
#include "test_util.hpp"

using namespace fastwdm;
using fastwdm::testing::random_volume;
using fastwdm::testing::TempDir;

namespace {

std::vector<char> read_bytes(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& p, const std::vector<char>& bytes) {
  std::ofstream os(p, std::ios::binary);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST(VolumeIo, RoundTripIsBitExact) {
  TempDir dir;
  const Volume3D v = random_volume({8, 8, 8}, 1);
  save_volume(v, dir / "v.fw3d");
  const Volume3D back = load_volume(dir / "v.fw3d");
  ASSERT_EQ(back.shape(), v.shape());
  EXPECT_EQ(std::memcmp(back.values().data(), v.values().data(), v.size() * sizeof(float)), 0);
}

TEST(VolumeIo, ZeroVolumeLayout) {
  TempDir dir;
  save_volume(Volume3D({2, 2, 2}), dir / "z.fw3d");
  const auto bytes = read_bytes(dir / "z.fw3d");
  ASSERT_EQ(bytes.size(), 24u + 8u * 4u);
  EXPECT_EQ(std::string(bytes.data(), 4), "FW3D");
  EXPECT_EQ(bytes[4], 1);  // version, little-endian u16
  EXPECT_EQ(bytes[5], 0);
  EXPECT_EQ(bytes[6], 0);  // dtype
  EXPECT_EQ(bytes[7], 0);  // flags
  for (int a = 0; a < 3; ++a) {
    EXPECT_EQ(bytes[8 + 4 * a], 2);
    EXPECT_EQ(bytes[9 + 4 * a], 0);
  }
  for (std::size_t i = 20; i < bytes.size(); ++i) EXPECT_EQ(bytes[i], 0) << "byte " << i;
}

TEST(VolumeIo, SavingTwiceGivesIdenticalFiles) {
  TempDir dir;
  const Volume3D v = random_volume({4, 6, 8}, 7);
  save_volume(v, dir / "a.fw3d");
  save_volume(v, dir / "b.fw3d");
  EXPECT_EQ(read_bytes(dir / "a.fw3d"), read_bytes(dir / "b.fw3d"));
}

TEST(VolumeIo, RejectsNaN) {
  TempDir dir;
  Volume3D v({2, 2, 2});
  v[3] = std::numeric_limits<float>::quiet_NaN();
  EXPECT_THROW(save_volume(v, dir / "nan.fw3d"), ValidationError);
}

TEST(VolumeIo, BadMagicIsFormatError) {
  TempDir dir;
  save_volume(Volume3D({2, 2, 2}), dir / "v.fw3d");
  auto bytes = read_bytes(dir / "v.fw3d");
  std::memcpy(bytes.data(), "XXXX", 4);
  write_bytes(dir / "bad.fw3d", bytes);
  EXPECT_THROW(load_volume(dir / "bad.fw3d"), FormatError);
}

TEST(VolumeIo, BadVersionOrDtypeIsFormatError) {
  TempDir dir;
  save_volume(Volume3D({2, 2, 2}), dir / "v.fw3d");
  auto bytes = read_bytes(dir / "v.fw3d");
  auto version = bytes;
  version[4] = 9;
  write_bytes(dir / "ver.fw3d", version);
  EXPECT_THROW(load_volume(dir / "ver.fw3d"), FormatError);
  auto dtype = bytes;
  dtype[6] = 3;
  write_bytes(dir / "dt.fw3d", dtype);
  EXPECT_THROW(load_volume(dir / "dt.fw3d"), FormatError);
}

TEST(VolumeIo, PayloadLengthMismatchIsIoError) {
  TempDir dir;
  save_volume(Volume3D({4, 4, 4}), dir / "v.fw3d");
  auto bytes = read_bytes(dir / "v.fw3d");
  bytes.resize(24 + 100 * 4);
  write_bytes(dir / "short.fw3d", bytes);
  EXPECT_THROW(load_volume(dir / "short.fw3d"), IoError);
  EXPECT_THROW(load_volume(dir / "missing.fw3d"), IoError);
}

TEST(VolumeIo, UnwritablePathIsIoError) {
  EXPECT_THROW(save_volume(Volume3D({2, 2, 2}), "/nonexistent_dir_fastwdm/x.fw3d"), IoError);
}

TEST(Volume, DataLengthMustMatchDims) {
  EXPECT_THROW(Volume3D({2, 2, 2}, std::vector<float>(7)), ShapeError);
  EXPECT_THROW(Volume3D({0, 2, 2}), ShapeError);
}

TEST(Mask, RejectsNonBinaryValues) {
  Volume3D v({2, 2, 2});
  v[0] = 0.5f;
  EXPECT_THROW(MaskVolume{v}, ValidationError);
}

TEST(Normalize, UniformRampMapsExactlyToUnitInterval) {
  // 0..1000 in a 7 x 11 x 13 volume (1001 voxels).
  std::vector<float> ramp(1001);
  for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<float>(i);
  const Volume3D v({7, 11, 13}, ramp);
  const auto [n, rec] = normalize(v, 0.005);
  const auto [lo, hi] = std::minmax_element(n.values().begin(), n.values().end());
  EXPECT_EQ(*lo, -1.0f);
  EXPECT_EQ(*hi, 1.0f);
  // Nearest rank: ceil(0.005 * 1001) = 6 -> value 5; ceil(0.995 * 1001) = 996 -> value 995.
  EXPECT_EQ(rec.clip_lo, 5.0);
  EXPECT_EQ(rec.clip_hi, 995.0);
}

TEST(Normalize, FixedPointWhenAlreadyInRange) {
  Volume3D v = random_volume({4, 4, 4}, 3);
  v[0] = -1.0f;
  v[1] = 1.0f;
  const auto [n, rec] = normalize(v, 0.0);
  EXPECT_EQ(rec.scale, 1.0);
  EXPECT_EQ(rec.offset, 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(n[i], v[i], 1e-7);
}

TEST(Normalize, ConstantVolumeIsDegenerate) {
  EXPECT_THROW(normalize(Volume3D({4, 4, 4}, 3.0f), 0.005), DegenerateInputError);
  EXPECT_THROW(normalize(random_volume({4, 4, 4}, 1), 0.5), ValidationError);
}

TEST(Normalize, InverseRecoversUnclippedVoxels) {
  const Volume3D v = random_volume({8, 8, 8}, 11, 20.0f, 500.0f);
  const auto [n, rec] = normalize(v, 0.005);
  const Volume3D back = denormalize(n, rec);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = v[i];
    if (x < rec.clip_lo || x > rec.clip_hi) continue;
    EXPECT_NEAR(back[i], x, 1e-5 * std::abs(x));
    EXPECT_GE(n[i], -1.0f);
    EXPECT_LE(n[i], 1.0f);
  }
}

TEST(Denormalize, EndpointsMapToClipBounds) {
  const NormRecord rec = NormRecord::from_clip_bounds(10.0, 30.0);
  const Volume3D lo = denormalize(Volume3D({2, 2, 2}, -1.0f), rec);
  const Volume3D hi = denormalize(Volume3D({2, 2, 2}, 1.0f), rec);
  for (float x : lo.values()) EXPECT_EQ(x, 10.0f);
  for (float x : hi.values()) EXPECT_EQ(x, 30.0f);
}

TEST(Denormalize, RandomRoundTripRelativeError) {
  const NormRecord rec = NormRecord::from_clip_bounds(-250.0, 1750.0);
  const Volume3D n = random_volume({8, 8, 8}, 5);
  const Volume3D raw = denormalize(n, rec);
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double oracle = (static_cast<double>(n[i]) - rec.offset) / rec.scale;
    EXPECT_NEAR(raw[i], oracle, 1e-5 * std::max(1.0, std::abs(oracle)));
  }
}

TEST(ApplyMask, EmptyFullAndSingleVoxel) {
  const Volume3D g = random_volume({4, 4, 4}, 9, 0.5f, 1.0f);
  EXPECT_EQ(apply_mask(g, MaskVolume(Volume3D({4, 4, 4}))), g);
  const Volume3D full = apply_mask(g, MaskVolume(Volume3D({4, 4, 4}, 1.0f)));
  for (float x : full.values()) EXPECT_EQ(x, 0.0f);

  Volume3D single({4, 4, 4});
  single.at(1, 1, 1) = 1.0f;
  const Volume3D v = apply_mask(g, MaskVolume(single));
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i == g.shape().index(1, 1, 1)) {
      EXPECT_EQ(v[i], 0.0f);
    } else {
      EXPECT_EQ(v[i], g[i]);
    }
  }
}

TEST(ApplyMask, IdempotentAndShapeChecked) {
  const Volume3D g = random_volume({6, 4, 2}, 2);
  Volume3D mv({6, 4, 2});
  for (std::size_t i = 0; i < mv.size(); i += 3) mv[i] = 1.0f;
  const MaskVolume m(mv);
  const Volume3D once = apply_mask(g, m);
  EXPECT_EQ(apply_mask(once, m), once);
  EXPECT_THROW(apply_mask(random_volume({4, 4, 2}, 1), m), ShapeError);
}
