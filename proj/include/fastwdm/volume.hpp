#pragma once

#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "fastwdm/tensor.hpp"

namespace fastwdm {

/// Dense scalar field, float32 storage, axis 2 fastest.
class Volume3D {
 public:
  Volume3D() = default;
  explicit Volume3D(Shape3 shape, float fill = 0.0f);
  Volume3D(Shape3 shape, std::vector<float> data);

  const Shape3& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  float& at(std::size_t i, std::size_t j, std::size_t k) { return data_[shape_.index(i, j, k)]; }
  float at(std::size_t i, std::size_t j, std::size_t k) const { return data_[shape_.index(i, j, k)]; }
  float& operator[](std::size_t idx) { return data_[idx]; }
  float operator[](std::size_t idx) const { return data_[idx]; }

  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }

  bool all_finite() const;
  // Throws ValidationError if any voxel is NaN or infinite.
  void require_finite(const char* what) const;

  friend bool operator==(const Volume3D&, const Volume3D&) = default;

 private:
  Shape3 shape_{};
  std::vector<float> data_;
};

/// Binary (0/1) volume marking the region to inpaint.
class MaskVolume {
 public:
  MaskVolume() = default;
  // Throws ValidationError unless every voxel is exactly 0 or 1.
  explicit MaskVolume(Volume3D vol);

  const Volume3D& volume() const { return vol_; }
  const Shape3& shape() const { return vol_.shape(); }
  bool contains(std::size_t idx) const { return vol_[idx] != 0.0f; }
  std::size_t count() const;

 private:
  Volume3D vol_;
};

/// The affine intensity map applied by normalize(), plus the clip bounds it used.
/// normalized = scale * raw + offset; clip_lo maps to -1 and clip_hi to +1.
struct NormRecord {
  double scale = 1.0;
  double offset = 0.0;
  double clip_lo = -1.0;
  double clip_hi = 1.0;

  static NormRecord from_clip_bounds(double lo, double hi);
  void validate() const;
};

Volume3D load_volume(const std::filesystem::path& path);
void save_volume(const Volume3D& vol, const std::filesystem::path& path);

// Nearest-rank quantile of the voxel multiset, q in [0, 1].
double nearest_rank_quantile(std::span<const float> values, double q);

std::pair<Volume3D, NormRecord> normalize(const Volume3D& vol, double pct = 0.005);
Volume3D denormalize(const Volume3D& vol, const NormRecord& rec);

Volume3D apply_mask(const Volume3D& g, const MaskVolume& m);

}  // namespace fastwdm
