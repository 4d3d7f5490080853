#include "fastwdm/volume.hpp"

#include <algorithm>
#include <cmath>

#include "fw3d_format.hpp"

namespace fastwdm {

std::string to_string(const Shape3& s) {
  return std::to_string(s.d0) + "x" + std::to_string(s.d1) + "x" + std::to_string(s.d2);
}

Volume3D::Volume3D(Shape3 shape, float fill) : shape_(shape), data_(shape.count(), fill) {
  if (shape.count() == 0) throw ShapeError("volume dims must be positive");
}

Volume3D::Volume3D(Shape3 shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
  if (shape.count() == 0) throw ShapeError("volume dims must be positive");
  if (data_.size() != shape.count()) {
    throw ShapeError("volume data length " + std::to_string(data_.size()) + " does not match dims " +
                     to_string(shape));
  }
}

bool Volume3D::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

void Volume3D::require_finite(const char* what) const {
  if (!all_finite()) throw ValidationError(std::string(what) + ": volume contains non-finite values");
}

MaskVolume::MaskVolume(Volume3D vol) : vol_(std::move(vol)) {
  for (float v : vol_.values()) {
    if (v != 0.0f && v != 1.0f) throw ValidationError("mask values must be exactly 0 or 1");
  }
}

std::size_t MaskVolume::count() const {
  return static_cast<std::size_t>(std::count(vol_.values().begin(), vol_.values().end(), 1.0f));
}

NormRecord NormRecord::from_clip_bounds(double lo, double hi) {
  NormRecord rec;
  rec.clip_lo = lo;
  rec.clip_hi = hi;
  rec.scale = 2.0 / (hi - lo);
  rec.offset = -1.0 - lo * rec.scale;
  rec.validate();
  return rec;
}

void NormRecord::validate() const {
  if (!(clip_lo < clip_hi)) throw ValidationError("norm record needs clip_lo < clip_hi");
  if (!(scale > 0.0) || !std::isfinite(scale) || !std::isfinite(offset)) {
    throw ValidationError("norm record needs a positive finite scale");
  }
}

Volume3D load_volume(const std::filesystem::path& path) {
  auto is = detail::open_for_read(path);
  const auto header = detail::read_fw3d_header(is, detail::kFlagVolume);
  const std::uint64_t expected = header.shape.count() * sizeof(float);
  const std::uint64_t actual = detail::remaining_bytes(is);
  if (actual != expected) {
    throw IoError(path.string() + ": payload has " + std::to_string(actual) + " bytes, header declares " +
                  std::to_string(expected));
  }
  std::vector<float> data(header.shape.count());
  detail::read_f32_block(is, data, "FW3D payload");
  return Volume3D(header.shape, std::move(data));
}

void save_volume(const Volume3D& vol, const std::filesystem::path& path) {
  vol.require_finite("save_volume");
  auto os = detail::open_for_write(path);
  detail::write_fw3d_header(os, {detail::kFlagVolume, vol.shape()});
  detail::write_f32_block(os, vol.values());
  if (!os.flush()) throw IoError("failed writing " + path.string());
}

double nearest_rank_quantile(std::span<const float> values, double q) {
  if (values.empty()) throw ValidationError("quantile of empty set");
  if (q < 0.0 || q > 1.0) throw ValidationError("quantile must lie in [0, 1]");
  std::vector<float> sorted(values.begin(), values.end());
  const auto n = sorted.size();
  // 1-based rank ceil(q * n), at least 1.
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1), sorted.end());
  return sorted[rank - 1];
}

std::pair<Volume3D, NormRecord> normalize(const Volume3D& vol, double pct) {
  if (!(pct >= 0.0 && pct < 0.5)) throw ValidationError("percentile fraction must lie in [0, 0.5)");
  vol.require_finite("normalize");
  const double lo = nearest_rank_quantile(vol.values(), pct);
  const double hi = nearest_rank_quantile(vol.values(), 1.0 - pct);
  if (!(lo < hi)) throw DegenerateInputError("cannot normalize a constant volume");
  const NormRecord rec = NormRecord::from_clip_bounds(lo, hi);

  Volume3D out(vol.shape());
  const double width = hi - lo;
  for (std::size_t i = 0; i < vol.size(); ++i) {
    const double x = std::clamp(static_cast<double>(vol[i]), lo, hi);
    const double y = 2.0 * (x - lo) / width - 1.0;
    out[i] = static_cast<float>(std::clamp(y, -1.0, 1.0));
  }
  return {std::move(out), rec};
}

Volume3D denormalize(const Volume3D& vol, const NormRecord& rec) {
  rec.validate();
  Volume3D out(vol.shape());
  const double half_width = 0.5 * (rec.clip_hi - rec.clip_lo);
  for (std::size_t i = 0; i < vol.size(); ++i) {
    out[i] = static_cast<float>((static_cast<double>(vol[i]) + 1.0) * half_width + rec.clip_lo);
  }
  out.require_finite("denormalize");
  return out;
}

Volume3D apply_mask(const Volume3D& g, const MaskVolume& m) {
  if (g.shape() != m.shape()) {
    throw ShapeError("mask dims " + to_string(m.shape()) + " differ from image dims " + to_string(g.shape()));
  }
  Volume3D v(g.shape());
  for (std::size_t i = 0; i < g.size(); ++i) v[i] = m.contains(i) ? 0.0f : g[i];
  return v;
}

}  // namespace fastwdm
