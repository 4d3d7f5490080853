#include "fastwdm/wavelet.hpp"

#include <algorithm>

#include "fw3d_format.hpp"

namespace fastwdm {

WaveletCoeffs::WaveletCoeffs(Shape3 band_shape, double scale) : bands_(kNumBands, band_shape), scale_(scale) {
  if (band_shape.count() == 0) throw ShapeError("band dims must be positive");
  if (!(scale > 0.0)) throw ValidationError("coefficient scale must be positive");
}

WaveletCoeffs::WaveletCoeffs(ChannelTensor<float> bands, double scale) : bands_(std::move(bands)), scale_(scale) {
  if (bands_.channels() != kNumBands) throw ShapeError("wavelet coefficients need exactly 8 bands");
  if (bands_.shape().count() == 0) throw ShapeError("band dims must be positive");
  if (!(scale > 0.0)) throw ValidationError("coefficient scale must be positive");
}

bool WaveletCoeffs::all_finite() const {
  return std::all_of(data().begin(), data().end(), [](float v) { return std::isfinite(v); });
}

WaveletCoeffs dwt3(const Volume3D& vol, double coeff_scale) {
  return WaveletCoeffs(haar::analysis<float>(vol.values(), vol.shape(), coeff_scale), coeff_scale);
}

Volume3D idwt3(const WaveletCoeffs& coeffs) {
  if (coeffs.tensor().channels() != kNumBands || coeffs.band_shape().count() == 0) {
    throw ShapeError("inconsistent coefficient set");
  }
  return Volume3D(coeffs.band_shape().doubled(), haar::synthesis<float>(coeffs.tensor(), coeffs.scale()));
}

void save_coeffs(const WaveletCoeffs& coeffs, const std::filesystem::path& path) {
  if (!coeffs.all_finite()) throw ValidationError("save_coeffs: non-finite coefficients");
  auto os = detail::open_for_write(path);
  detail::write_fw3d_header(os, {detail::kFlagCoeffs, coeffs.band_shape()});
  detail::write_f64(os, coeffs.scale());
  detail::write_f32_block(os, coeffs.data());
  if (!os.flush()) throw IoError("failed writing " + path.string());
}

WaveletCoeffs load_coeffs(const std::filesystem::path& path) {
  auto is = detail::open_for_read(path);
  const auto header = detail::read_fw3d_header(is, detail::kFlagCoeffs);
  const double scale = detail::read_f64(is, "coefficient scale");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw FormatError("bad coefficient scale in " + path.string());
  WaveletCoeffs coeffs(header.shape, scale);
  const std::uint64_t expected = coeffs.data().size() * sizeof(float);
  if (detail::remaining_bytes(is) != expected) throw IoError(path.string() + ": coefficient payload length mismatch");
  detail::read_f32_block(is, coeffs.data(), "coefficient payload");
  return coeffs;
}

}  // namespace fastwdm
