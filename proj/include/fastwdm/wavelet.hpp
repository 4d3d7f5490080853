#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "fastwdm/tensor.hpp"
#include "fastwdm/volume.hpp"

namespace fastwdm {

inline constexpr std::size_t kNumBands = 8;

// Letter i names the filter applied along axis i (l = low-pass, h = high-pass).
inline constexpr std::array<std::string_view, kNumBands> kBandNames = {"lll", "llh", "lhl", "lhh",
                                                                         "hll", "hlh", "hhl", "hhh"};

// 2^{-3/2}: turns the lll band into the 2x2x2 block mean, so a [-1, 1] image keeps a [-1, 1] lll band.
inline const double kDefaultCoeffScale = 1.0 / (2.0 * std::sqrt(2.0));

/// Single-level 3D Haar decomposition: eight half-resolution bands plus the scale they carry.
class WaveletCoeffs {
 public:
  WaveletCoeffs() = default;
  WaveletCoeffs(Shape3 band_shape, double scale);
  WaveletCoeffs(ChannelTensor<float> bands, double scale);

  const Shape3& band_shape() const { return bands_.shape(); }
  double scale() const { return scale_; }

  std::span<float> band(std::size_t b) { return bands_.channel(b); }
  std::span<const float> band(std::size_t b) const { return bands_.channel(b); }

  ChannelTensor<float>& tensor() { return bands_; }
  const ChannelTensor<float>& tensor() const { return bands_; }

  std::vector<float>& data() { return bands_.data(); }
  const std::vector<float>& data() const { return bands_.data(); }

  bool all_finite() const;

 private:
  ChannelTensor<float> bands_;
  double scale_ = 1.0;
};

namespace haar {

// Sign of input voxel (x, y, z) of a 2x2x2 block within band b.
constexpr double sign(std::size_t band, std::size_t x, std::size_t y, std::size_t z) {
  const bool h0 = (band >> 2) & 1U;
  const bool h1 = (band >> 1) & 1U;
  const bool h2 = band & 1U;
  const int s = ((h0 && x == 0) ? -1 : 1) * ((h1 && y == 0) ? -1 : 1) * ((h2 && z == 0) ? -1 : 1);
  return s;
}

/// Forward transform of a volume laid out as `shape`; every coefficient is multiplied by `scale`.
template <class Real>
ChannelTensor<Real> analysis(std::span<const Real> vol, const Shape3& shape, double scale) {
  if (!shape.all_even()) throw ShapeError("dwt3 needs even dims, got " + to_string(shape));
  if (vol.size() != shape.count()) throw ShapeError("dwt3 input length mismatch");
  if (!(scale > 0.0)) throw ValidationError("coefficient scale must be positive");
  const Shape3 half = shape.halved();
  ChannelTensor<Real> out(kNumBands, half);
  // Separable l/h passes collapse to a signed sum over each 2x2x2 block, times (1/sqrt 2)^3.
  const double factor = scale / (2.0 * std::sqrt(2.0));
  const std::size_t n = half.count();
  Real* dst = out.data().data();
  for (std::size_t i = 0; i < half.d0; ++i) {
    for (std::size_t j = 0; j < half.d1; ++j) {
      for (std::size_t k = 0; k < half.d2; ++k) {
        double a[2][2][2];
        for (std::size_t x = 0; x < 2; ++x)
          for (std::size_t y = 0; y < 2; ++y)
            for (std::size_t z = 0; z < 2; ++z) a[x][y][z] = vol[shape.index(2 * i + x, 2 * j + y, 2 * k + z)];
        // Axis 0 first, then 1, then 2.
        double p0[2][2][2];
        for (std::size_t y = 0; y < 2; ++y)
          for (std::size_t z = 0; z < 2; ++z) {
            p0[0][y][z] = a[0][y][z] + a[1][y][z];
            p0[1][y][z] = a[1][y][z] - a[0][y][z];
          }
        double p1[2][2][2];
        for (std::size_t f = 0; f < 2; ++f)
          for (std::size_t z = 0; z < 2; ++z) {
            p1[f][0][z] = p0[f][0][z] + p0[f][1][z];
            p1[f][1][z] = p0[f][1][z] - p0[f][0][z];
          }
        const std::size_t idx = half.index(i, j, k);
        for (std::size_t f0 = 0; f0 < 2; ++f0)
          for (std::size_t f1 = 0; f1 < 2; ++f1) {
            const std::size_t b = f0 * 4 + f1 * 2;
            dst[b * n + idx] = static_cast<Real>(factor * (p1[f0][f1][0] + p1[f0][f1][1]));
            dst[(b + 1) * n + idx] = static_cast<Real>(factor * (p1[f0][f1][1] - p1[f0][f1][0]));
          }
      }
    }
  }
  return out;
}

/// Exact inverse of analysis(): undoes `scale` and returns a volume of doubled dims.
template <class Real>
std::vector<Real> synthesis(const ChannelTensor<Real>& coeffs, double scale) {
  if (coeffs.channels() != kNumBands) throw ShapeError("idwt3 needs 8 bands");
  if (!(scale > 0.0)) throw ValidationError("coefficient scale must be positive");
  const Shape3 half = coeffs.shape();
  const Shape3 full = half.doubled();
  std::vector<Real> out(full.count());
  const double factor = 1.0 / (scale * 2.0 * std::sqrt(2.0));
  const std::size_t n = half.count();
  const Real* src = coeffs.data().data();
  for (std::size_t i = 0; i < half.d0; ++i) {
    for (std::size_t j = 0; j < half.d1; ++j) {
      for (std::size_t k = 0; k < half.d2; ++k) {
        const std::size_t idx = half.index(i, j, k);
        double c[2][2][2];
        for (std::size_t b = 0; b < kNumBands; ++b) c[b >> 2][(b >> 1) & 1U][b & 1U] = src[b * n + idx];
        // Undo axis 2, then 1, then 0.
        double p1[2][2][2];
        for (std::size_t f0 = 0; f0 < 2; ++f0)
          for (std::size_t f1 = 0; f1 < 2; ++f1) {
            p1[f0][f1][0] = c[f0][f1][0] - c[f0][f1][1];
            p1[f0][f1][1] = c[f0][f1][0] + c[f0][f1][1];
          }
        double p0[2][2][2];
        for (std::size_t f0 = 0; f0 < 2; ++f0)
          for (std::size_t z = 0; z < 2; ++z) {
            p0[f0][0][z] = p1[f0][0][z] - p1[f0][1][z];
            p0[f0][1][z] = p1[f0][0][z] + p1[f0][1][z];
          }
        for (std::size_t y = 0; y < 2; ++y)
          for (std::size_t z = 0; z < 2; ++z) {
            out[full.index(2 * i, 2 * j + y, 2 * k + z)] = static_cast<Real>(factor * (p0[0][y][z] - p0[1][y][z]));
            out[full.index(2 * i + 1, 2 * j + y, 2 * k + z)] =
                static_cast<Real>(factor * (p0[0][y][z] + p0[1][y][z]));
          }
      }
    }
  }
  return out;
}

}  // namespace haar

WaveletCoeffs dwt3(const Volume3D& vol, double coeff_scale = kDefaultCoeffScale);
Volume3D idwt3(const WaveletCoeffs& coeffs);

// Coefficient sets use the FW3D container with flags = 1 (band dims in the header, 8 payloads).
void save_coeffs(const WaveletCoeffs& coeffs, const std::filesystem::path& path);
WaveletCoeffs load_coeffs(const std::filesystem::path& path);

}  // namespace fastwdm
