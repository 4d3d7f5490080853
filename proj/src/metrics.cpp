#include "fastwdm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace fastwdm {
namespace {

void require_same_shape(const Volume3D& a, const Volume3D& b) {
  if (a.shape() != b.shape()) throw ShapeError("metric inputs differ in dims: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
}

double masked_mse(const Volume3D& a, const Volume3D& b, const MaskVolume* region) {
  require_same_shape(a, b);
  if (region && region->shape() != a.shape()) throw ShapeError("metric region dims differ");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (region && !region->contains(i)) continue;
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    sum += d * d;
    ++count;
  }
  if (count == 0) throw ValidationError("metric region is empty");
  return sum / static_cast<double>(count);
}

// Truncated-and-renormalized 1D Gaussian smoothing along `axis` of a d0 x d1 x d2 field.
void smooth_axis(std::vector<double>& field, const Shape3& s, int axis, const std::vector<double>& kernel) {
  const int radius = static_cast<int>(kernel.size() / 2);
  const std::size_t dims[3] = {s.d0, s.d1, s.d2};
  const std::size_t strides[3] = {s.d1 * s.d2, s.d2, 1};
  const std::size_t len = dims[axis];
  const std::size_t stride = strides[axis];
  std::vector<double> line(len);
  std::vector<double> out(len);
  for (std::size_t base = 0; base < field.size(); ++base) {
    // Visit each line once, from its first element.
    if ((base / stride) % len != 0) continue;
    for (std::size_t x = 0; x < len; ++x) line[x] = field[base + x * stride];
    for (std::size_t x = 0; x < len; ++x) {
      double acc = 0.0;
      double wsum = 0.0;
      for (int o = -radius; o <= radius; ++o) {
        const auto y = static_cast<std::ptrdiff_t>(x) + o;
        if (y < 0 || y >= static_cast<std::ptrdiff_t>(len)) continue;
        const double w = kernel[static_cast<std::size_t>(o + radius)];
        acc += w * line[static_cast<std::size_t>(y)];
        wsum += w;
      }
      out[x] = acc / wsum;
    }
    for (std::size_t x = 0; x < len; ++x) field[base + x * stride] = out[x];
  }
}

std::vector<double> ssim_map(const Volume3D& a, const Volume3D& b, double data_range, const SsimWindow& window) {
  require_same_shape(a, b);
  if (!(data_range > 0.0)) throw ValidationError("data_range must be positive");
  if (window.size < 1 || window.size % 2 == 0 || !(window.sigma > 0.0)) {
    throw ValidationError("SSIM window must have odd size and positive sigma");
  }
  const Shape3& s = a.shape();
  const auto ws = static_cast<std::size_t>(window.size);
  if (s.d0 < ws || s.d1 < ws || s.d2 < ws) throw ValidationError("volume smaller than the SSIM window");

  std::vector<double> kernel(ws);
  const int radius = window.size / 2;
  for (int o = -radius; o <= radius; ++o) {
    kernel[static_cast<std::size_t>(o + radius)] = std::exp(-0.5 * o * o / (window.sigma * window.sigma));
  }

  const std::size_t n = a.size();
  std::vector<double> mu_a(n), mu_b(n), aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = a[i];
    const double y = b[i];
    mu_a[i] = x;
    mu_b[i] = y;
    aa[i] = x * x;
    bb[i] = y * y;
    ab[i] = x * y;
  }
  for (auto* f : {&mu_a, &mu_b, &aa, &bb, &ab}) {
    for (int axis = 0; axis < 3; ++axis) smooth_axis(*f, s, axis, kernel);
  }

  const double c1 = (0.01 * data_range) * (0.01 * data_range);
  const double c2 = (0.03 * data_range) * (0.03 * data_range);
  std::vector<double> map(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ma = mu_a[i];
    const double mb = mu_b[i];
    const double va = aa[i] - ma * ma;
    const double vb = bb[i] - mb * mb;
    const double cov = ab[i] - ma * mb;
    map[i] = ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
  }
  return map;
}

}  // namespace

std::string to_string(MetricRegion r) { return r == MetricRegion::Whole ? "whole" : "masked"; }

double mse(const Volume3D& a, const Volume3D& b) { return masked_mse(a, b, nullptr); }
double mse(const Volume3D& a, const Volume3D& b, const MaskVolume& region) { return masked_mse(a, b, &region); }

double psnr_from_mse(double mse_value, double data_range) {
  if (!(data_range > 0.0)) throw ValidationError("data_range must be positive");
  if (mse_value == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(data_range * data_range / mse_value);
}

double psnr(const Volume3D& a, const Volume3D& b, double data_range) {
  return psnr_from_mse(mse(a, b), data_range);
}

double psnr(const Volume3D& a, const Volume3D& b, double data_range, const MaskVolume& region) {
  return psnr_from_mse(mse(a, b, region), data_range);
}

double ssim3d(const Volume3D& a, const Volume3D& b, double data_range, const SsimWindow& window) {
  const auto map = ssim_map(a, b, data_range, window);
  double sum = 0.0;
  for (double v : map) sum += v;
  return sum / static_cast<double>(map.size());
}

double ssim3d(const Volume3D& a, const Volume3D& b, double data_range, const MaskVolume& region,
              const SsimWindow& window) {
  if (region.shape() != a.shape()) throw ShapeError("metric region dims differ");
  const auto map = ssim_map(a, b, data_range, window);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (region.contains(i)) {
      sum += map[i];
      ++count;
    }
  }
  if (count == 0) throw ValidationError("metric region is empty");
  return sum / static_cast<double>(count);
}

namespace {

double default_range(const Volume3D& gt, std::optional<double> data_range) {
  if (data_range) return *data_range;
  const auto [lo, hi] = std::minmax_element(gt.values().begin(), gt.values().end());
  const double range = static_cast<double>(*hi) - static_cast<double>(*lo);
  if (!(range > 0.0)) throw DegenerateInputError("ground truth is constant; pass an explicit data_range");
  return range;
}

}  // namespace

MetricReport evaluate(const Volume3D& pred, const Volume3D& gt, std::optional<double> data_range,
                      const SsimWindow& window) {
  MetricReport r;
  r.region = MetricRegion::Whole;
  r.data_range = default_range(gt, data_range);
  r.mse = mse(pred, gt);
  r.psnr = psnr_from_mse(r.mse, r.data_range);
  r.ssim = ssim3d(pred, gt, r.data_range, window);
  return r;
}

MetricReport evaluate(const Volume3D& pred, const Volume3D& gt, const MaskVolume& region,
                      std::optional<double> data_range, const SsimWindow& window) {
  MetricReport r;
  r.region = MetricRegion::Masked;
  r.data_range = default_range(gt, data_range);
  r.mse = mse(pred, gt, region);
  r.psnr = psnr_from_mse(r.mse, r.data_range);
  r.ssim = ssim3d(pred, gt, r.data_range, region, window);
  return r;
}

void write_metric_report(const std::vector<MetricRow>& rows, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << "volume_id,region,ssim,mse,psnr,data_range\n";
  char line[256];
  for (const auto& row : rows) {
    const auto& r = row.report;
    std::snprintf(line, sizeof line, ",%s,%.9g,%.9g,%.9g,%.9g\n", to_string(r.region).c_str(), r.ssim, r.mse,
                  r.psnr, r.data_range);
    os << row.volume_id << line;
  }
  if (!os.flush()) throw IoError("failed writing " + path.string());
}

}  // namespace fastwdm
