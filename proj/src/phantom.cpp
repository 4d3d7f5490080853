#include "fastwdm/phantom.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "fastwdm/rng.hpp"

namespace fastwdm {
namespace {

struct Blob {
  std::array<double, 3> center;
  std::array<double, 3> semi_axes;
  double amplitude;
};

void add_blob(Volume3D& vol, const Blob& b, double p) {
  const Shape3& s = vol.shape();
  for (std::size_t i = 0; i < s.d0; ++i) {
    const double x = (static_cast<double>(i) - b.center[0]) / b.semi_axes[0];
    for (std::size_t j = 0; j < s.d1; ++j) {
      const double y = (static_cast<double>(j) - b.center[1]) / b.semi_axes[1];
      for (std::size_t k = 0; k < s.d2; ++k) {
        const double z = (static_cast<double>(k) - b.center[2]) / b.semi_axes[2];
        const double r2 = x * x + y * y + z * z;
        if (r2 < 1.0) vol.at(i, j, k) += static_cast<float>(b.amplitude * std::pow(1.0 - r2, p));
      }
    }
  }
}

}  // namespace

void PhantomSpec::validate() const {
  if (shape.count() == 0 || !shape.all_even()) throw ValidationError("phantom dims must be positive and even");
  if (min_ellipsoids < 1 || max_ellipsoids < min_ellipsoids) throw ValidationError("bad ellipsoid count range");
  if (!(smoothness > 0.0)) throw ValidationError("smoothness must be positive");
  if (min_mask_radius < 1 || max_mask_radius < min_mask_radius) throw ValidationError("bad mask radius range");
  const auto smallest = std::min({shape.d0, shape.d1, shape.d2});
  if (static_cast<std::size_t>(2 * max_mask_radius + 1) > smallest) {
    throw ValidationError("mask radius does not fit the phantom dims");
  }
  if (max_mask_attempts < 1) throw ValidationError("max_mask_attempts must be positive");
}

Phantom gen_phantom(const PhantomSpec& spec) {
  spec.validate();
  SeededRng rng(spec.seed);
  const std::array<double, 3> dims = {static_cast<double>(spec.shape.d0), static_cast<double>(spec.shape.d1),
                                      static_cast<double>(spec.shape.d2)};

  Volume3D raw(spec.shape);
  const auto n_blobs = rng.uniform_int(spec.min_ellipsoids, spec.max_ellipsoids);
  for (std::int64_t b = 0; b < n_blobs; ++b) {
    Blob blob{};
    for (std::size_t a = 0; a < 3; ++a) {
      if (b == 0) {
        // A large body blob near the centre guarantees room for the mask.
        blob.center[a] = dims[a] * rng.uniform(0.45, 0.55) - 0.5;
        blob.semi_axes[a] = dims[a] * rng.uniform(0.32, 0.44);
      } else {
        blob.center[a] = dims[a] * rng.uniform(0.25, 0.75) - 0.5;
        blob.semi_axes[a] = dims[a] * rng.uniform(0.1, 0.3);
      }
    }
    blob.amplitude = b == 0 ? rng.uniform(0.4, 0.6) : rng.uniform(0.2, 0.8);
    add_blob(raw, blob, spec.smoothness);
  }

  const auto peak = *std::max_element(raw.values().begin(), raw.values().end());
  const float foreground_floor = 1e-3f * peak;

  Volume3D mask_vol(spec.shape);
  bool placed = false;
  for (int attempt = 0; attempt < spec.max_mask_attempts && !placed; ++attempt) {
    const auto r = rng.uniform_int(spec.min_mask_radius, spec.max_mask_radius);
    std::array<std::int64_t, 3> c{};
    for (std::size_t a = 0; a < 3; ++a) c[a] = rng.uniform_int(r, static_cast<std::int64_t>(dims[a]) - 1 - r);
    bool inside = true;
    for (std::int64_t i = c[0] - r; i <= c[0] + r && inside; ++i)
      for (std::int64_t j = c[1] - r; j <= c[1] + r && inside; ++j)
        for (std::int64_t k = c[2] - r; k <= c[2] + r && inside; ++k) {
          const auto d2 = (i - c[0]) * (i - c[0]) + (j - c[1]) * (j - c[1]) + (k - c[2]) * (k - c[2]);
          if (d2 <= r * r && raw.at(i, j, k) <= foreground_floor) inside = false;
        }
    if (!inside) continue;
    for (std::int64_t i = c[0] - r; i <= c[0] + r; ++i)
      for (std::int64_t j = c[1] - r; j <= c[1] + r; ++j)
        for (std::int64_t k = c[2] - r; k <= c[2] + r; ++k) {
          const auto d2 = (i - c[0]) * (i - c[0]) + (j - c[1]) * (j - c[1]) + (k - c[2]) * (k - c[2]);
          if (d2 <= r * r) mask_vol.at(i, j, k) = 1.0f;
        }
    placed = true;
  }
  if (!placed) {
    throw GenerationError("could not place a mask inside the foreground (seed " + std::to_string(spec.seed) + ")");
  }

  Phantom out{raw, prepare_training_sample(raw, MaskVolume(std::move(mask_vol)), spec.pct)};
  return out;
}

std::vector<InpaintSample> make_phantom_dataset(std::size_t count, std::uint64_t base_seed, PhantomSpec spec) {
  std::vector<InpaintSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    spec.seed = base_seed + i;
    out.push_back(gen_phantom(spec).sample);
  }
  return out;
}

CroppedSample crop_to_cube(const Volume3D& g, const MaskVolume& m, std::size_t size) {
  if (g.shape() != m.shape()) throw ShapeError("crop: image and mask dims differ");
  const Shape3& s = g.shape();
  if (size == 0 || size % 2 != 0) throw ValidationError("crop size must be positive and even");
  if (size > s.d0 || size > s.d1 || size > s.d2) throw ValidationError("crop size exceeds volume dims");

  const std::size_t dims[3] = {s.d0, s.d1, s.d2};
  std::array<std::size_t, 3> lo = {s.d0, s.d1, s.d2};
  std::array<std::size_t, 3> hi = {0, 0, 0};
  bool any = false;
  for (std::size_t i = 0; i < s.d0; ++i)
    for (std::size_t j = 0; j < s.d1; ++j)
      for (std::size_t k = 0; k < s.d2; ++k) {
        if (!m.contains(s.index(i, j, k))) continue;
        any = true;
        const std::size_t p[3] = {i, j, k};
        for (std::size_t a = 0; a < 3; ++a) {
          lo[a] = std::min(lo[a], p[a]);
          hi[a] = std::max(hi[a], p[a]);
        }
      }
  if (!any) throw ValidationError("crop needs a nonempty mask");

  std::array<std::size_t, 3> start{};
  for (std::size_t a = 0; a < 3; ++a) {
    if (hi[a] - lo[a] + 1 > size) throw ValidationError("mask extent exceeds the crop cube");
    const auto centre = static_cast<std::int64_t>((lo[a] + hi[a] + 1) / 2);
    const auto first = centre - static_cast<std::int64_t>(size / 2);
    start[a] = static_cast<std::size_t>(std::clamp<std::int64_t>(first, 0, static_cast<std::int64_t>(dims[a] - size)));
  }

  const Shape3 cube{size, size, size};
  Volume3D gc(cube);
  Volume3D mc(cube);
  for (std::size_t i = 0; i < size; ++i)
    for (std::size_t j = 0; j < size; ++j)
      for (std::size_t k = 0; k < size; ++k) {
        gc.at(i, j, k) = g.at(start[0] + i, start[1] + j, start[2] + k);
        mc.at(i, j, k) = m.volume().at(start[0] + i, start[1] + j, start[2] + k);
      }
  MaskVolume mask(std::move(mc));
  Volume3D vc = apply_mask(gc, mask);
  return {std::move(gc), std::move(mask), std::move(vc)};
}

}  // namespace fastwdm
