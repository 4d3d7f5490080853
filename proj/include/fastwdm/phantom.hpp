#pragma once

#include <cstdint>
#include <vector>

#include "fastwdm/sample.hpp"

namespace fastwdm {

struct PhantomSpec {
  Shape3 shape{32, 32, 32};
  std::uint64_t seed = 0;
  int min_ellipsoids = 3;
  int max_ellipsoids = 6;
  double smoothness = 2.0;  // exponent p of the (1 - r^2)^p blob profile
  int min_mask_radius = 3;
  int max_mask_radius = 6;
  int max_mask_attempts = 500;
  double pct = 0.005;

  void validate() const;
};

/// Raw phantom intensities (before normalization) together with the normalized sample.
struct Phantom {
  Volume3D raw_g;
  InpaintSample sample;
};

// Smooth superposition of ellipsoidal blobs on a zero background, normalized to [-1, 1],
// with one spherical mask placed strictly inside the foreground.
Phantom gen_phantom(const PhantomSpec& spec);

// Samples for seeds base_seed, base_seed + 1, ...
std::vector<InpaintSample> make_phantom_dataset(std::size_t count, std::uint64_t base_seed, PhantomSpec spec = {});

struct CroppedSample {
  Volume3D g;
  MaskVolume m;
  Volume3D v;
};

// Cube of edge `size` centred on the mask bounding box, shifted to stay inside the volume.
CroppedSample crop_to_cube(const Volume3D& g, const MaskVolume& m, std::size_t size);

}  // namespace fastwdm
