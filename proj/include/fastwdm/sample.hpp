#pragma once

#include <optional>

#include "fastwdm/volume.hpp"

namespace fastwdm {

/// One inpainting task in normalized intensity space: ground truth g (absent at pure inference),
/// mask m, voided image v = g * (1 - m), and the record that maps results back to raw intensities.
struct InpaintSample {
  std::optional<Volume3D> g;
  MaskVolume m;
  Volume3D v;
  NormRecord norm;

  // Throws ShapeError / ValidationError if dims disagree or v != g * (1 - m).
  void validate() const;
};

// Training data from raw intensities: g is normalized, then voided.
InpaintSample prepare_training_sample(const Volume3D& raw_g, const MaskVolume& m, double pct = 0.005);

// Inference data from a raw voided image: v is normalized on its own range and re-voided so the
// masked region is zero in normalized space, as during training.
InpaintSample prepare_inference_sample(const Volume3D& raw_v, const MaskVolume& m, double pct = 0.005);

}  // namespace fastwdm
