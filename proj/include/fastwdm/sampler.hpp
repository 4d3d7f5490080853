#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "fastwdm/denoiser.hpp"
#include "fastwdm/diffusion.hpp"
#include "fastwdm/sample.hpp"

namespace fastwdm {

struct SamplerConfig {
  bool composite_known_region = true;
  std::optional<double> clamp_x0;  // image-space bound on each x0 estimate
  std::uint64_t seed = 0;
  double coeff_scale = kDefaultCoeffScale;

  void validate() const;
};

// Anything that maps (24-channel conditioned state, t, T) to an 8-channel x0 estimate.
using X0Predictor = std::function<Activations(const Activations& input, int t, int T)>;

X0Predictor as_predictor(const DenoiserModel& model);

/// Reverse loop from x_T ~ N(0, I) down to t = 1, then compositing and back-normalization.
/// The result is in raw intensities (sample.norm inverted).
Volume3D inpaint(const X0Predictor& predictor, const InpaintSample& sample, const Schedule& s,
                 const SamplerConfig& cfg);
Volume3D inpaint(const DenoiserModel& model, const InpaintSample& sample, const Schedule& s,
                 const SamplerConfig& cfg);

// Fills the mask with the mean of v over unmasked nonzero voxels; result in raw intensities.
Volume3D mean_fill_baseline(const InpaintSample& sample);

}  // namespace fastwdm
